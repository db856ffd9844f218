"""Sweep skip-gram settings and measure how well walk embeddings over query
subgraphs separate planted synonyms from other predicates at a threshold.

    python scripts/tune_embedding.py --graphs 20 --queries 5
"""

import argparse
import itertools
import time

from graph_squash.bench import suite_case
from graph_squash.embedding import TrainConfig, cosine, generate_walks, predicate_vector, train_skipgram
from graph_squash.qbs import qbs_extract_subgraph
from graph_squash.sparql import extract_predicates


def measure(cfg: TrainConfig, graphs: int, queries: int, threshold: float, walk_length: int,
            walks_per_entity: int):
    fp = fn = pos = neg = 0
    for i in range(graphs):
        graph, clusters, qs = suite_case(i, queries)
        cluster_of = {p: set(c) for c in clusters for p in c}
        for q in qs:
            g = qbs_extract_subgraph(graph, q)
            store = train_skipgram(generate_walks(g, walk_length, walks_per_entity, cfg.seed), cfg)
            for a in (p.value for p in extract_predicates(q)):
                for c in (p.value for p in g.predicates()):
                    if c == a:
                        continue
                    s = cosine(predicate_vector(store, a), predicate_vector(store, c))
                    if c in cluster_of[a]:
                        pos += 1
                        fn += s <= threshold
                    else:
                        neg += 1
                        fp += s > threshold
    return fp / max(neg, 1), fn / max(pos, 1)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--graphs", type=int, default=10)
    ap.add_argument("--queries", type=int, default=5)
    ap.add_argument("--threshold", type=float, default=0.5)
    ap.add_argument("--windows", type=int, nargs="+", default=[1, 5])
    ap.add_argument("--epochs", type=int, nargs="+", default=[5, 20])
    ap.add_argument("--dims", type=int, nargs="+", default=[32, 64])
    ap.add_argument("--walk-length", type=int, default=4)
    ap.add_argument("--walks-per-entity", type=int, default=10)
    args = ap.parse_args()

    print("window\tepochs\tdims\tfalse_pos\tfalse_neg\tseconds")
    for window, epochs, dims in itertools.product(args.windows, args.epochs, args.dims):
        cfg = TrainConfig(dims=dims, window=window, epochs=epochs)
        t0 = time.perf_counter()
        fp, fn = measure(cfg, args.graphs, args.queries, args.threshold, args.walk_length,
                         args.walks_per_entity)
        print(f"{window}\t{epochs}\t{dims}\t{fp:.3f}\t{fn:.3f}\t{time.perf_counter() - t0:.1f}", flush=True)


if __name__ == "__main__":
    main()
