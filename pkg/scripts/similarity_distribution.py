"""Cosine scores of predicate pairs: whole-graph embedding vs embeddings trained
on each query's subgraph. Writes one TSV row per score and prints the medians.

    python scripts/similarity_distribution.py --out scores.tsv
"""

import argparse
import itertools
import statistics

import numpy as np

from graph_squash.bench import GeneratorSpec, generate_synthetic_graph, random_query
from graph_squash.embedding import TrainConfig, cosine, generate_walks, predicate_vector, train_skipgram
from graph_squash.qbs import qbs_extract_subgraph
from graph_squash.sparql import extract_predicates


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--queries", type=int, default=40)
    ap.add_argument("--entities", type=int, default=1000)
    ap.add_argument("--predicates", type=int, default=50)
    ap.add_argument("--triples-per-predicate", type=int, default=200)
    ap.add_argument("--out", default="similarity_scores.tsv")
    args = ap.parse_args()

    spec = GeneratorSpec(entity_count=args.entities, predicate_count=args.predicates,
                         cluster_sizes=(3, 3, 2, 2, 2), triples_per_predicate=args.triples_per_predicate,
                         object_pool_size=20, seed=args.seed)
    graph, clusters = generate_synthetic_graph(spec)
    cfg = TrainConfig(seed=args.seed)

    full = train_skipgram(generate_walks(graph, 4, 10, cfg.seed), cfg)
    preds = sorted(p.value for p in graph.predicates())
    whole = [cosine(predicate_vector(full, a), predicate_vector(full, b))
             for a, b in itertools.combinations(preds, 2)]

    rng = np.random.default_rng(args.seed)
    local = []
    for _ in range(args.queries):
        q = random_query(graph, clusters, rng, max_patterns=3)
        g = qbs_extract_subgraph(graph, q)
        store = train_skipgram(generate_walks(g, 4, 10, cfg.seed), cfg)
        for a in extract_predicates(q):
            local.extend(cosine(predicate_vector(store, a), predicate_vector(store, c))
                         for c in g.predicates() if c != a)

    with open(args.out, "w") as fh:
        fh.write("scope\tscore\n")
        fh.writelines(f"whole\t{s!r}\n" for s in whole)
        fh.writelines(f"subgraph\t{s!r}\n" for s in local)
    for name, xs in (("whole graph", whole), ("query subgraphs", local)):
        hist, _ = np.histogram(xs, bins=10, range=(-1, 1))
        print(f"{name:<16} n={len(xs):<5} median={statistics.median(xs):.3f} hist={hist.tolist()}")


if __name__ == "__main__":
    main()
