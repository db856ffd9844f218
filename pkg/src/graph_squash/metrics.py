"""Summarization metrics and the per-query benchmark record."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

TIMING_FIELDS = ("st_seconds", "qa_seconds")


class ZeroOriginal(ValueError):
    pass


def summarization_ratio(original_count: int, summary_count: int) -> float:
    """Percentage reduction in triple count: ``(1 - summary / original) * 100``."""
    if original_count <= 0:
        raise ZeroOriginal("original graph has no triples")
    return (1.0 - summary_count / original_count) * 100.0


@dataclass
class BenchRow:
    query_id: str
    engine: str                      # direct | gbs | qbs
    original_triples: int
    summary_triples: int
    sr_percent: float
    raw_ratio: float                 # summary / original
    st_seconds: float
    qa_seconds: float
    distinct_answers: int
    bag_answers: int
    lossless: Optional[bool] = None  # only for gbs / qbs rows
    graph_id: str = ""
    error: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.engine == "direct" and self.lossless is not None:
            raise ValueError("direct rows carry no lossless flag")

    def to_dict(self, timings: bool = True) -> dict:
        d = asdict(self)
        if not timings:
            for k in TIMING_FIELDS:
                d.pop(k)
        return d
