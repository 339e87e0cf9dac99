from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

from hise.constants import RECALL_KS
from hise.evaluation.metrics import Direction, median_rank, recall_at_k
from hise.format import format_float, format_table
from hise.numcore import Array

CSV_HEADER = (
    "row",
    "r1_t2v",
    "r5_t2v",
    "r10_t2v",
    "mdr_t2v",
    "r1_v2t",
    "r5_v2t",
    "r10_v2t",
    "mdr_v2t",
    "rsum",
)


@dataclass(frozen=True)
class DirectionMetrics:
    r1: float
    r5: float
    r10: float
    mdr: float

    @classmethod
    def compute(cls, similarity: Array, truth: Sequence[int], direction: Direction) -> DirectionMetrics:
        r1, r5, r10 = (recall_at_k(similarity, truth, k, direction) for k in RECALL_KS)
        return cls(r1=r1, r5=r5, r10=r10, mdr=median_rank(similarity, truth, direction))

    @property
    def recall_sum(self) -> float:
        return self.r1 + self.r5 + self.r10

    def to_dict(self) -> dict[str, float]:
        return {"r1": self.r1, "r5": self.r5, "r10": self.r10, "mdr": self.mdr}


@dataclass(frozen=True)
class MetricsReport:
    t2v: DirectionMetrics
    v2t: DirectionMetrics
    count: int

    @property
    def r_sum(self) -> float:
        return self.t2v.recall_sum + self.v2t.recall_sum

    @classmethod
    def from_similarity(cls, similarity: Array, text_to_video: Sequence[int]) -> MetricsReport:
        """Both directions for a bijective pairing given as text index -> video index."""
        video_to_text = [0] * len(text_to_video)
        for text, video in enumerate(text_to_video):
            video_to_text[video] = text
        return cls(
            t2v=DirectionMetrics.compute(similarity, text_to_video, "t2v"),
            v2t=DirectionMetrics.compute(similarity, video_to_text, "v2t"),
            count=len(text_to_video),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "t2v": self.t2v.to_dict(),
            "v2t": self.v2t.to_dict(),
            "r_sum": self.r_sum,
            "count": self.count,
        }

    def csv_values(self) -> list[float]:
        """Metric columns of CSV_HEADER, in order."""
        return [
            self.t2v.r1, self.t2v.r5, self.t2v.r10, self.t2v.mdr,
            self.v2t.r1, self.v2t.r5, self.v2t.r10, self.v2t.mdr,
            self.r_sum,
        ]  # fmt: skip


def format_metrics_table(report: MetricsReport) -> str:
    rows = [
        [direction, *(format_float(v) for v in (m.r1, m.r5, m.r10, m.mdr))]
        for direction, m in (("t2v", report.t2v), ("v2t", report.v2t))
    ]
    table = format_table(["direction", "R@1", "R@5", "R@10", "MdR"], rows)
    return f"{table}\nR@Sum {format_float(report.r_sum)} over {report.count} pairs"
