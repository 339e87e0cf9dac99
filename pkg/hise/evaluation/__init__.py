from hise.evaluation.metrics import median_rank, rank_positions, recall_at_k, similarity_matrix
from hise.evaluation.report import CSV_HEADER, DirectionMetrics, MetricsReport, format_metrics_table
from hise.evaluation.retrieval import embed_split, evaluate

__all__ = [
    "CSV_HEADER",
    "DirectionMetrics",
    "MetricsReport",
    "embed_split",
    "evaluate",
    "format_metrics_table",
    "median_rank",
    "rank_positions",
    "recall_at_k",
    "similarity_matrix",
]
