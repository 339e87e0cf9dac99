import numpy as np
import pytest

from hise.errors import ShapeError
from hise.evaluation import (
    MetricsReport,
    format_metrics_table,
    median_rank,
    rank_positions,
    recall_at_k,
    similarity_matrix,
)
from hise.evaluation.metrics import Direction
from hise.numcore import Array

DIAGONAL_3 = np.array([[0.9, 0.1, 0.2], [0.3, 0.8, 0.1], [0.2, 0.4, 0.7]])
SWAPPED = np.array([[0.1, 0.9], [0.8, 0.2]])


def _sorted_ranks(similarity: Array, truth: list[int], direction: Direction) -> list[int]:
    """Full sort per query, best first, equal scores by item index."""
    scores = similarity.T if direction == "t2v" else similarity
    ranks = []
    for query, row in enumerate(scores):
        order = sorted(range(len(row)), key=lambda item: (-row[item], item))
        ranks.append(order.index(truth[query]) + 1)
    return ranks


def test_recall_examples() -> None:
    assert recall_at_k(DIAGONAL_3, [0, 1, 2], 1, "t2v") == 100.0
    assert recall_at_k(DIAGONAL_3, [0, 1, 2], 1, "v2t") == 100.0
    assert recall_at_k(SWAPPED, [0, 1], 1, "t2v") == 0.0
    assert recall_at_k(SWAPPED, [0, 1], 2, "t2v") == 100.0


def test_median_rank_examples() -> None:
    assert median_rank(DIAGONAL_3, [0, 1, 2], "t2v") == 1.0
    assert median_rank(SWAPPED, [0, 1], "t2v") == 2.0
    ranks_one_and_two = np.array([[0.9, 0.1], [0.95, 0.2]])
    assert rank_positions(ranks_one_and_two, [0, 1], "v2t").tolist() == [1, 2]
    assert median_rank(ranks_one_and_two, [0, 1], "v2t") == 1.5


def test_ties_rank_by_item_index() -> None:
    flat = np.full((3, 3), 0.5)
    assert rank_positions(flat, [0, 1, 2], "v2t").tolist() == [1, 2, 3]
    assert rank_positions(flat, [2, 0, 1], "t2v").tolist() == [3, 1, 2]


@pytest.mark.parametrize("direction", ["t2v", "v2t"])
def test_matches_full_sort(direction: Direction) -> None:
    rng = np.random.default_rng(0)
    for _ in range(100):
        # one decimal place forces plenty of ties
        similarity = np.round(rng.uniform(-1.0, 1.0, size=(20, 20)), 1)
        truth = rng.permutation(20).tolist()
        expected = _sorted_ranks(similarity, truth, direction)
        assert rank_positions(similarity, truth, direction).tolist() == expected
        for k in (1, 5, 10):
            assert recall_at_k(similarity, truth, k, direction) == 100.0 * sum(r <= k for r in expected) / 20
        assert median_rank(similarity, truth, direction) == float(np.median(expected))


def test_recall_is_monotone_in_k() -> None:
    rng = np.random.default_rng(1)
    similarity = rng.standard_normal((15, 15))
    recalls = [recall_at_k(similarity, list(range(15)), k, "t2v") for k in range(1, 16)]
    assert recalls == sorted(recalls)
    assert recalls[-1] == 100.0


def test_report_is_rank_based() -> None:
    rng = np.random.default_rng(2)
    similarity = rng.uniform(-1.0, 1.0, size=(12, 12))
    truth = rng.permutation(12).tolist()
    report = MetricsReport.from_similarity(similarity, truth)
    assert MetricsReport.from_similarity(np.exp(3.0 * similarity) + 7.0, truth) == report
    assert MetricsReport.from_similarity(similarity**3, truth) == report


def test_report_ignores_text_order() -> None:
    rng = np.random.default_rng(3)
    similarity = rng.uniform(-1.0, 1.0, size=(10, 10))
    truth = rng.permutation(10).tolist()
    perm = rng.permutation(10)
    shuffled = MetricsReport.from_similarity(similarity[:, perm], [truth[j] for j in perm])
    assert shuffled == MetricsReport.from_similarity(similarity, truth)


def test_single_pair_report() -> None:
    report = MetricsReport.from_similarity(np.array([[0.3]]), [0])
    assert report.r_sum == 600.0
    assert report.t2v.mdr == report.v2t.mdr == 1.0
    assert report.to_dict()["r_sum"] == 600.0
    assert report.csv_values()[-1] == 600.0


def test_report_bounds() -> None:
    rng = np.random.default_rng(4)
    report = MetricsReport.from_similarity(rng.standard_normal((30, 30)), list(range(30)))
    for m in (report.t2v, report.v2t):
        assert 0.0 <= m.r1 <= m.r5 <= m.r10 <= 100.0
        assert m.mdr >= 1.0
    assert report.r_sum == pytest.approx(report.t2v.recall_sum + report.v2t.recall_sum)


def test_metrics_table() -> None:
    table = format_metrics_table(MetricsReport.from_similarity(np.array([[0.3]]), [0]))
    lines = table.splitlines()
    assert lines[0].split() == ["direction", "R@1", "R@5", "R@10", "MdR"]
    assert lines[2].split() == ["t2v", "100.0", "100.0", "100.0", "1.0"]
    assert lines[-1] == "R@Sum 600.0 over 1 pairs"


def test_similarity_matrix() -> None:
    videos = np.array([[2.0, 0.0], [0.0, 0.0]])
    texts = np.array([[1.0, 1.0]])
    np.testing.assert_allclose(similarity_matrix(videos, texts), [[np.sqrt(0.5)], [0.0]])
    with pytest.raises(ShapeError, match="video width 2 vs text width 3"):
        similarity_matrix(videos, np.ones((1, 3)))


def test_truth_length_must_match() -> None:
    with pytest.raises(ShapeError, match="2 truths for 3 t2v queries"):
        rank_positions(DIAGONAL_3, [0, 1], "t2v")
