import dataclasses

import numpy as np
import pytest

from hise.data import DatasetSplit, EntityDetection, VideoRecord
from hise.errors import EntitySelectionError
from hise.model import ModelParams
from hise.model.vse import (
    EntityGroup,
    affinity_logits,
    affinity_matrix,
    entity_node_init,
    gcn_layer,
    select_topk_entities,
    visual_semantics,
)
from hise.numcore import ParamBinding, Tape


def _detection(
    obj: int, attr: int, confidence: float, roi: tuple[float, ...] = (1.0, 0.0, 0.0)
) -> EntityDetection:
    return EntityDetection(
        object_token=obj, attribute_token=attr, roi=roi, bbox=(0.1, 0.1, 0.5, 0.5), confidence=confidence
    )


def _video(*frames: list[EntityDetection]) -> VideoRecord:
    return VideoRecord(
        video_id="v",
        frames=np.ones((len(frames), 4)),
        entities=tuple(tuple(frame) for frame in frames),
        caption_tokens=(0, 1),
    )


def test_topk_orders_by_count_then_confidence_then_token() -> None:
    video = _video(
        [_detection(5, 10, 0.6), _detection(6, 10, 0.9)],
        [_detection(5, 10, 0.7), _detection(4, 10, 0.9)],
    )
    groups = select_topk_entities(video, k=3, conf_threshold=0.5)
    assert [(g.object_token, g.count) for g in groups] == [(5, 2), (4, 1), (6, 1)]
    assert groups[0].confidence_sum == pytest.approx(1.3)
    assert [g.object_token for g in select_topk_entities(video, k=2, conf_threshold=0.5)] == [5, 4]


def test_topk_averages_group_members() -> None:
    video = _video(
        [_detection(5, 10, 0.6, roi=(1.0, 0.0, 0.0))],
        [_detection(5, 10, 0.8, roi=(0.0, 1.0, 0.0))],
    )
    (group,) = select_topk_entities(video, k=3, conf_threshold=0.5)
    assert group.roi == (0.5, 0.5, 0.0)
    assert group.mean_confidence == pytest.approx(0.7)


def test_topk_ignores_detection_order() -> None:
    detections = [
        _detection(5, 10, 0.6),
        _detection(6, 11, 0.7),
        _detection(5, 10, 0.55),
        _detection(7, 10, 0.9),
    ]
    forward = select_topk_entities(_video(detections), k=3, conf_threshold=0.5)
    backward = select_topk_entities(_video(detections[::-1]), k=3, conf_threshold=0.5)
    assert forward == backward


def test_topk_threshold_is_inclusive() -> None:
    video = _video([_detection(5, 10, 0.5), _detection(6, 10, 0.49)])
    assert [g.object_token for g in select_topk_entities(video, k=3, conf_threshold=0.5)] == [5]


def test_no_entity_above_threshold() -> None:
    video = _video([_detection(5, 10, 0.2)])
    with pytest.raises(EntitySelectionError, match="video v: no entities above threshold 0.5"):
        select_topk_entities(video, k=3, conf_threshold=0.5)
    with pytest.raises(EntitySelectionError, match="top_k must be >= 1"):
        select_topk_entities(video, k=0, conf_threshold=0.0)


def test_affinity_rows_sum_to_one() -> None:
    rng = np.random.default_rng(0)
    tape = Tape()
    nodes = tape.variable(rng.standard_normal((5, 4)))
    w_q, w_k = tape.constant(rng.standard_normal((4, 4))), tape.constant(rng.standard_normal((4, 4)))
    affinity = affinity_matrix(nodes, w_q, w_k)
    assert affinity.shape == (5, 5)
    np.testing.assert_allclose(affinity.data.sum(axis=1), np.ones(5))
    assert np.all(affinity.data > 0)
    raw = affinity_matrix(nodes, w_q, w_k, normalize=False)
    np.testing.assert_array_equal(raw.data, affinity_logits(nodes, w_q, w_k).data)


def test_gcn_is_permutation_equivariant() -> None:
    rng = np.random.default_rng(1)
    e, h, w = rng.standard_normal((4, 3)), rng.random((4, 4)), rng.standard_normal((3, 3))
    p = np.eye(4)[[2, 0, 3, 1]]
    tape = Tape()
    out = gcn_layer(tape.constant(e), tape.constant(h), tape.constant(w)).data
    permuted = gcn_layer(tape.constant(p @ e), tape.constant(p @ h @ p.T), tape.constant(w)).data
    np.testing.assert_allclose(permuted, p @ out, atol=1e-12)


def test_visual_semantics_mean_of_branches(tiny_params: ModelParams, tiny_split: DatasetSplit) -> None:
    semantics = visual_semantics(
        tiny_split.videos[0], ParamBinding(Tape(), tiny_params), top_k=3, conf_threshold=0.5
    )
    assert semantics.vds is not None and semantics.vhs is not None and semantics.vs is not None
    assert len(semantics.groups) == 2
    np.testing.assert_allclose(semantics.vs.data, (semantics.vds.data + semantics.vhs.data) / 2)


def test_visual_semantics_with_branches_off(tiny_params: ModelParams, tiny_split: DatasetSplit) -> None:
    semantics = visual_semantics(
        tiny_split.videos[0],
        ParamBinding(Tape(), tiny_params),
        top_k=3,
        conf_threshold=0.5,
        discrete=False,
        holistic=False,
    )
    assert semantics.vs is None
    assert semantics.groups == ()


def _group(
    obj: int, attr: int, roi: tuple[float, ...], bbox: tuple[float, float, float, float]
) -> EntityGroup:
    return EntityGroup(
        object_token=obj, attribute_token=attr, count=1, confidence_sum=0.9, roi=roi, bbox=bbox
    )


def test_zero_roi_and_bbox_leave_only_the_biases(tiny_params: ModelParams) -> None:
    params = tiny_params.replace(
        {
            "vse.appearance_b": np.array([[0.1, -0.2, 0.3, 0.0]]),
            "vse.position_b": np.array([[0.5, 0.5, -1.0, 2.0]]),
        }
    )
    empty = [_group(1, 2, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.0))]
    nodes = entity_node_init(empty, ParamBinding(Tape(), params))
    np.testing.assert_allclose(nodes.appearance.data + nodes.position.data, [[0.6, 0.3, -0.7, 2.0]])
    plain = entity_node_init(empty, ParamBinding(Tape(), tiny_params))
    assert not np.any(plain.appearance.data + plain.position.data)


def test_identity_node_weights_pass_the_concept_through(tiny_params: ModelParams) -> None:
    d = tiny_params["vse.node_w"].shape[1]
    params = tiny_params.replace(
        {"vse.node_w": np.vstack([np.eye(d), np.zeros((d, d))]), "vse.node_b": np.zeros((1, d))}
    )
    groups = [
        _group(1, 2, (0.3, -1.0, 2.0), (0.1, 0.2, 0.6, 0.9)),
        _group(4, 2, (1.0, 1.0, 1.0), (0.0, 0.0, 1.0, 1.0)),
    ]
    nodes = entity_node_init(groups, ParamBinding(Tape(), params))
    np.testing.assert_array_equal(nodes.init.data, np.maximum(nodes.concept.data, 0.0))


def test_identical_groups_give_identical_nodes(tiny_params: ModelParams) -> None:
    group = _group(3, 1, (0.2, 0.4, -0.6), (0.1, 0.1, 0.4, 0.8))
    nodes = entity_node_init([group, group], ParamBinding(Tape(), tiny_params))
    np.testing.assert_array_equal(nodes.init.data[0], nodes.init.data[1])


def test_affinity_logit_by_hand() -> None:
    tape = Tape()
    nodes = tape.constant(np.array([[2.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]]))
    eye = tape.constant(np.eye(4))
    assert affinity_logits(nodes, eye, eye).data[0, 1] == pytest.approx(1.0, abs=1e-12)


def test_single_node_affinity_is_one() -> None:
    rng = np.random.default_rng(2)
    tape = Tape()
    nodes = tape.constant(rng.standard_normal((1, 4)))
    w_q, w_k = tape.constant(rng.standard_normal((4, 4))), tape.constant(rng.standard_normal((4, 4)))
    np.testing.assert_array_equal(affinity_matrix(nodes, w_q, w_k).data, [[1.0]])


def test_equal_nodes_give_uniform_affinity() -> None:
    rng = np.random.default_rng(3)
    tape = Tape()
    nodes = tape.constant(np.tile(rng.standard_normal((1, 4)), (3, 1)))
    w_q, w_k = tape.constant(rng.standard_normal((4, 4))), tape.constant(rng.standard_normal((4, 4)))
    np.testing.assert_allclose(affinity_matrix(nodes, w_q, w_k).data, np.full((3, 3), 1 / 3), atol=1e-12)


def test_visual_semantics_ignores_detection_order(
    tiny_params: ModelParams, tiny_split: DatasetSplit
) -> None:
    video = tiny_split.videos[1]
    shuffled = dataclasses.replace(
        video, entities=tuple(tuple(reversed(frame)) for frame in reversed(video.entities))
    )
    forward = visual_semantics(video, ParamBinding(Tape(), tiny_params), top_k=3, conf_threshold=0.5)
    backward = visual_semantics(shuffled, ParamBinding(Tape(), tiny_params), top_k=3, conf_threshold=0.5)
    assert forward.vs is not None and backward.vs is not None
    assert forward.groups == backward.groups
    np.testing.assert_array_equal(forward.vs.data, backward.vs.data)
