"""Visual semantics: top-K entity nodes, affinity graph, one GCN layer, caption encoding."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from hise.data.records import EntityDetection, VideoRecord
from hise.errors import EntitySelectionError
from hise.model.encoders import encode_text_global
from hise.numcore import DiffValue, ParamBinding
from hise.numcore import functional as F


@dataclass(frozen=True)
class EntityGroup:
    """Detections sharing (object, attribute), with member-averaged roi and bbox."""

    object_token: int
    attribute_token: int
    count: int
    confidence_sum: float
    roi: tuple[float, ...]
    bbox: tuple[float, float, float, float]

    @property
    def mean_confidence(self) -> float:
        return self.confidence_sum / self.count


def _order_free_mean(columns: list[tuple[float, ...]]) -> tuple[float, ...]:
    # sorted fsum keeps the mean independent of detection order
    return tuple(math.fsum(sorted(column)) / len(column) for column in zip(*columns, strict=True))


def select_topk_entities(video: VideoRecord, k: int, conf_threshold: float) -> list[EntityGroup]:
    """Groups confident detections by (object, attribute); ranks by frequency, then total
    confidence, then object token (attribute token breaks the last ties)."""
    if k < 1:
        raise EntitySelectionError(f"video {video.video_id}: top_k must be >= 1, got {k}")
    members: dict[tuple[int, int], list[EntityDetection]] = defaultdict(list)
    for detection in video.detections():
        if detection.confidence >= conf_threshold:
            members[(detection.object_token, detection.attribute_token)].append(detection)
    if not members:
        raise EntitySelectionError(
            f"video {video.video_id}: no entities above threshold {conf_threshold}"
        )

    groups = []
    for (obj, attr), found in members.items():
        bbox = _order_free_mean([d.bbox for d in found])
        groups.append(
            EntityGroup(
                object_token=obj,
                attribute_token=attr,
                count=len(found),
                confidence_sum=math.fsum(sorted(d.confidence for d in found)),
                roi=_order_free_mean([d.roi for d in found]),
                bbox=(bbox[0], bbox[1], bbox[2], bbox[3]),
            )
        )
    groups.sort(key=lambda g: (-g.count, -g.confidence_sum, g.object_token, g.attribute_token))
    return groups[:k]


@dataclass(frozen=True)
class EntityNodes:
    """K x d_model blocks, one row per selected group."""

    concept: DiffValue
    appearance: DiffValue
    position: DiffValue
    init: DiffValue


def entity_node_init(groups: list[EntityGroup], params: ParamBinding) -> EntityNodes:
    """concept = relu(W (emb(object) + emb(attribute)) + b); init = relu(W [concept, A + P] + b).

    Concept embeddings come from the base text encoder's token table.
    """
    table = params["text.token_embedding"]
    selector = np.zeros((len(groups), table.shape[0]))
    for row, group in enumerate(groups):
        selector[row, group.object_token] += 1.0
        selector[row, group.attribute_token] += 1.0
    words = F.matmul(F.constant_like(table, selector), table)
    concept = F.relu(F.affine(words, params["vse.concept_w"], params["vse.concept_b"]))

    rois = F.constant_like(table, np.array([g.roi for g in groups]))
    boxes = F.constant_like(table, np.array([g.bbox for g in groups]))
    appearance = F.affine(rois, params["vse.appearance_w"], params["vse.appearance_b"])
    position = F.affine(boxes, params["vse.position_w"], params["vse.position_b"])
    init = F.relu(
        F.affine(
            F.concat_columns([concept, F.add(appearance, position)]),
            params["vse.node_w"],
            params["vse.node_b"],
        )
    )
    return EntityNodes(concept=concept, appearance=appearance, position=position, init=init)


def affinity_logits(nodes: DiffValue, w_query: DiffValue, w_key: DiffValue) -> DiffValue:
    """(E Wq)(E Wk)^T / sqrt(d)."""
    queries = F.matmul(nodes, w_query)
    keys = F.matmul(nodes, w_key)
    return F.scale(F.matmul(queries, F.transpose(keys)), 1.0 / math.sqrt(nodes.shape[1]))


def affinity_matrix(
    nodes: DiffValue, w_query: DiffValue, w_key: DiffValue, *, normalize: bool = True
) -> DiffValue:
    """Row-stochastic K x K affinity; `normalize=False` returns the raw scaled logits."""
    logits = affinity_logits(nodes, w_query, w_key)
    return F.row_softmax(logits) if normalize else logits


def gcn_layer(nodes: DiffValue, affinity: DiffValue, weight: DiffValue) -> DiffValue:
    """relu(H E W + E)."""
    return F.relu(F.add(F.matmul(F.matmul(affinity, nodes), weight), nodes))


@dataclass(frozen=True)
class VisualSemantics:
    vds: DiffValue | None
    vhs: DiffValue | None
    vs: DiffValue | None  # mean of the computed branches
    groups: tuple[EntityGroup, ...] = ()


def discrete_semantics(
    groups: list[EntityGroup],
    params: ParamBinding,
    *,
    graph_reasoning: bool = True,
    normalize_affinity: bool = True,
) -> DiffValue:
    """VDS: mean over node rows after the GCN (or straight after init when reasoning is off)."""
    nodes = entity_node_init(groups, params).init
    if graph_reasoning:
        affinity = affinity_matrix(
            nodes, params["vse.affinity_query"], params["vse.affinity_key"], normalize=normalize_affinity
        )
        nodes = gcn_layer(nodes, affinity, params["vse.gcn_w"])
    return F.mean_rows(nodes)


def visual_semantics(
    video: VideoRecord,
    params: ParamBinding,
    *,
    top_k: int,
    conf_threshold: float,
    graph_reasoning: bool = True,
    normalize_affinity: bool = True,
    discrete: bool = True,
    holistic: bool = True,
) -> VisualSemantics:
    """VDS from the entity graph, VHS from the caption through the shared base text encoder.

    Branches switched off are returned as None and never computed.
    """
    vds = None
    groups: list[EntityGroup] = []
    if discrete:
        groups = select_topk_entities(video, top_k, conf_threshold)
        vds = discrete_semantics(
            groups, params, graph_reasoning=graph_reasoning, normalize_affinity=normalize_affinity
        )
    vhs = encode_text_global(video.caption_tokens, params, prefix="text") if holistic else None
    present = [v for v in (vds, vhs) if v is not None]
    vs = F.mean_of(present) if present else None
    return VisualSemantics(vds=vds, vhs=vhs, vs=vs, groups=tuple(groups))

