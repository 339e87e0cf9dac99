"""Textual semantics: role graph over [occurrence; actions; entities], one R-GCN layer.

Relations 0..R-1 carry entity <-> action edges by semantic role; relation R carries
action <-> occurrence edges. Edges are symmetric and every adjacency is row-normalized.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from hise.data.records import TextRecord
from hise.errors import FixtureError
from hise.model.encoders import encode_text_global
from hise.model.params import relation_weight_name
from hise.numcore import Array, DiffValue, ParamBinding
from hise.numcore import functional as F

logger = logging.getLogger(__name__)

EMPTY_DETAIL_WARNING = "tds: no action or entity nodes"


@dataclass(frozen=True, eq=False)
class RoleGraph:
    adjacency: tuple[Array, ...]  # num_roles + 1 matrices, node x node
    kinds: tuple[str, ...]

    @property
    def num_nodes(self) -> int:
        return len(self.kinds)

    @property
    def num_detail_nodes(self) -> int:
        return self.num_nodes - 1


def _row_normalize(matrix: Array) -> Array:
    sums = matrix.sum(axis=1, keepdims=True)
    return np.divide(matrix, sums, out=np.zeros_like(matrix), where=sums > 0)


def build_role_graph(text: TextRecord, num_roles: int) -> RoleGraph:
    n_actions = len(text.actions)
    kinds = ("occurrence",) + ("action",) * n_actions + ("entity",) * len(text.entities)
    n = len(kinds)
    adjacency = np.zeros((num_roles + 1, n, n))
    for e, entity in enumerate(text.entities):
        if not 0 <= entity.role_id < num_roles:
            raise FixtureError(
                f"text {text.text_id} entity {e}: role_id {entity.role_id} outside [0, {num_roles})"
            )
        if not n_actions:
            continue
        node = 1 + n_actions + e
        action = 1 + entity.action_index
        adjacency[entity.role_id, node, action] = 1.0
        adjacency[entity.role_id, action, node] = 1.0
    for a in range(n_actions):
        adjacency[num_roles, 1 + a, 0] = 1.0
        adjacency[num_roles, 0, 1 + a] = 1.0
    return RoleGraph(adjacency=tuple(_row_normalize(g) for g in adjacency), kinds=kinds)


def span_average_matrix(text: TextRecord, table_rows: int) -> Array:
    """(actions + entities) x vocab matrix whose rows average each node's token span."""
    spans = [("action", i, tokens) for i, tokens in enumerate(text.actions)]
    spans += [("entity", i, entity.tokens) for i, entity in enumerate(text.entities)]
    matrix = np.zeros((len(spans), table_rows))
    for row, (kind, index, tokens) in enumerate(spans):
        if not tokens:
            raise FixtureError(f"text {text.text_id}: {kind} {index} has an empty token span")
        for token in tokens:
            matrix[row, token] += 1.0 / len(tokens)
    return matrix


def init_role_nodes(text: TextRecord, params: ParamBinding) -> DiffValue:
    """Row 0 from the occurrence encoder; action and entity rows are token-embedding means."""
    occurrence = encode_text_global(text.occurrence_tokens, params, prefix="occurrence")
    if not text.actions and not text.entities:
        return occurrence
    table = params["occurrence.token_embedding"]
    averages = F.matmul(F.constant_like(table, span_average_matrix(text, table.shape[0])), table)
    return F.stack_rows([occurrence, averages])


def rgcn_layer(nodes: DiffValue, adjacency: Sequence[Array], weights: Sequence[DiffValue]) -> DiffValue:
    """relu(sum_r G_r E W_r + E)."""
    total = nodes
    for g, w in zip(adjacency, weights, strict=True):
        if not g.any():
            continue
        total = F.add(total, F.matmul(F.matmul(F.constant_like(nodes, g), nodes), w))
    return F.relu(total)


@dataclass(frozen=True)
class TextualSemantics:
    ths: DiffValue
    tds: DiffValue
    ts: DiffValue


def textual_semantics(
    text: TextRecord, params: ParamBinding, num_roles: int, *, graph_reasoning: bool = True
) -> TextualSemantics:
    """THS = occurrence row, TDS = sum of action and entity rows, TS = their mean.

    With `graph_reasoning=False` the R-GCN is skipped and TDS is the mean of the
    initialized detail rows.
    """
    graph = build_role_graph(text, num_roles)
    nodes = init_role_nodes(text, params)
    if graph_reasoning:
        weights = [params[relation_weight_name(r)] for r in range(num_roles + 1)]
        nodes = rgcn_layer(nodes, graph.adjacency, weights)

    ths = F.select_row(nodes, 0)
    detail = graph.num_detail_nodes
    if detail == 0:
        nodes.tape.warnings[EMPTY_DETAIL_WARNING] += 1
        logger.debug("text %s has no action or entity nodes, tds is zero", text.text_id)
        tds = F.constant_like(nodes, np.zeros((1, nodes.shape[1])))
    else:
        weight = 1.0 if graph_reasoning else 1.0 / detail
        selector = np.full((1, graph.num_nodes), weight)
        selector[0, 0] = 0.0
        tds = F.matmul(F.constant_like(nodes, selector), nodes)
    return TextualSemantics(ths=ths, tds=tds, ts=F.scale(F.add(ths, tds), 0.5))
