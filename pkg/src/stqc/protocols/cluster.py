"""Graph states: CZ on every edge of a product input."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..qcore import CZ, PLUS, X, Z, ContractError, apply_local, tensor

MAX_VERTICES = 5


@dataclass
class GraphSpec:
    vertices: list
    edges: list
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise ContractError("repeated vertex")
        seen = set()
        for a, b in self.edges:
            key = frozenset((a, b))
            if a == b or key in seen:
                raise ContractError(f"graph is not simple at edge {(a, b)}")
            if a not in self.vertices or b not in self.vertices:
                raise ContractError(f"edge {(a, b)} references an unknown vertex")
            seen.add(key)

    def neighbours(self, v) -> list:
        return [b if a == v else a for a, b in self.edges if v in (a, b)]

    def stabilizer(self, v) -> dict:
        """Positions -> Pauli for K_v = X_v prod_{u in N(v)} Z_u."""
        idx = {u: i for i, u in enumerate(self.vertices)}
        ops = {idx[v]: X}
        for u in self.neighbours(v):
            ops[idx[u]] = Z
        return ops


def build_cluster_state(g: GraphSpec) -> np.ndarray:
    if len(g.vertices) > MAX_VERTICES:
        raise ContractError(f"at most {MAX_VERTICES} vertices")
    n = len(g.vertices)
    idx = {v: i for i, v in enumerate(g.vertices)}
    state = tensor(*[np.asarray(g.inputs.get(v, PLUS), dtype=complex) for v in g.vertices])
    for a, b in g.edges:
        state = apply_local(CZ, state, [idx[a], idx[b]], n)
    return state


def apply_paulis(state: np.ndarray, ops: dict, n: int) -> np.ndarray:
    for q, op in ops.items():
        state = apply_local(op, state, [q], n)
    return state
