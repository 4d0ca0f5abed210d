"""Singlet-triplet projective measurements on dot pairs.

Outcome labels: 1 = singlet, 0 = triplet.  Under the ``singlet_vs_t0`` model a
third outcome, 2, collects the polarized triplets |uu>, |dd>.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import IMPOSSIBLE_P, ContractError, ImpossibleOutcome, apply_local, embed
from .spinmodels import DD, ENCODINGS, SINGLET, T0, UU, encoding_basis

TRIPLET, SINGLET_OUT, REST = 0, 1, 2
ALL_TRIPLET = "singlet_vs_all_triplet"
S_T0 = "singlet_vs_t0"
OUTCOME_MODELS = (ALL_TRIPLET, S_T0)
OUTCOME_NAMES = {TRIPLET: "T", SINGLET_OUT: "S", REST: "T+-"}


@dataclass(frozen=True)
class MeasurementSpec:
    dot_pair: tuple[int, int]
    outcome_model: str = ALL_TRIPLET
    latency: float = 0.0

    def __post_init__(self):
        a, b = self.dot_pair
        if a == b:
            raise ContractError("measured dots must be distinct")
        if self.outcome_model not in OUTCOME_MODELS:
            raise ContractError(f"unknown outcome model {self.outcome_model!r}")
        if self.latency < 0:
            raise ContractError("latency must be >= 0")

    def validate(self, n_dots: int):
        if not all(0 <= d < n_dots for d in self.dot_pair):
            raise ContractError(f"dot pair {self.dot_pair} out of range for {n_dots} dots")


@dataclass
class MeasurementRecord:
    spec: MeasurementSpec
    outcome: int
    probability: float
    step_index: int = -1
    label: str = ""

    def __post_init__(self):
        if not -1e-12 <= self.probability <= 1 + 1e-12:
            raise ContractError("probability outside [0, 1]")

    @property
    def flagged(self) -> bool:
        return self.outcome == REST


class OutcomeSource:
    """Chooses measurement outcomes: seeded sampling or a forced sequence."""

    def choose(self, probs: dict[int, float], where: str = "") -> int:
        raise NotImplementedError


class Sampled(OutcomeSource):
    def __init__(self, seed: int):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def choose(self, probs, where=""):
        keys = sorted(probs)
        p = np.array([max(probs[k], 0.0) for k in keys])
        p = p / p.sum()
        return int(keys[self.rng.choice(len(keys), p=p)])


class Forced(OutcomeSource):
    def __init__(self, outcomes: Sequence[int]):
        self.outcomes = list(outcomes)
        self.pos = 0

    def choose(self, probs, where=""):
        if self.pos >= len(self.outcomes):
            raise ContractError(f"{where}: forced outcome list exhausted")
        out = int(self.outcomes[self.pos])
        self.pos += 1
        if out not in probs:
            raise ContractError(f"{where}: outcome {out} not available under this readout")
        if probs[out] < IMPOSSIBLE_P:
            raise ImpossibleOutcome(probs[out], where)
        return out


def pair_projectors(outcome_model: str) -> dict[int, np.ndarray]:
    """4x4 projectors on a dot pair for each outcome."""
    ps = np.outer(SINGLET, SINGLET.conj())
    if outcome_model == ALL_TRIPLET:
        return {TRIPLET: np.eye(4) - ps, SINGLET_OUT: ps}
    if outcome_model == S_T0:
        pt = np.outer(T0, T0.conj())
        rest = np.outer(UU, UU) + np.outer(DD, DD)
        return {TRIPLET: pt, SINGLET_OUT: ps, REST: rest.astype(complex)}
    raise ContractError(f"unknown outcome model {outcome_model!r}")


def outcome_projectors(spec: MeasurementSpec, n_dots: int) -> dict[int, np.ndarray]:
    spec.validate(n_dots)
    space = list(range(n_dots))
    return {k: embed(p, list(spec.dot_pair), space)
            for k, p in pair_projectors(spec.outcome_model).items()}


def st_projectors(spec: MeasurementSpec, n_dots: int) -> tuple[np.ndarray, np.ndarray]:
    """(P_triplet, P_singlet) on the full register; see outcome_projectors for P_rest."""
    pr = outcome_projectors(spec, n_dots)
    return pr[TRIPLET], pr[SINGLET_OUT]


def _weight(v: np.ndarray) -> float:
    return float(np.real(np.vdot(v, v)))


def measure_local(state: np.ndarray, projectors: dict[int, np.ndarray], targets: Sequence[int],
                  n: int, source: OutcomeSource, where: str = "") -> tuple[int, float, np.ndarray]:
    """Projective measurement with local projectors on positions `targets`.

    A 2-d `state` holds one column per input; its columns are projected but not
    renormalized, and the probability is that of a uniformly mixed input.
    """
    total = _weight(state)
    if total <= 0:
        raise ContractError(f"{where}: zero state")
    branches, probs = {}, {}
    for k, Pk in projectors.items():
        v = apply_local(Pk, state, list(targets), n)
        branches[k] = v
        probs[k] = _weight(v) / total
    out = source.choose(probs, where)
    v = branches[out]
    if state.ndim == 1:
        v = v / np.sqrt(_weight(v))
    return out, probs[out], v


def measure(state: np.ndarray, spec: MeasurementSpec, source: OutcomeSource, n_dots: int,
            step_index: int = -1, label: str = "") -> tuple[MeasurementRecord, np.ndarray]:
    spec.validate(n_dots)
    where = f"step {step_index}" if step_index >= 0 else "measure"
    out, p, v = measure_local(state, pair_projectors(spec.outcome_model), spec.dot_pair,
                              n_dots, source, where)
    return MeasurementRecord(spec, out, p, step_index, label), v


def inner_dots(qa: int, qb: int) -> tuple[int, int]:
    if abs(qa - qb) != 1:
        raise ContractError("entangling measurement needs adjacent qubits")
    left, right = min(qa, qb), max(qa, qb)
    return (2 * left + 1, 2 * right)


def entangling_measurement(state: np.ndarray, qubit_pair: tuple[int, int], source: OutcomeSource,
                           n_qubits: int, outcome_model: str = ALL_TRIPLET, step_index: int = -1,
                           label: str = "") -> tuple[MeasurementRecord, np.ndarray]:
    """Singlet-triplet measurement of the inner dots of two adjacent qubits."""
    spec = MeasurementSpec(inner_dots(*qubit_pair), outcome_model)
    if state.shape[0] != 4 ** n_qubits:
        raise ContractError("entangling measurement needs the full spin register")
    return measure(state, spec, source, 2 * n_qubits, step_index, label)


def qubit_measurement(state: np.ndarray, qubit: int, source: OutcomeSource, n_qubits: int,
                      outcome_model: str = ALL_TRIPLET, step_index: int = -1,
                      label: str = "") -> tuple[MeasurementRecord, np.ndarray]:
    """Singlet-triplet readout of one qubit's own dot pair (full spin register)."""
    spec = MeasurementSpec((2 * qubit, 2 * qubit + 1), outcome_model)
    return measure(state, spec, source, 2 * n_qubits, step_index, label)


def qubit_level_projectors(encoding: str) -> dict[int, np.ndarray]:
    """Singlet/t0 projectors expressed in a qubit basis (no leakage space)."""
    V = encoding_basis(encoding)
    s = V.conj().T @ SINGLET
    t = V.conj().T @ T0
    return {TRIPLET: np.outer(t, t.conj()), SINGLET_OUT: np.outer(s, s.conj())}


def leakage_population(state: np.ndarray, encoding: str, qubit: int, n_qubits: int) -> float:
    """Weight outside the encoded subspace of one qubit's dot pair."""
    if encoding not in ENCODINGS:
        raise ContractError(f"unknown encoding {encoding!r}")
    V = encoding_basis(encoding)
    Pq = V @ V.conj().T
    inside = apply_local(Pq, state, [2 * qubit, 2 * qubit + 1], 2 * n_qubits)
    total = _weight(state)
    return float(min(max(1 - _weight(inside) / total, 0.0), 1.0))


def net_spin_sectors(state: np.ndarray, n_dots: int, tol: float = 1e-14) -> set[int]:
    """Set of total m_s (in units of 1/2, i.e. n_up - n_down) with weight > tol."""
    amps = np.abs(state.reshape(2 ** n_dots, -1)) ** 2
    w = amps.sum(axis=1)
    out = set()
    for k in np.nonzero(w > tol)[0]:
        ups = n_dots - bin(int(k)).count("1")
        out.add(2 * ups - n_dots)
    return out
