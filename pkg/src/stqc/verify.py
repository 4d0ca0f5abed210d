"""Equivalence checks, branch-map reconstruction, leakage scans, timing and resource counts."""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import measure as ms
from .protocols import exchange as px
from .protocols import gradient as pg
from .protocols.common import ProtocolResult
from .protocols.schedule import Step, enumerate_branches
from .qcore import ZERO, ContractError, X, Z, is_unitary, tensor
from .spinmodels import (GRADIENT, FullSpinModel, encoding_basis, full_spin_hamiltonian,
                         gradient_dot_fields, gradient_window_hamiltonian)

TOL = 1e-10
LEAK_TOL = 1e-12


def _phase_fit(A: np.ndarray, B: np.ndarray) -> complex:
    i = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    return A[i] / B[i]


def deviation_up_to_phase(A: np.ndarray, B: np.ndarray) -> tuple[float, complex]:
    """max |A/c - B| with c = A/B at B's largest entry; c also carries any norm."""
    if A.shape != B.shape:
        raise ContractError(f"shape mismatch {A.shape} vs {B.shape}")
    c = _phase_fit(A, B)
    if abs(c) == 0:
        return float(np.max(np.abs(B))), c
    return float(np.max(np.abs(A / c - B))), c


def equal_up_to_global_phase(U: np.ndarray, V: np.ndarray, tol: float = TOL) -> tuple[bool, float]:
    if U.shape != V.shape:
        raise ContractError("dimension mismatch")
    if not (is_unitary(U) and is_unitary(V)):
        raise ContractError("equal_up_to_global_phase expects unitaries")
    c = _phase_fit(U, V)
    c = c / abs(c)
    dev = float(np.max(np.abs(U - c * V)))
    return dev < tol, float(np.angle(c))


@dataclass
class BranchMap:
    outcomes: list
    probability: float
    kraus: np.ndarray | None
    leakage: float
    flagged: bool
    result: ProtocolResult = field(repr=False, default=None)

    @property
    def branch_id(self) -> str:
        return "/".join(ms.OUTCOME_NAMES[o] for o in self.outcomes)


def branch_maps(run: Callable[[object, ms.OutcomeSource], ProtocolResult], dim: int) -> list[BranchMap]:
    """Enumerate every branch with the identity as input, one column per basis state."""
    out = []
    for res in enumerate_branches(lambda src: run(np.eye(dim, dtype=complex), src)):
        o = res.output()
        out.append(BranchMap(res.outcomes, res.probability, o.kraus if o.separable else None,
                             o.leakage, res.flagged, res))
    return out


def _pauli_family(m: int):
    for powers in itertools.product([(0, 0), (1, 0), (0, 1), (1, 1)], repeat=m):
        ops = [np.linalg.matrix_power(Z, z) @ np.linalg.matrix_power(X, x) for x, z in powers]
        yield powers, tensor(*ops)


@dataclass
class EquivalenceReport:
    target: str
    tol: float
    branches: list
    passed: bool

    def failing(self) -> list[str]:
        return [b["branch"] for b in self.branches if not b["pass"]]

    def to_dict(self) -> dict:
        return asdict(self)


def equal_up_to_corrections(branches: Sequence[BranchMap], target: np.ndarray, name: str = "",
                            tol: float = TOL, leak_tol: float = LEAK_TOL) -> EquivalenceReport:
    """Check each branch against `target` after removing its ledger corrections.

    The branch passes only with the ledger's own correction.  For information
    the Pauli family (with the ledger phase) is also searched and any member
    that works is reported.
    """
    if not branches:
        raise ContractError("no branches to check")
    rows = []
    for b in branches:
        row = {"branch": b.branch_id, "outcomes": list(b.outcomes), "probability": b.probability,
               "flagged": b.flagged, "leakage": b.leakage}
        if b.kraus is None:
            row.update(deviation=None, phase=None, correction=None, search=[], pass_=False,
                       note="output entangled with measured qubits")
        else:
            res = b.result
            L = res.ledger.operator(res.outputs)
            stripped = np.linalg.solve(L, b.kraus)
            dev, c = deviation_up_to_phase(stripped, target)
            corr = [list(res.ledger.powers(q)) + [res.ledger.frame(q).beta] for q in res.outputs]
            found = []
            phase_ops = tensor(*[np.diag([1, np.exp(1j * res.ledger.frame(q).beta)]) for q in res.outputs])
            for powers, Pm in _pauli_family(len(res.outputs)):
                d, _ = deviation_up_to_phase(np.linalg.solve(Pm @ phase_ops, b.kraus), target)
                if d < tol:
                    found.append([list(p) for p in powers])
            rank = int(np.sum(np.linalg.svd(b.kraus, compute_uv=False) > 1e-9 * np.abs(b.kraus).max()))
            row.update(deviation=dev, phase=float(np.angle(c)), correction=corr, search=found,
                       pass_=dev < tol and b.leakage < leak_tol, rank=rank, note="")
        row["pass"] = row.pop("pass_")
        rows.append(row)
    return EquivalenceReport(name, tol, rows, all(r["pass"] for r in rows))


def wire_mapping_search(branches: Sequence[BranchMap], target: np.ndarray, tol: float = TOL) -> dict:
    """For two-wire outputs, try both wire orders with any Pauli frame per branch.

    Branches whose output is entangled with the measured qubits are skipped
    and counted.
    """
    SWAP = np.eye(4)[[0, 2, 1, 3]]
    usable = [b for b in branches if b.kraus is not None and b.kraus.shape[0] == 4]
    out = {"skipped": len(branches) - len(usable)}
    for name, perm in (("as_labelled", np.eye(4)), ("swapped", SWAP)):
        best = [min(deviation_up_to_phase(np.linalg.solve(Pm, perm @ b.kraus), target)[0]
                    for _, Pm in _pauli_family(2)) for b in usable]
        worst = float(max(best)) if best else math.inf
        out[name] = {"max_deviation": worst, "matches": bool(worst < tol)}
    return out


# -- leakage and model cross-checks -----------------------------------------------

def _pair_full_propagators(ratio: float, mu_delta: float, zz_sign: int):
    j = ratio * mu_delta
    mb = 2 * mu_delta
    fields = gradient_dot_fields([mu_delta, mu_delta], [mb])
    Hf = full_spin_hamiltonian(FullSpinModel(4, tuple(fields), {(1, 2): j}))
    He = gradient_window_hamiltonian([mu_delta, mu_delta], [(0, 1, j)], mu_delta_b=mb, zz_sign=zz_sign)
    V = tensor(encoding_basis(GRADIENT), encoding_basis(GRADIENT))
    return Hf, He, V


def _time_grid(ratio: float, mu_delta: float, points_per_pi: int):
    n1 = max(1, round(1 / ratio))
    t_end = n1 * math.pi / mu_delta
    return np.linspace(0, t_end, points_per_pi * n1 + 1)


def cross_validate(ratios: Sequence[float], mu_delta: float = 1.0, zz_sign: int = 1,
                   points_per_pi: int = 20) -> list[tuple[float, float]]:
    """Max |V^+ U_full(t) V - U_eff(t)| over a grid up to a CZ-length window."""
    rows = []
    for r in ratios:
        Hf, He, V = _pair_full_propagators(r, mu_delta, zz_sign)
        wf, vf = np.linalg.eigh(Hf)
        dev = 0.0
        for t in _time_grid(r, mu_delta, points_per_pi) if r > 0 else np.linspace(0, 10 * math.pi / mu_delta, 201):
            Uf = V.conj().T @ ((vf * np.exp(-1j * wf * t)) @ vf.conj().T) @ V
            Ue = np.diag(np.exp(-1j * np.diag(He).real * t))
            dev = max(dev, float(np.max(np.abs(Uf - Ue))))
        rows.append((float(r), dev))
    return rows


def leakage_scan(ratios: Sequence[float], mu_delta: float = 1.0, points_per_pi: int = 20):
    """Max population leaving the two-qubit space under full-spin exchange.

    Returns rows (ratio, max_leakage) and the log-log slope over nonzero ratios.
    """
    rows = []
    for r in ratios:
        if not 0 <= r <= 0.5:
            raise ContractError("ratios must lie in [0, 0.5]")
        Hf, _, V = _pair_full_propagators(r, mu_delta, 1)
        wf, vf = np.linalg.eigh(Hf)
        leak = 0.0
        grid = _time_grid(r, mu_delta, points_per_pi) if r > 0 else [0.0, 1.0]
        for t in grid:
            U = (vf * np.exp(-1j * wf * t)) @ vf.conj().T @ V
            kept = np.sum(np.abs(V.conj().T @ U) ** 2, axis=0)
            leak = max(leak, float(np.max(1 - kept)))
        rows.append((float(r), max(leak, 0.0)))
    return rows, fit_slope(rows)


def fit_slope(rows) -> float:
    pts = [(r, v) for r, v in rows if r > 0 and v > 0]
    if len(pts) < 2:
        return float("nan")
    x, y = np.log([p[0] for p in pts]), np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])


def is_monotone(rows) -> bool:
    """Deviation never increases as the ratio decreases."""
    srt = sorted(rows)
    return all(a[1] <= b[1] * (1 + 1e-9) for a, b in zip(srt, srt[1:]))


# -- resource counts ---------------------------------------------------------

REFERENCE_RESOURCES = {
    "p1_single": (1, 1, 1),
    "p1_two": (4, 2, 2),
    "p2_single": (3, 2, 1),
    "p2_two": (7, 5, 2),
}


@dataclass
class ResourceCount:
    protocol: str
    gate_count: int
    measurement_count: int
    ancilla_count: int
    leakage_protected: bool

    def as_tuple(self) -> tuple[int, int, int]:
        return self.gate_count, self.measurement_count, self.ancilla_count


def compile_protocol(tag: str, mu_delta: float = pg.DEFAULT_MU_DELTA, j: float = px.J_PHASE,
                     policy: str = "literal", source: ms.OutcomeSource | None = None) -> ProtocolResult:
    """One representative run of a reference protocol (the step list does not depend on outcomes)."""
    src = source or ms.Sampled(0)
    if tag == "p1_single":
        return pg.teleport_rotation(ZERO, math.pi / 2, src, mu_delta=mu_delta)
    if tag == "p1_two":
        return pg.square_gate(np.kron(ZERO, ZERO), 1, 1, src, mu_delta=mu_delta)
    if tag == "p2_single":
        return px.hadamard_sequence(ZERO, src, policy=policy, j=j)
    if tag == "p2_two":
        return px.two_qubit_sequence(np.kron(ZERO, ZERO), src, policy=policy, j=j)
    raise ContractError(f"unknown protocol tag {tag!r}")


def count_resources(tag: str, steps: Sequence[Step], ancillae: Sequence[int],
                    leakage_protected: bool = True) -> ResourceCount:
    gates = sum(len(s.couplings) for s in steps if s.kind == "exchange")
    gates += sum(1 for s in steps if s.kind == "phase")
    meas = sum(1 for s in steps if s.kind == "measure")
    return ResourceCount(tag, gates, meas, len(ancillae), leakage_protected)


def resource_count(tag: str) -> ResourceCount:
    res = compile_protocol(tag)
    return count_resources(tag, res.steps, res.register.ancillae)


# -- timing ----------------------------------------------------------------

@dataclass
class TimingReport:
    schedule: str
    steps: list
    total: float
    note: str

    def rows_ns(self) -> list[tuple[str, float]]:
        return [(name, d * 1e9) for name, d in self.steps]


def gate_time(steps: Sequence[Step], tag: str = "", latency: float = 0.0, note: str = "") -> TimingReport:
    if latency < 0:
        raise ContractError("latency must be >= 0")
    rows = []
    for s in steps:
        if s.kind in ("byproduct", "transfer"):
            continue
        d = s.duration + (latency if s.kind == "measure" else 0.0)
        rows.append((s.label or s.kind, d))
    return TimingReport(tag, rows, float(sum(d for _, d in rows)), note)


def timing_table(j_value: float = 160e6, mu_delta: float = pg.DEFAULT_MU_DELTA,
                 policies: Sequence[str] = ("literal", "heisenberg"), latency: float = 0.0):
    """Reports for every reference schedule with J read as rad/s and as Hz."""
    out = []
    for conv, j in (("rad_per_s", j_value), ("hz", 2 * math.pi * j_value)):
        for policy in policies:
            for tag in REFERENCE_RESOURCES:
                if tag.startswith("p1") and policy != policies[0]:
                    continue
                res = compile_protocol(tag, mu_delta=mu_delta, j=j, policy=policy)
                note = (f"J = {j_value:g} read as {conv} ({j:.4g} rad/s); mu_delta = {mu_delta:.4g} rad/s; "
                        f"phase compile {policy}; measurement latency {latency:g} s")
                if tag.startswith("p1"):
                    note = f"mu_delta = {mu_delta:.4g} rad/s (J not used); measurement latency {latency:g} s"
                out.append((conv, policy, gate_time(res.steps, tag, latency, note)))
    return out


# -- reference closed-form map for the phase sequence -------------------------

def hadamard_map_comparison(phases, policy: str = "ideal") -> list[dict]:
    """Compare every branch of the phase sequence with the reference closed form."""
    rows = []
    for b in branch_maps(lambda psi, src: px.hadamard_sequence(psi, src, phases=phases, policy=policy), 2):
        s_out = b.outcomes[-1]
        row = {"branch": b.branch_id, "probability": b.probability, "leakage": b.leakage}
        if b.kraus is None or s_out == ms.REST:
            row.update(deviation=None, best_s=None)
        else:
            devs = {s: deviation_up_to_phase(b.kraus, px.hadamard_closed_form(phases, s))[0] for s in (0, 1)}
            s_bit = 1 if s_out == ms.SINGLET_OUT else 0
            row.update(deviation=devs[s_bit], best_s=min(devs, key=devs.get),
                       best_deviation=min(devs.values()))
        rows.append(row)
    return rows
