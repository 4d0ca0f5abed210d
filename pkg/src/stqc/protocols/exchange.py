"""Full-spin protocols driven by phase gates and singlet-triplet measurements."""
from __future__ import annotations

import math

import numpy as np

from .. import measure as ms
from ..qcore import CZ, H, PLUS, ContractError
from ..spinmodels import EXCHANGE, GRADIENT, exchange_angle_for_phase
from .common import ProtocolResult, finish
from .schedule import FULL, Register, Runner, Step

J_PHASE = 2 * math.pi * 160e6
PHASE_POLICIES = ("heisenberg", "literal", "ideal")


def _phase(r: Runner, q: int, phi: float, j: float, policy: str, label: str):
    """Apply the qubit phase gate P(phi) by intra-qubit exchange (or ideally)."""
    if policy == "ideal":
        if phi % (2 * math.pi):
            r.run(Step("zrot", (q,), angle=phi, label=label))
        return
    a = exchange_angle_for_phase(phi, policy)
    if a > 0:
        r.run(Step("phase", (q,), duration=a / j, j=j, label=label))


def quantum_bus(psi, source: ms.OutcomeSource, outcome_model: str = ms.S_T0,
                encoding: str = GRADIENT) -> ProtocolResult:
    """Move psi from q0 to q1 with an inner-dot measurement and a readout of q0.

    q1 starts in t0.  With ``gradient_x_basis`` qubits and the three-outcome
    readout the result is X^a Z^s psi, where a = 1 when the inner dots were
    found polarized.  A polarized readout of q0 leaves q1 outside the qubit
    space and is flagged.
    """
    reg = Register(2, encoding, FULL, ancillae=(1,))
    r = Runner(reg, reg.initial_state(None, {1: _t0(encoding)}, psi, [0]), source)
    m = r.measure((0, 1), label="inner", outcome_model=outcome_model)
    s = r.measure((0,), label="q0", outcome_model=outcome_model)
    a = 1 if m == ms.REST else 0
    r.byproduct(1, x=a, z=1 if s == ms.SINGLET_OUT else 0)
    return finish(r, "bus", [1],
                          np.eye(2, dtype=complex), {"m": m, "s": s})


def _t0(encoding: str) -> np.ndarray:
    return PLUS if encoding == GRADIENT else np.array([0, 1], dtype=complex)


def hadamard_sequence(psi, source: ms.OutcomeSource,
                      phases=(math.pi / 2, -math.pi / 2, math.pi / 2, 0.0),
                      outcome_model: str = ms.S_T0, policy: str = "heisenberg",
                      j: float = J_PHASE) -> ProtocolResult:
    """Two gradient-free qubits: psi and a |+> = |ud> ancilla.

    Phases (p1, p2) are applied to (psi, ancilla), the inner dots are measured,
    then (p3, p4) are applied and the ancilla is read out.  For the default
    phases the logical qubit ends in Y^c H psi with c = s xor a, where s is the
    ancilla outcome and a = 1 unless the inner dots were polarized.  A
    polarized ancilla readout is flagged.
    """
    if policy not in PHASE_POLICIES:
        raise ContractError(f"unknown phase policy {policy!r}")
    p1, p2, p3, p4 = phases
    reg = Register(2, EXCHANGE, FULL, ancillae=(1,))
    r = Runner(reg, reg.initial_state(None, {1: PLUS}, psi, [0]), source)
    _phase(r, 0, p1, j, policy, "psi:P1")
    _phase(r, 1, p2, j, policy, "anc:P2")
    m = r.measure((0, 1), label="M", outcome_model=outcome_model)
    _phase(r, 0, p3, j, policy, "psi:P3")
    _phase(r, 1, p4, j, policy, "anc:P4")
    s = r.measure((1,), label="s", outcome_model=outcome_model)
    a = 0 if m == ms.REST else 1
    c = ((1 if s == ms.SINGLET_OUT else 0) + a) % 2
    r.byproduct(0, x=c, z=c)
    return finish(r, "hadamard", [0], H,
                          {"m": m, "s": s, "phases": [float(p) for p in phases], "policy": policy})


def two_qubit_sequence(psi, source: ms.OutcomeSource, outcome_model: str = ms.S_T0,
                       policy: str = "heisenberg", j: float = J_PHASE,
                       outputs: tuple[int, int] = (1, 0)) -> ProtocolResult:
    """Four gradient-free qubits (a1, psi1, a2, psi2) = (0, 1, 2, 3).

    `psi` is a 4-vector or 4 x k matrix over (psi1, psi2).  After the phase
    and measurement sequence, a2 and psi2 are read out (s1, s2) and the
    logical pair is taken from wires `outputs` (psi1's wire first), with
    X^{s1+s2} recorded on the second.
    """
    if policy not in PHASE_POLICIES:
        raise ContractError(f"unknown phase policy {policy!r}")
    A1, Q1, A2, Q2 = 0, 1, 2, 3
    reg = Register(4, EXCHANGE, FULL, ancillae=(A1, A2))
    r = Runner(reg, reg.initial_state(None, {A1: PLUS, A2: PLUS}, psi, [Q1, Q2]), source)
    _phase(r, A1, -math.pi / 2, j, policy, "a1:Pdag")
    _phase(r, A2, math.pi / 2, j, policy, "a2:P")
    _phase(r, Q2, math.pi, j, policy, "psi2:Z")
    r.measure((A2, Q2), label="M34", outcome_model=outcome_model)
    _phase(r, Q2, math.pi, j, policy, "psi2:Z")
    r.measure((Q1, A2), label="M23", outcome_model=outcome_model)
    _phase(r, Q1, -math.pi / 2, j, policy, "psi1:Pdag")
    r.measure((A1, Q1), label="M12", outcome_model=outcome_model)
    _phase(r, Q1, math.pi, j, policy, "psi1:Z")
    _phase(r, A2, math.pi, j, policy, "a2:Z")
    s1 = r.measure((A2,), label="s1", outcome_model=outcome_model)
    s2 = r.measure((Q2,), label="s2", outcome_model=outcome_model)
    bit = lambda o: 1 if o == ms.SINGLET_OUT else 0
    r.byproduct(outputs[1], x=bit(s1) + bit(s2))
    HH = np.kron(H, H)
    return finish(r, "two_qubit", list(outputs),
                          HH @ CZ @ HH, {"s1": s1, "s2": s2, "policy": policy})


def hadamard_closed_form(phases, s: int) -> np.ndarray:
    """Reference closed-form single-qubit map for the phase sequence (no dependence on the fourth phase)."""
    p1, p2, p3 = phases[:3]
    sg = (-1) ** s
    return np.array([[1, np.exp(1j * (p1 + sg * p2))],
                     [np.exp(1j * (sg * p1 + p2)), np.exp(1j * (p2 + p3))]]) / math.sqrt(2)
