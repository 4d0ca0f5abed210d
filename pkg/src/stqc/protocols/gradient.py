"""Protocols for gradient qubits: rotated-basis teleports and multi-qubit exchange windows."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .. import measure as ms
from ..qcore import CX, H, I2, PLUS, ContractError, W, X, Z, apply_local, evolve
from ..spinmodels import GRADIENT, ScheduleError, cz_schedule, gradient_window_hamiltonian, teleport_schedule
from .common import ProtocolResult, finish, wrap_positive
from .schedule import EFFECTIVE, Register, Runner, Step

DEFAULT_MU_DELTA = math.pi / (4 * 20e-9)


def _register(n, mu_delta, level=EFFECTIVE, zz_sign=1, mu_delta_b=None, ancillae=()):
    return Register(n, GRADIENT, level, (mu_delta,) * n, mu_delta_b, zz_sign, tuple(ancillae))


def _teleport(r: Runner, src: int, dst: int, theta_p: float, n: int, winding: int,
              s_prev: int, label: str) -> int:
    theta_p = wrap_positive(theta_p)
    tau, J = teleport_schedule(theta_p, n, r.reg.mu_delta[src], winding)
    r.exchange([(min(src, dst), max(src, dst), J)], tau, label=label)
    s = r.measure((src,), label=f"{label}:s")
    r.transfer(src, dst)
    r.byproduct(dst, angle=(-1) ** s * theta_p)
    r.byproduct(dst, x=s)
    r.byproduct(dst, z=s_prev)
    return s


def teleport_rotation(psi, theta: float, source: ms.OutcomeSource, n: int = 0,
                      mu_delta: float = DEFAULT_MU_DELTA, winding: int = 0,
                      level: str = EFFECTIVE, zz_sign: int = 1) -> ProtocolResult:
    """Teleport psi onto a |+> ancilla through one exchange window.

    The ancilla ends in X^s P((-1)^s theta) W(theta) psi.  `psi` may be a
    2-vector or a 2 x k matrix of input columns.  theta = 2 pi stands in for
    a zero rotation; theta = 0 itself has no finite schedule.
    """
    if theta == 0 and winding == 0:
        raise ScheduleError("theta = 0 gives tau = 0 and an unbounded exchange")
    reg = _register(2, mu_delta, level, zz_sign, ancillae=(1,))
    r = Runner(reg, reg.initial_state(None, {1: PLUS}, psi, [0]), source)
    _teleport(r, 0, 1, theta, n, winding, 0, "teleport")
    return finish(r, "teleport", [1],
                          W(wrap_positive(theta)), {"theta": theta})


def prepare_state(theta: float, phi_delta: float, source: ms.OutcomeSource, n: int = 0,
                  mu_delta: float = DEFAULT_MU_DELTA, winding: int = 0) -> ProtocolResult:
    """Prepare a rotated state from two |+> qubits.

    Both qubits first precess freely through phi_delta, then one exchange
    window of angle theta - phi_delta teleports qubit 0 onto qubit 1.  The
    output is left uncorrected; see `prepared_state`.
    """
    reg = _register(2, mu_delta, ancillae=(0, 1))
    r = Runner(reg, reg.initial_state({}, {0: PLUS, 1: PLUS}), source)
    idle = math.fmod(phi_delta, 2 * math.pi) % (2 * math.pi)
    if idle > 0:
        r.idle((0, 1), idle / (2 * mu_delta), label="precess")
    s = _teleport(r, 0, 1, theta - idle, n, winding, 0, "prepare")
    return finish(r, "prepare", [1],
                          None, {"theta": theta, "phi_delta": phi_delta, "s": s})


def prepared_state(theta: float, s: int) -> np.ndarray:
    a = (math.pi * s + theta) / 2
    return np.array([math.cos(a), -1j * np.exp(1j * theta) * math.sin(a)])


def recycled_sequence(psi, angles: Sequence[float], source: ms.OutcomeSource,
                      mode: str = "adjust", s1: int = 0, n: int = 0,
                      mu_delta: float = DEFAULT_MU_DELTA, winding: int = 0) -> ProtocolResult:
    """Ping-pong teleports between two qubits, one per angle.

    The receiving qubit starts in Z^s1 |+>.  In ``adjust`` mode each angle is
    changed to absorb the accumulated byproduct so the intended rotations are
    exactly W(angles[k]); in ``raw`` mode the angles are used unchanged and the
    realized rotations carry the byproduct signs.
    """
    if mode not in ("adjust", "raw"):
        raise ContractError(f"unknown mode {mode!r}")
    reg = _register(2, mu_delta, ancillae=(1,))
    start = PLUS if s1 == 0 else Z @ PLUS
    r = Runner(reg, reg.initial_state(None, {1: start}, psi, [0]), source)
    prev = {0: 0, 1: s1}
    host = 0
    realized = []
    for k, theta in enumerate(angles):
        f = r.ledger.frame(host)
        theta_p = theta if mode == "raw" else (-1) ** f.x * (theta - f.beta)
        theta_p = wrap_positive(theta_p)
        realized.append((-1) ** f.x * theta_p + f.beta)
        dst = 1 - host
        prev[host] = _teleport(r, host, dst, theta_p, n, winding, prev[dst], f"teleport{k}")
        host = dst
    target = I2
    for a in realized:
        target = W(a) @ target
    return finish(r, "recycle", [host], target,
                          {"mode": mode, "realized": [float(a) for a in realized],
                           "angles": [float(a) for a in angles]})


def square_gate(psi, n1: int, n2: int, source: ms.OutcomeSource,
                mu_delta: float = DEFAULT_MU_DELTA, couplings: dict | None = None,
                level: str = EFFECTIVE) -> ProtocolResult:
    """Four qubits on a ring (TL, TR, BR, BL) in one exchange window.

    Inputs sit on TR and BL (psi is a 4-vector or 4 x k matrix over them),
    TL and BR start in |+>.  Every edge uses J = 2(2 n1 - 1) mu_delta unless
    `couplings` maps an edge (a, b) to another value; the window lasts
    (2 n2 - 1) pi / (2 mu_delta).  TR and BL are then measured and the logical
    outputs read from (BR, TL).
    """
    TL, TR, BR, BL = 0, 1, 2, 3
    J = 2 * (2 * n1 - 1) * mu_delta
    tau = (2 * n2 - 1) * math.pi / (2 * mu_delta)
    if J <= 0 or tau <= 0:
        raise ContractError("(n1, n2) must give positive exchange and duration")
    edges = {(TL, TR): J, (TR, BR): J, (BR, BL): J, (BL, TL): J}
    for e, v in (couplings or {}).items():
        key = tuple(e) if tuple(e) in edges else tuple(reversed(tuple(e)))
        if key not in edges:
            raise ContractError(f"{e} is not an edge of the ring")
        edges[key] = float(v)
    reg = _register(4, mu_delta, level, ancillae=(TL, BR))
    r = Runner(reg, reg.initial_state(None, {TL: PLUS, BR: PLUS}, psi, [TR, BL]), source)
    r.exchange([(a, b, v) for (a, b), v in edges.items()], tau, label="square")
    s1 = r.measure((TR,), label="TR")
    s2 = r.measure((BL,), label="BL")
    r.byproduct(BR, x=s1 + s2)
    r.byproduct(TL, x=s2)
    return finish(r, "square", [BR, TL],
                          np.kron(H, H) @ CX, {"n1": n1, "n2": n2, "J": J, "tau": tau})


def cz_window(n1: int, n2: int, mu_delta: float = DEFAULT_MU_DELTA, zz_sign: int = 1):
    """Two-qubit propagator of the CZ exchange schedule and its local z-phases."""
    sch = cz_schedule(n1, n2, mu_delta)
    U = evolve(gradient_window_hamiltonian([mu_delta, mu_delta], [(0, 1, sch.j23)], zz_sign=zz_sign),
               sch.tau)
    return sch, U


def local_phases(U: np.ndarray, n: int) -> tuple[float, list[float]]:
    """For a diagonal U = e^{ig} prod_q P(a_q) * (pairwise-phase part), return (g, a)."""
    d = np.diag(U)
    g = np.angle(d[0])
    a = [float(np.angle(d[1 << (n - 1 - q)] / d[0])) for q in range(n)]
    return float(g), a


STABILIZERS = {
    "S1": {0: X, 1: Z},
    "S2": {0: Z, 1: X, 3: X, 4: Z},
    "S3": {3: Z, 4: X},
}


def _expect(state, ops: dict, n: int) -> float:
    v = state
    for q, op in ops.items():
        v = apply_local(op, v, [q], n)
    return float(np.real(np.vdot(state, v) / np.vdot(state, state)))


def stabilizer_roundtrip(psi, angles: Sequence[float], source: ms.OutcomeSource,
                         error: tuple[str, int] | None = None, n: int = 0,
                         mu_delta: float = DEFAULT_MU_DELTA, cz: tuple[int, int] = (11, 21),
                         winding: int = 0) -> ProtocolResult:
    """Chain of five qubits: rotate by teleports, encode, check, decode.

    psi starts on Q1 and is teleported down the chain with W(angles[0..2]) and
    then W(0) onto Q5 and back to Q3, so Q3 holds W(0) W(a2) W(a1) W(a0) psi
    after two more identity-like hops (H H = I).  Q3's frame is then removed,
    the other qubits reset to |+>, CZ is applied to all neighbours and Q3 is
    measured.  `error` = (pauli, qubit) is applied to one of Q1, Q2, Q4, Q5
    (indices 0, 1, 3, 4) before the three stabilizers are evaluated; Q2, Q4, Q5
    are then measured and Q1 carries the result.
    """
    if len(angles) != 3:
        raise ContractError("three rotation angles are needed")
    reg = _register(5, mu_delta, ancillae=(1, 2, 3, 4))
    r = Runner(reg, reg.initial_state(None, {q: PLUS for q in range(1, 5)}, psi, [0]), source)
    prev = {q: 0 for q in range(5)}
    hops = [(0, 1, angles[0]), (1, 2, angles[1]), (2, 3, angles[2]), (3, 4, 0.0),
            (4, 3, 0.0), (3, 2, 0.0)]
    for k, (a, b, theta) in enumerate(hops):
        f = r.ledger.frame(a)
        theta_p = (-1) ** f.x * (theta - f.beta)
        prev[a] = _teleport(r, a, b, theta_p, n, winding, prev[b], f"hop{k}")
    # clear Q3's frame: actual = Z^z X^x P(b) target
    f = r.ledger.frame(2)
    if f.z:
        r.run(_pauli(2, 0, 1, True))
    if f.x:
        r.run(_pauli(2, 1, 0, True))
    r.run(Step("zrot", (2,), angle=-f.beta, track=True, label="clear"))
    for q in (0, 1, 3, 4):
        if prev[q]:
            r.run(_pauli(q, 0, 1, False, "reset"))
    sch = cz_schedule(*cz, mu_delta)
    edges = [(q, q + 1, sch.j23) for q in range(4)]
    r.exchange(edges, sch.tau, label="encode")
    Ud = evolve(gradient_window_hamiltonian([mu_delta] * 5, edges), sch.tau)
    _, ph = local_phases(Ud, 5)
    for q in range(5):
        r.run(Step("zrot", (q,), angle=-ph[q], label="cz-frame"))
    sp = r.measure((2,), label="Q3")
    if error is not None:
        p, q = error
        if q not in (0, 1, 3, 4) or p not in ("X", "Y", "Z"):
            raise ContractError(f"bad error {error}")
        x, z = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}[p]
        r.run(_pauli(q, x, z, False, "error"))
    syn = {k: _expect(r.state, ops, 5) for k, ops in STABILIZERS.items()}
    t2 = r.measure((1,), label="Q2")
    t4 = r.measure((3,), label="Q4")
    t5 = r.measure((4,), label="Q5")
    r.byproduct(0, x=t2, z=t5 + sp)
    target = H @ W(angles[2]) @ W(angles[1]) @ W(angles[0])
    return finish(r, "stabilizer", [0], target,
                          {"syndromes": syn, "error": list(error) if error else [],
                           "cz_phases": ph})


def _pauli(q, x, z, track, label="correct"):
    return Step("pauli", (q,), x=x, z=z, track=track, label=label)


def syndrome_table(psi=None, angles=(0.3, 1.1, 2.0), mu_delta: float = DEFAULT_MU_DELTA,
                   seed: int = 0) -> dict:
    """Syndrome signs for no error and every single-qubit Pauli on the four code qubits."""
    if psi is None:
        psi = np.array([0.6, 0.8j])
    rows = {}
    for err in [None] + [(p, q) for q in (0, 1, 3, 4) for p in "XYZ"]:
        res = stabilizer_roundtrip(psi, angles, ms.Sampled(seed), err, mu_delta=mu_delta)
        key = "none" if err is None else f"{err[0]}{err[1] + 1}"
        rows[key] = {k: int(round(v)) for k, v in res.info["syndromes"].items()}
    return rows
