"""Hamiltonians and gate-timing rules for singlet-triplet qubits.

Energies are angular frequencies (rad/s), times are seconds, hbar = 1.

Two encodings are used:

* ``gradient_x_basis`` (gradient qubits): |0> = |ud>, |1> = |du>, so the
  triplet t0 is |+> and the singlet is |->.
* ``exchange_z_basis`` (gradient-free qubits): |0> = singlet, |1> = t0, so
  |+> = |ud>.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .qcore import I2, X, Y, Z, ContractError, embed, tensor

GRADIENT = "gradient_x_basis"
EXCHANGE = "exchange_z_basis"
ENCODINGS = (GRADIENT, EXCHANGE)

UP = np.array([1, 0], dtype=complex)
DOWN = np.array([0, 1], dtype=complex)
UD = np.kron(UP, DOWN)
DU = np.kron(DOWN, UP)
UU = np.kron(UP, UP)
DD = np.kron(DOWN, DOWN)
SINGLET = (UD - DU) / np.sqrt(2)
T0 = (UD + DU) / np.sqrt(2)

MAX_DOTS = 8


class ScheduleError(ContractError):
    """A gate-timing rule has no valid solution for the requested inputs."""


def to_rad_per_s(value: float, unit: str) -> float:
    if unit == "rad_per_s":
        return float(value)
    if unit == "hz":
        return 2 * math.pi * float(value)
    raise ContractError(f"unknown unit tag {unit!r} (expected rad_per_s or hz)")


@dataclass(frozen=True)
class GradientModelParams:
    mu_delta_12: float
    mu_delta_34: float
    mu_delta_b: float
    j23: float

    def __post_init__(self):
        vals = (self.mu_delta_12, self.mu_delta_34, self.mu_delta_b, self.j23)
        if not all(math.isfinite(v) for v in vals):
            raise ContractError("gradient parameters must be finite")
        if self.j23 < 0:
            raise ContractError("j23 must be non-negative")

    @property
    def leakage_suppressed(self) -> bool:
        fields_ = [abs(self.mu_delta_12), abs(self.mu_delta_34), abs(self.mu_delta_b)]
        return self.j23 < 0.1 * min(fields_)

    @classmethod
    def symmetric(cls, mu_delta: float, j23: float) -> "GradientModelParams":
        return cls(mu_delta, mu_delta, mu_delta, j23)


@dataclass(frozen=True)
class ExchangeOnlyParams:
    j12: float
    j34: float
    j23: float

    def __post_init__(self):
        for v in (self.j12, self.j34, self.j23):
            if not math.isfinite(v) or v < 0:
                raise ContractError("exchange couplings must be finite and >= 0")


@dataclass(frozen=True)
class FullSpinModel:
    n_dots: int
    zeeman: tuple[float, ...]
    exchange: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.zeeman) != self.n_dots:
            raise ContractError("one Zeeman energy per dot is required")
        seen = set()
        for (i, j), J in self.exchange.items():
            key = frozenset((i, j))
            if i == j or key in seen:
                raise ContractError(f"bad exchange pair {(i, j)}")
            if not (0 <= i < self.n_dots and 0 <= j < self.n_dots):
                raise ContractError(f"exchange pair {(i, j)} out of range")
            if J < 0 or not math.isfinite(J):
                raise ContractError("exchange couplings must be finite and >= 0")
            seen.add(key)


@dataclass(frozen=True)
class CzSchedule:
    n1: int
    n2: int
    tau: float
    j23: float


def btilde(p: GradientModelParams) -> float:
    """Exchange-induced field shift of the gradient model (closed form, no expansion)."""
    mean = (p.mu_delta_12 + p.mu_delta_34) / 2
    x = p.mu_delta_b - mean
    return 0.5 * (-mean + p.mu_delta_b - math.sqrt(x * x + p.j23 ** 2 / 4))


def _zz_diag(n: int, a: int, b: int) -> np.ndarray:
    za = np.array([1 if not (k >> (n - 1 - a)) & 1 else -1 for k in range(2 ** n)])
    zb = np.array([1 if not (k >> (n - 1 - b)) & 1 else -1 for k in range(2 ** n)])
    return za, zb


def gradient_window_hamiltonian(mu_delta: list[float], edges: list[tuple[int, int, float]],
                                mu_delta_b: float | None = None, zz_sign: int = 1) -> np.ndarray:
    """Effective gradient Hamiltonian for several qubits with exchange on `edges`.

    Each qubit contributes mu_delta[q] * Z_q; each edge (a, b, J) contributes
    btilde * (Z_a + Z_b) + zz_sign * J/4 * Z_a Z_b - J/4.  With two qubits and a
    single edge this is the two-qubit effective model.  ``zz_sign=-1`` gives the
    sign that the isotropic Heisenberg model produces.
    """
    n = len(mu_delta)
    diag = np.zeros(2 ** n)
    for q in range(n):
        zq, _ = _zz_diag(n, q, q)
        diag += mu_delta[q] * zq
    for a, b, J in edges:
        mb = (mu_delta[a] + mu_delta[b]) / 2 if mu_delta_b is None else mu_delta_b
        bt = btilde(GradientModelParams(mu_delta[a], mu_delta[b], mb, J))
        za, zb = _zz_diag(n, a, b)
        diag += bt * (za + zb) + zz_sign * J / 4 * za * zb - J / 4
    return np.diag(diag).astype(complex)


def effective_gradient_hamiltonian(p: GradientModelParams, zz_sign: int = 1) -> np.ndarray:
    """Two-qubit effective model in the basis |00>,|01>,|10>,|11>."""
    return gradient_window_hamiltonian([p.mu_delta_12, p.mu_delta_34], [(0, 1, p.j23)],
                                       mu_delta_b=p.mu_delta_b, zz_sign=zz_sign)


def cz_schedule(n1: int, n2: int, mu_delta: float) -> CzSchedule:
    if n1 == 0:
        raise ScheduleError("n1 must be nonzero")
    j23 = mu_delta * (4 * n1 - 2 * n2 - 1) / n1
    if j23 <= 0:
        raise ScheduleError(f"(n1, n2) = ({n1}, {n2}) gives non-positive exchange")
    if j23 >= 0.1 * abs(mu_delta):
        warnings.warn(f"J23/mu_delta = {j23 / mu_delta:.3g} is outside the leakage-suppressed regime",
                      stacklevel=2)
    return CzSchedule(n1, n2, n1 * math.pi / mu_delta, j23)


def teleport_schedule(theta: float, n: int, mu_delta: float, winding: int = 0) -> tuple[float, float]:
    """(tau, J23) for a rotated-basis teleport of angle theta.

    theta = 2 mu_delta tau; the exchange must satisfy J23 tau = (2n+1) pi.  Extra
    `winding` adds full gradient precession periods, which lowers J23/mu_delta.
    """
    if theta == 0 and winding == 0:
        raise ScheduleError("theta = 0 gives tau = 0 and an unbounded exchange")
    if n < 0 or winding < 0:
        raise ScheduleError("n and winding must be non-negative")
    tau = (theta + 2 * math.pi * winding) / (2 * mu_delta)
    if tau <= 0:
        raise ScheduleError("schedule needs a positive duration")
    return tau, (2 * n + 1) * math.pi / tau


def exchange_only_hamiltonian(p: ExchangeOnlyParams) -> np.ndarray:
    return (p.j12 / 2 * np.kron(Z, I2) + p.j34 / 2 * np.kron(I2, Z)
            - p.j23 / 4 * np.kron(X, X))


def phase_gate(j: float, tau: float) -> np.ndarray:
    if j < 0 or tau < 0:
        raise ContractError("phase gate needs j >= 0 and tau >= 0")
    return np.diag([1.0, np.exp(1j * j * tau)]).astype(complex)


def exchange_angle_for_phase(phi: float, policy: str = "heisenberg") -> float:
    """Non-negative J*tau that realizes the qubit phase gate P(phi).

    Isotropic exchange inside a gradient-free qubit multiplies the singlet by
    e^{iJt} relative to t0, which is P(-J t) in that encoding.  The ``literal``
    policy instead reads the exchange phase gate as diag(1, e^{iJt}).
    """
    if policy == "heisenberg":
        a = (-phi) % (2 * math.pi)
    elif policy == "literal":
        a = phi % (2 * math.pi)
    else:
        raise ContractError(f"unknown phase policy {policy!r}")
    return a


def pair_exchange(n_dots: int, i: int, j: int) -> np.ndarray:
    """S_i . S_j - 1/4 on dots i, j of an n-dot register."""
    ss = (np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z)) / 4 - np.eye(4) / 4
    return embed(ss, [i, j], list(range(n_dots)))


def full_spin_hamiltonian(m: FullSpinModel) -> np.ndarray:
    if m.n_dots > MAX_DOTS:
        raise ContractError(f"at most {MAX_DOTS} dots are supported")
    n = m.n_dots
    dim = 2 ** n
    Hm = np.zeros((dim, dim), dtype=complex)
    space = list(range(n))
    for i, b in enumerate(m.zeeman):
        if b:
            Hm += b / 2 * embed(Z, [i], space)
    for (i, j), J in m.exchange.items():
        if J:
            Hm += J * pair_exchange(n, i, j)
    return Hm


def encoding_basis(encoding: str) -> np.ndarray:
    """4x2 isometry taking one qubit into its two dots."""
    if encoding == GRADIENT:
        return np.stack([UD, DU], axis=1)
    if encoding == EXCHANGE:
        return np.stack([SINGLET, T0], axis=1)
    raise ContractError(f"unknown encoding {encoding!r}")


def qubit_subspace_embedding(encoding: str, n_qubits: int) -> np.ndarray:
    if n_qubits < 1 or n_qubits > 4:
        raise ContractError("1 to 4 qubits supported")
    v = encoding_basis(encoding)
    return tensor(*([v] * n_qubits))


def gradient_dot_fields(mu_delta: list[float], mu_delta_b: list[float] | None = None,
                        b0: float = 0.0) -> list[float]:
    """Per-dot Zeeman energies for a chain of gradient qubits.

    Qubit q sees mu_delta[q] * Z_q.  Between qubits q and q+1 the inner dots are
    split by 2*mu_delta_b[q] - mu_delta[q] - mu_delta[q+1]; that gap sets the
    exchange dressing.  It vanishes when mu_delta_b equals the mean gradient,
    where exchange mixes the qubit states with |uudd>, |dduu> at first order,
    so the default puts mu_delta_b at the sum of the neighbouring gradients.
    """
    n = len(mu_delta)
    if mu_delta_b is None:
        mu_delta_b = [mu_delta[q] + mu_delta[q + 1] for q in range(n - 1)]
    out = [b0]
    for q in range(n):
        if q > 0:
            out.append(out[-1] - (2 * mu_delta_b[q - 1] - mu_delta[q - 1] - mu_delta[q]))
        out.append(out[-1] - 2 * mu_delta[q])
    return out
