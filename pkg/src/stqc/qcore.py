"""Dense linear algebra on small tensor-product spaces of two-level systems.

States are 1-d complex arrays, operators are 2-d complex arrays.  Subsystems
are identified by arbitrary hashable labels passed alongside the arrays.
The qubit Pauli-z is the textbook one, Z|0> = |0>.
"""
from __future__ import annotations

from functools import reduce
from typing import Hashable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
PROJECTOR_TOL = 1e-10
IMPOSSIBLE_P = 1e-14


class ContractError(ValueError):
    """Raised when an input violates an operation's precondition."""


class ImpossibleOutcome(ContractError):
    def __init__(self, probability: float, where: str = ""):
        self.probability = probability
        self.where = where
        msg = f"branch has probability {probability:.3e}"
        super().__init__(f"{where}: {msg}" if where else msg)


I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def P(theta: float) -> np.ndarray:
    """Phase gate diag(1, e^{i theta})."""
    return np.diag([1.0, np.exp(1j * theta)]).astype(complex)


def W(theta: float) -> np.ndarray:
    """Rotation produced by one rotated-basis teleport: H P(theta)."""
    return H @ P(theta)


def ket(bits: str | Sequence[int]) -> np.ndarray:
    bits = [int(b) for b in bits]
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return v


ZERO = ket("0")
ONE = ket("1")
PLUS = (ZERO + ONE) / np.sqrt(2)
MINUS = (ZERO - ONE) / np.sqrt(2)


def tensor(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product in the given order; all factors must be the same kind."""
    if not factors:
        raise ContractError("tensor needs at least one factor")
    ndims = {np.ndim(f) for f in factors}
    if len(ndims) != 1:
        raise TypeError("cannot mix states and operators in tensor")
    return reduce(np.kron, [np.asarray(f, dtype=complex) for f in factors])


def is_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return A.shape[0] == A.shape[1] and np.max(np.abs(A - A.conj().T), initial=0.0) < tol


def is_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])), initial=0.0) < tol


def is_projector(Pm: np.ndarray, tol: float = PROJECTOR_TOL) -> bool:
    return is_hermitian(Pm, tol) and np.max(np.abs(Pm @ Pm - Pm), initial=0.0) < tol


def evolve(Hm: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) through the eigendecomposition of a hermitian H."""
    Hm = np.asarray(Hm, dtype=complex)
    if not is_hermitian(Hm):
        raise ContractError("evolve requires a hermitian generator")
    if t < 0:
        raise ContractError("evolve requires t >= 0")
    w, v = np.linalg.eigh(Hm)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def project(state: np.ndarray, Pm: np.ndarray) -> tuple[np.ndarray, float]:
    """Return (P|psi>, <psi|P|psi>); the caller renormalizes."""
    out = Pm @ state
    p = float(np.real(np.vdot(out, out)))
    return out, min(max(p, 0.0), 1.0)


def _check_space(targets: Sequence[Hashable], space: Sequence[Hashable]):
    missing = [t for t in targets if t not in space]
    if missing:
        raise ContractError(f"unknown subsystem label(s) {missing}")
    if len(set(targets)) != len(targets):
        raise ContractError("repeated target labels")


def embed(op: np.ndarray, targets: Sequence[Hashable], space: Sequence[Hashable]) -> np.ndarray:
    """Lift `op` acting on `targets` (in that order) to the full labelled space."""
    targets = list(targets)
    space = list(space)
    _check_space(targets, space)
    k, n = len(targets), len(space)
    if op.shape != (2 ** k, 2 ** k):
        raise ContractError(f"operator shape {op.shape} does not match {k} targets")
    rest = [s for s in space if s not in targets]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    # full acts on the ordering targets + rest; permute back to `space`
    order = targets + rest
    perm = [order.index(s) for s in space]
    t = full.reshape([2] * (2 * n))
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(2 ** n, 2 ** n)


def apply_local(op: np.ndarray, state: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply `op` on subsystem positions `targets` of an n-subsystem state.

    `state` may carry a trailing column axis (shape (2**n, k)).
    """
    targets = list(targets)
    k = len(targets)
    cols = state.shape[1:] if state.ndim == 2 else ()
    t = state.reshape([2] * n + list(cols))
    t = np.moveaxis(t, targets, list(range(k)))
    shp = t.shape
    t = (op @ t.reshape(2 ** k, -1)).reshape(shp)
    t = np.moveaxis(t, list(range(k)), targets)
    return t.reshape(state.shape)


def fidelity_states(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ContractError("dimension mismatch")
    return float(abs(np.vdot(a, b)) ** 2)


def normalize(v: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ContractError("cannot normalize the zero vector")
    return v / nrm


def reduced_density(state: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    """Partial trace of a pure n-subsystem state onto positions `keep`."""
    keep = list(keep)
    t = np.moveaxis(state.reshape([2] * n), keep, list(range(len(keep))))
    m = t.reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def random_state(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def max_norm(A: np.ndarray) -> float:
    return float(np.max(np.abs(A), initial=0.0))
