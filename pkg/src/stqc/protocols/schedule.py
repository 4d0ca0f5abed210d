"""Protocol steps, the register they act on, Pauli-frame ledger and executor."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import measure as ms
from ..qcore import (IMPOSSIBLE_P, ContractError, I2, P, X, Z, apply_local, evolve,
                     tensor)
from ..spinmodels import (EXCHANGE, GRADIENT, FullSpinModel, encoding_basis, full_spin_hamiltonian,
                          gradient_dot_fields, gradient_window_hamiltonian)

EFFECTIVE, FULL = "effective", "full"
STEP_KINDS = ("exchange", "phase", "measure", "pauli", "zrot", "byproduct", "transfer")


@dataclass
class Step:
    """One schedule entry.

    kinds
      exchange   inter-qubit exchange window: `couplings` = [(a, b, J)], `duration`
      phase      intra-qubit exchange J on `qubits[0]` for `duration`
      measure    singlet-triplet readout of one qubit, or of the inner dots of two
      pauli      physical Z^z X^x on `qubits[0]`
      zrot       physical P(angle) on `qubits[0]`
      byproduct  ledger only: record Z^z X^x P(angle) picked up by `qubits[0]`
      transfer   ledger only: move the frame of qubits[0] to qubits[1] through H
    `track` makes pauli/zrot steps update the ledger too.
    """
    kind: str
    qubits: tuple = ()
    duration: float = 0.0
    couplings: tuple = ()
    j: float = 0.0
    outcome_model: str = ms.ALL_TRIPLET
    outcome: int | None = None
    x: int = 0
    z: int = 0
    angle: float = 0.0
    track: bool = False
    label: str = ""

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise ContractError(f"unknown step kind {self.kind!r}")
        if self.duration < 0:
            raise ContractError("step duration must be >= 0")
        self.qubits = tuple(int(q) for q in self.qubits)
        self.couplings = tuple((int(a), int(b), float(J)) for a, b, J in self.couplings)
        for _, _, J in self.couplings:
            if J < 0:
                raise ContractError("exchange couplings must be >= 0")
        if self.j < 0:
            raise ContractError("exchange couplings must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["qubits"] = list(self.qubits)
        d["couplings"] = [list(c) for c in self.couplings]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Step":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ContractError(f"unknown step field(s) {sorted(extra)}")
        return cls(**d)


@dataclass
class Register:
    """Simulation level, encoding and fields of a chain of qubits."""
    n_qubits: int
    encoding: str = GRADIENT
    level: str = EFFECTIVE
    mu_delta: tuple = ()
    mu_delta_b: tuple | None = None
    zz_sign: int = 1
    ancillae: tuple = ()

    def __post_init__(self):
        if self.level not in (EFFECTIVE, FULL):
            raise ContractError(f"unknown level {self.level!r}")
        if not self.mu_delta:
            self.mu_delta = (0.0,) * self.n_qubits
        self.mu_delta = tuple(float(v) for v in self.mu_delta)
        if len(self.mu_delta) != self.n_qubits:
            raise ContractError("one gradient per qubit is required")
        if self.level == FULL and self.n_qubits > 4:
            raise ContractError("full spin level supports at most 4 qubits")

    @property
    def n_sites(self) -> int:
        return self.n_qubits if self.level == EFFECTIVE else 2 * self.n_qubits

    @property
    def site_dim(self) -> int:
        return 2 if self.level == EFFECTIVE else 4

    def dot_fields(self) -> list[float]:
        mb = None if self.mu_delta_b is None else list(self.mu_delta_b)
        return gradient_dot_fields(list(self.mu_delta), mb)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mu_delta"] = list(self.mu_delta)
        d["mu_delta_b"] = None if self.mu_delta_b is None else list(self.mu_delta_b)
        d["ancillae"] = list(self.ancillae)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Register":
        d = dict(d)
        d["mu_delta"] = tuple(d.get("mu_delta", ()))
        if d.get("mu_delta_b") is not None:
            d["mu_delta_b"] = tuple(d["mu_delta_b"])
        d["ancillae"] = tuple(d.get("ancillae", ()))
        return cls(**d)

    # -- operators -------------------------------------------------------
    def qubit_op(self, op: np.ndarray) -> np.ndarray:
        """Lift a 2x2 encoded-qubit operator to this level (identity on leakage)."""
        if self.level == EFFECTIVE:
            return op
        V = encoding_basis(self.encoding)
        return V @ op @ V.conj().T + (np.eye(4) - V @ V.conj().T)

    def qubit_sites(self, q: int) -> list[int]:
        return [q] if self.level == EFFECTIVE else [2 * q, 2 * q + 1]

    def window_unitary(self, qubits: Sequence[int], couplings, duration: float):
        """Propagator of an exchange window on the listed qubits, and its sites."""
        qs = sorted(set(qubits) | {a for a, _, _ in couplings} | {b for _, b, _ in couplings})
        if self.level == EFFECTIVE:
            if self.encoding != GRADIENT:
                raise ContractError("effective exchange windows are defined for gradient qubits")
            idx = {q: i for i, q in enumerate(qs)}
            mb = None
            if self.mu_delta_b is not None and len(qs) == 2 and qs[1] == qs[0] + 1:
                mb = self.mu_delta_b[qs[0]]
            Hm = gradient_window_hamiltonian([self.mu_delta[q] for q in qs],
                                             [(idx[a], idx[b], J) for a, b, J in couplings],
                                             mu_delta_b=mb, zz_sign=self.zz_sign)
            return evolve(Hm, duration), qs
        fields = self.dot_fields()
        dots = [d for q in qs for d in (2 * q, 2 * q + 1)]
        didx = {d: i for i, d in enumerate(dots)}
        exch = {}
        for a, b, J in couplings:
            if abs(a - b) != 1:
                raise ContractError("full-level exchange couples adjacent qubits only")
            lo, hi = min(a, b), max(a, b)
            exch[(didx[2 * lo + 1], didx[2 * hi])] = J
        model = FullSpinModel(len(dots), tuple(fields[d] for d in dots), exch)
        return evolve(full_spin_hamiltonian(model), duration), dots

    def intra_unitary(self, q: int, j: float, duration: float) -> np.ndarray:
        if self.level == EFFECTIVE:
            if self.encoding != EXCHANGE:
                raise ContractError("effective intra-qubit exchange is modelled for gradient-free qubits")
            # singlet (|0>) picks up e^{iJt} relative to t0
            return np.diag([np.exp(1j * j * duration), 1.0]).astype(complex)
        f = self.dot_fields()[2 * q:2 * q + 2]
        model = FullSpinModel(2, tuple(f), {(0, 1): j})
        return evolve(full_spin_hamiltonian(model), duration)

    def initial_state(self, logical: dict[int, np.ndarray] | None, fixed: dict[int, np.ndarray],
                      columns: np.ndarray | None = None, logical_order: Sequence[int] = ()):
        """Build the register state.

        `fixed` maps qubit -> 2-vector.  Logical inputs are either given per qubit
        in `logical` or jointly as `columns` (2^m x k, or a 2^m vector) over
        `logical_order`.  Returns a vector, or a matrix with one column per input.
        """
        n = self.n_qubits
        if columns is None:
            vecs = [None] * n
            for q, v in {**fixed, **(logical or {})}.items():
                vecs[q] = np.asarray(v, dtype=complex)
            if any(v is None for v in vecs):
                raise ContractError("every qubit needs an initial state")
            state = tensor(*vecs)
        else:
            cols = np.asarray(columns, dtype=complex)
            single = cols.ndim == 1
            cols = cols.reshape(2 ** len(logical_order), -1)
            k = cols.shape[1]
            others = [q for q in range(n) if q not in logical_order]
            if set(others) != set(fixed):
                raise ContractError("fixed states must cover the non-logical qubits")
            rest = tensor(*[fixed[q] for q in others]) if others else np.ones(1, dtype=complex)
            t = np.einsum("ik,j->ijk", cols, rest).reshape([2] * n + [k])
            order = list(logical_order) + others
            perm = [order.index(q) for q in range(n)]
            state = t.transpose(perm + [n]).reshape(2 ** n, k)
            if single:
                state = state[:, 0]
        if self.level == FULL:
            V = tensor(*([encoding_basis(self.encoding)] * n))
            state = V @ state
        return state


@dataclass
class Frame:
    x: int = 0
    z: int = 0
    beta: float = 0.0

    def operator(self) -> np.ndarray:
        return np.linalg.matrix_power(Z, self.z) @ np.linalg.matrix_power(X, self.x) @ P(self.beta)


class CorrectionLedger:
    """Per-qubit frames: the physical qubit holds Z^z X^x P(beta) applied to the
    intended state, up to a global phase."""

    def __init__(self, frames: dict[int, Frame] | None = None, history: list | None = None):
        self.frames: dict[int, Frame] = {int(k): Frame(v.x, v.z, v.beta) for k, v in (frames or {}).items()}
        self.history: list[int] = list(history or [])

    def frame(self, q: int) -> Frame:
        return self.frames.get(q, Frame())

    def left_multiply(self, q: int, x: int = 0, z: int = 0, angle: float = 0.0):
        f = self.frame(q)
        self.frames[q] = Frame((f.x + x) % 2, (f.z + z) % 2, _wrap((-1) ** f.x * angle + f.beta))

    def transfer(self, src: int, dst: int):
        """Carry the Pauli part of src's frame through a Hadamard onto dst.

        The phase part is consumed by the rotation angle of the teleport that
        moves the state (either folded into the next angle or left in the gate)."""
        f = self.frame(src)
        self.frames.pop(src, None)
        self.frames[dst] = Frame(f.z, f.x, 0.0)

    def compose(self, other: "CorrectionLedger") -> "CorrectionLedger":
        """Ledger of applying `other` first, then `self`."""
        out = CorrectionLedger(other.frames, other.history + self.history)
        for q, f in self.frames.items():
            g = out.frame(q)
            out.frames[q] = Frame((f.x + g.x) % 2, (f.z + g.z) % 2, _wrap((-1) ** g.x * f.beta + g.beta))
        return out

    def operator(self, qubits: Sequence[int]) -> np.ndarray:
        return tensor(*[self.frame(q).operator() for q in qubits])

    def powers(self, q: int) -> tuple[int, int]:
        f = self.frame(q)
        return f.x, f.z

    def to_dict(self) -> dict:
        return {"frames": {str(q): asdict(f) for q, f in sorted(self.frames.items())},
                "history": list(self.history)}

    @classmethod
    def from_dict(cls, d: dict) -> "CorrectionLedger":
        return cls({int(q): Frame(**f) for q, f in d["frames"].items()}, d.get("history", []))


def _wrap(a: float) -> float:
    a = math.fmod(a, 2 * math.pi)
    return a + 2 * math.pi if a < 0 else a


class Runner:
    """Executes steps one at a time so protocols can feed outcomes forward."""

    def __init__(self, register: Register, state: np.ndarray, source: ms.OutcomeSource):
        self.reg = register
        self.state = state
        self.initial = state
        self.source = source
        self.steps: list[Step] = []
        self.records: list[ms.MeasurementRecord] = []
        self.ledger = CorrectionLedger()
        self.outcomes: dict[str, int] = {}

    def run(self, step: Step):
        idx = len(self.steps)
        reg = self.reg
        out = None
        if step.kind == "exchange":
            U, sites = reg.window_unitary(step.qubits, step.couplings, step.duration)
            self.state = apply_local(U, self.state, sites, reg.n_sites)
        elif step.kind == "phase":
            q = step.qubits[0]
            U = reg.intra_unitary(q, step.j, step.duration)
            self.state = apply_local(U, self.state, reg.qubit_sites(q), reg.n_sites)
        elif step.kind in ("pauli", "zrot"):
            q = step.qubits[0]
            if step.kind == "pauli":
                op = np.linalg.matrix_power(Z, step.z) @ np.linalg.matrix_power(X, step.x)
            else:
                op = P(step.angle)
            self.state = apply_local(reg.qubit_op(op), self.state, reg.qubit_sites(q), reg.n_sites)
            if step.track:
                self.ledger.left_multiply(q, step.x, step.z, step.angle if step.kind == "zrot" else 0.0)
        elif step.kind == "byproduct":
            self.ledger.left_multiply(step.qubits[0], step.x, step.z, step.angle)
        elif step.kind == "transfer":
            self.ledger.transfer(step.qubits[0], step.qubits[1])
        elif step.kind == "measure":
            out = self._measure(step, idx)
            step.outcome = out
        self.steps.append(step)
        return out

    def _measure(self, step: Step, idx: int) -> int:
        reg = self.reg
        where = f"step {idx} ({step.label or 'measure'})"
        src = self.source
        if step.outcome is not None and src is None:
            src = ms.Forced([step.outcome])
        if reg.level == EFFECTIVE:
            if len(step.qubits) != 1:
                raise ContractError("entangling measurements need the full spin level")
            q = step.qubits[0]
            projs = ms.qubit_level_projectors(reg.encoding)
            out, p, self.state = ms.measure_local(self.state, projs, [q], reg.n_sites, src, where)
            spec = ms.MeasurementSpec((2 * q, 2 * q + 1), ms.ALL_TRIPLET)
        else:
            if len(step.qubits) == 1:
                q = step.qubits[0]
                dots = (2 * q, 2 * q + 1)
            else:
                dots = ms.inner_dots(*step.qubits)
            spec = ms.MeasurementSpec(dots, step.outcome_model)
            out, p, self.state = ms.measure_local(self.state, ms.pair_projectors(step.outcome_model),
                                                  list(dots), reg.n_sites, src, where)
        rec = ms.MeasurementRecord(spec, out, p, idx, step.label)
        self.records.append(rec)
        self.ledger.history.append(out)
        if step.label:
            self.outcomes[step.label] = out
        return out

    # convenience wrappers
    def exchange(self, couplings, duration, label=""):
        qs = sorted({a for a, _, _ in couplings} | {b for _, b, _ in couplings})
        return self.run(Step("exchange", tuple(qs), duration, tuple(couplings), label=label))

    def idle(self, qubits, duration, label=""):
        return self.run(Step("exchange", tuple(qubits), duration, (), label=label))

    def measure(self, qubits, label="", outcome_model=ms.ALL_TRIPLET):
        return self.run(Step("measure", tuple(qubits), outcome_model=outcome_model, label=label))

    def byproduct(self, q, x=0, z=0, angle=0.0, label=""):
        if x or z or angle:
            self.run(Step("byproduct", (q,), x=x % 2, z=z % 2, angle=angle, label=label))

    def transfer(self, src, dst):
        self.run(Step("transfer", (src, dst)))


def run_schedule(steps: Sequence[Step], register: Register, initial: np.ndarray,
                 source: ms.OutcomeSource | None = None):
    """Replay a step list.  With no source, recorded outcomes are forced."""
    r = Runner(register, initial, source)
    for st in steps:
        st = Step.from_dict(st.to_dict())
        if source is not None and st.kind == "measure":
            st.outcome = None
        r.run(st)
    return r.state, r.ledger, r.records


def total_duration(steps: Sequence[Step]) -> float:
    return float(sum(st.duration for st in steps))


class _Explorer(ms.OutcomeSource):
    def __init__(self, prefix: list[int]):
        self.prefix = prefix
        self.taken: list[int] = []
        self.options: list[list[int]] = []

    def choose(self, probs, where=""):
        avail = [k for k in sorted(probs) if probs[k] >= IMPOSSIBLE_P]
        pos = len(self.taken)
        if pos < len(self.prefix):
            out = self.prefix[pos]
            if out not in avail:
                raise ContractError(f"{where}: explored outcome vanished")
        else:
            out = avail[0]
        self.options.append(avail)
        self.taken.append(out)
        return out


def enumerate_branches(run: Callable[[ms.OutcomeSource], object]) -> list:
    """Depth-first enumeration of every outcome sequence with nonzero weight."""
    results = []
    stack: list[list[int]] = [[]]
    while stack:
        prefix = stack.pop()
        src = _Explorer(prefix)
        results.append(run(src))
        for i in range(len(src.options) - 1, len(prefix) - 1, -1):
            for alt in reversed(src.options[i][1:]):
                stack.append(src.taken[:i] + [alt])
    return results


@dataclass
class BranchOutput:
    """Output of one branch restricted to the output qubits."""
    kraus: np.ndarray | None          # qubit-level map (2^m x k) or state (2^m,)
    leakage: float
    separable: bool
    residual: float = 0.0


def extract_output(state: np.ndarray, register: Register, outputs: Sequence[int]) -> BranchOutput:
    """Split off the measured qubits and compress the outputs to qubit level."""
    n = register.n_qubits
    d = register.site_dim
    vec = state.ndim == 1
    st = state.reshape(-1, 1) if vec else state
    k = st.shape[1]
    t = st.reshape([d] * n + [k])
    rest = [q for q in range(n) if q not in outputs]
    t = t.transpose(list(rest) + list(outputs) + [n])
    m = t.reshape(d ** len(rest), d ** len(outputs) * k)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    residual = float(s[1] / s[0]) if len(s) > 1 and s[0] > 0 else 0.0
    separable = residual < 1e-9
    out = (s[0] * vh[0]).reshape(d ** len(outputs), k)
    if register.level == FULL:
        V = tensor(*([encoding_basis(register.encoding)] * len(outputs)))
        full = m.reshape(d ** len(rest), d ** len(outputs), k)
        w_all = np.sum(np.abs(full) ** 2, axis=(0, 1))
        w_in = np.sum(np.abs(np.einsum("ji,rjk->rik", V.conj(), full)) ** 2, axis=(0, 1))
        live = w_all > 1e-300
        leak = float(np.max(1 - w_in[live] / w_all[live])) if live.any() else 0.0
        out = V.conj().T @ out
    else:
        leak = 0.0
    if vec:
        out = out[:, 0]
        nrm = np.linalg.norm(out)
        out = out / nrm if nrm > 0 else out
    return BranchOutput(out, max(leak, 0.0), separable, residual)
