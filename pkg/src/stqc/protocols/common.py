"""Result container shared by the protocol builders."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..qcore import ContractError
from .schedule import BranchOutput, CorrectionLedger, Register, Step, extract_output


@dataclass
class ProtocolResult:
    name: str
    register: Register
    steps: list[Step]
    records: list
    ledger: CorrectionLedger
    state: np.ndarray
    outputs: list[int]
    target: np.ndarray | None = None
    info: dict = field(default_factory=dict)
    initial: np.ndarray | None = field(default=None, repr=False)

    @property
    def outcomes(self) -> list[int]:
        return [r.outcome for r in self.records]

    @property
    def flagged(self) -> bool:
        return any(r.flagged for r in self.records)

    @property
    def probability(self) -> float:
        return float(np.prod([r.probability for r in self.records]))

    def output(self) -> BranchOutput:
        return extract_output(self.state, self.register, self.outputs)

    def corrected(self) -> np.ndarray:
        """Output with the ledger frames removed (state or map)."""
        out = self.output()
        if not out.separable:
            raise ContractError("output is entangled with the measured qubits")
        L = self.ledger.operator(self.outputs)
        return np.linalg.solve(L, out.kraus)

    def summary(self) -> dict:
        return {
            "protocol": self.name,
            "outcomes": self.outcomes,
            "flagged": self.flagged,
            "probability": self.probability,
            "ledger": self.ledger.to_dict(),
            "outputs": list(self.outputs),
            **{k: v for k, v in self.info.items() if isinstance(v, (int, float, str, bool, list))},
        }


def wrap_positive(a: float) -> float:
    """Reduce an angle into (0, 2pi]; a zero rotation is realized as a full turn."""
    a = math.fmod(a, 2 * math.pi)
    if a <= 1e-15:
        a += 2 * math.pi
    return a


def finish(r, name: str, outputs, target=None, info=None) -> ProtocolResult:
    return ProtocolResult(name, r.reg, r.steps, r.records, r.ledger, r.state, list(outputs), target,
                          info or {}, r.initial)
