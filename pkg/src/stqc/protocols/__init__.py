"""Executable measurement-and-exchange protocols with Pauli-frame tracking."""
from .cluster import GraphSpec, build_cluster_state
from .common import ProtocolResult
from .exchange import hadamard_closed_form, hadamard_sequence, quantum_bus, two_qubit_sequence
from .gradient import (DEFAULT_MU_DELTA, prepare_state, prepared_state, recycled_sequence, square_gate,
                       stabilizer_roundtrip, syndrome_table, teleport_rotation)
from .schedule import (CorrectionLedger, Frame, Register, Runner, Step, enumerate_branches,
                       extract_output, run_schedule, total_duration)

PROTOCOLS = {
    "p1_single": teleport_rotation,
    "p1_two": square_gate,
    "p1_prepare": prepare_state,
    "p1_recycle": recycled_sequence,
    "p1_stabilizer": stabilizer_roundtrip,
    "p2_bus": quantum_bus,
    "p2_single": hadamard_sequence,
    "p2_two": two_qubit_sequence,
}
