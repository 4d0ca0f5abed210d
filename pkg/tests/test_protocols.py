import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dev_up_to_phase
from stqc import measure as ms
from stqc import qcore as qc
from stqc import verify as vf
from stqc.protocols import (CorrectionLedger, GraphSpec, Step, build_cluster_state, enumerate_branches,
                            run_schedule)
from stqc.protocols import exchange as px
from stqc.protocols import gradient as pg
from stqc.protocols.cluster import apply_paulis
from stqc.spinmodels import ScheduleError


# -- cluster states ---------------------------------------------------------

def test_single_vertex_cluster():
    assert np.allclose(build_cluster_state(GraphSpec([0], [])), qc.PLUS)


def test_two_vertex_cluster():
    expect = (qc.tensor(qc.ZERO, qc.PLUS) + qc.tensor(qc.ONE, qc.MINUS)) / math.sqrt(2)
    assert np.allclose(build_cluster_state(GraphSpec([0, 1], [(0, 1)])), expect)


@pytest.mark.parametrize("g", [GraphSpec(list(range(5)), [(i, i + 1) for i in range(4)]),
                               GraphSpec(list(range(4)), [(0, 1), (1, 2), (2, 3), (3, 0)])])
def test_cluster_stabilizers(g):
    psi = build_cluster_state(g)
    for v in g.vertices:
        assert np.allclose(apply_paulis(psi, g.stabilizer(v), len(g.vertices)), psi)


def test_cluster_errors():
    with pytest.raises(qc.ContractError):
        GraphSpec([0, 1], [(0, 1), (1, 0)])
    with pytest.raises(qc.ContractError):
        GraphSpec([0], [(0, 0)])
    with pytest.raises(qc.ContractError):
        build_cluster_state(GraphSpec(list(range(6)), []))


# -- teleport and preparation --------------------------------------------------

@pytest.mark.parametrize("theta", [0.4, math.pi / 2, 2.5])
def test_teleport_zero_input_triplet_branch(theta):
    res = pg.teleport_rotation(qc.ZERO, theta, ms.Forced([ms.TRIPLET]))
    expect = (qc.ZERO + np.exp(1j * theta) * qc.ONE) / math.sqrt(2)
    assert dev_up_to_phase(res.output().kraus, expect) < 1e-12


def test_teleport_ledger_and_zero_angle():
    res = pg.teleport_rotation(qc.ZERO, 1.0, ms.Forced([ms.SINGLET_OUT]))
    f = res.ledger.frame(1)
    assert (f.x, f.z) == (1, 0) and abs(f.beta - (2 * math.pi - 1.0)) < 1e-12
    with pytest.raises(ScheduleError):
        pg.teleport_rotation(qc.ZERO, 0.0, ms.Sampled(0))


def test_teleport_duration_benchmark():
    res = pg.teleport_rotation(qc.ZERO, math.pi / 2, ms.Sampled(0))
    assert abs(vf.gate_time(res.steps).total - 20e-9) < 1e-18
    res = pg.teleport_rotation(qc.ZERO, math.pi, ms.Sampled(0))
    assert abs(vf.gate_time(res.steps).total - math.pi / (2 * pg.DEFAULT_MU_DELTA)) < 1e-18


def test_prepare_zero_angle():
    for s, expect in ((ms.TRIPLET, qc.ZERO), (ms.SINGLET_OUT, qc.ONE)):
        res = pg.prepare_state(0.0, 0.0, ms.Forced([s]))
        assert dev_up_to_phase(res.output().kraus, expect) < 1e-12


def test_full_level_teleport_leakage_within_scan_prediction():
    rows, slope = vf.leakage_scan([0.2, 0.1, 0.05, 0.025])
    x, y = np.log([r for r, _ in rows]), np.log([v for _, v in rows])
    b, a = np.polyfit(x, y, 1)
    theta, m = math.pi / 2, 19
    ratio = 2 * math.pi / (theta + 2 * math.pi * m)
    maps = vf.branch_maps(lambda psi, s: pg.teleport_rotation(psi, theta, s, winding=m, level="full"), 2)
    worst = max(bm.leakage for bm in maps)
    assert 0 < worst < 10 * math.exp(a) * ratio ** b


# -- recycling ---------------------------------------------------------------

def test_recycle_single_angle_is_teleport():
    for s in (0, 1):
        a = pg.recycled_sequence(np.eye(2), [0.9], ms.Forced([s]))
        b = pg.teleport_rotation(np.eye(2), 0.9, ms.Forced([s]))
        assert np.allclose(a.output().kraus, b.output().kraus)
        assert a.ledger.to_dict()["frames"] == b.ledger.to_dict()["frames"]


def test_recycle_errors():
    with pytest.raises(qc.ContractError):
        pg.recycled_sequence(qc.ZERO, [0.3], ms.Sampled(0), mode="other")


def test_recycle_pauli_parity_pattern():
    rng = np.random.default_rng(3)
    for k in (1, 2, 3, 4):
        for s1 in (0, 1):
            zs = set()
            for i in range(20):
                res = pg.recycled_sequence(qc.ZERO, list(rng.uniform(0.1, 6, k)), ms.Sampled(i), s1=s1)
                zs.add(res.ledger.powers(res.outputs[0])[1])
            assert zs == {s1 * (k % 2)}


# -- stabilizer code -------------------------------------------------------

def test_stabilizer_identity_rotation_all_triplet():
    psi = qc.normalize(np.array([0.3, 0.7 + 0.2j]))
    res = pg.stabilizer_roundtrip(psi, [0.0, 0.0, 0.0], ms.Forced([0] * 10))
    assert dev_up_to_phase(res.corrected(), psi) < 1e-10


def test_stabilizer_z_error_on_first_qubit():
    res = pg.stabilizer_roundtrip(qc.ZERO, [0.3, 0.2, 0.1], ms.Sampled(1), error=("Z", 0))
    assert res.info["syndromes"]["S1"] < -1 + 1e-10


def test_stabilizer_bad_error_index():
    with pytest.raises(qc.ContractError):
        pg.stabilizer_roundtrip(qc.ZERO, [0.3, 0.2, 0.1], ms.Sampled(1), error=("X", 2))
    with pytest.raises(qc.ContractError):
        pg.stabilizer_roundtrip(qc.ZERO, [0.3, 0.2], ms.Sampled(1))


def test_stabilizer_cz_window_leaves_cz_chain():
    """After the local phase cleanup the encoding window is exactly CZ on each edge."""
    import warnings
    from stqc.spinmodels import cz_schedule, gradient_window_hamiltonian
    mu = pg.DEFAULT_MU_DELTA
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sch = cz_schedule(11, 21, mu)
    U = qc.evolve(gradient_window_hamiltonian([mu] * 5, [(q, q + 1, sch.j23) for q in range(4)]), sch.tau)
    g, ph = pg.local_phases(U, 5)
    fix = qc.tensor(*[qc.P(-a) for a in ph])
    target = build_cluster_state(GraphSpec(list(range(5)), [(q, q + 1) for q in range(4)]))
    plus = qc.tensor(*[qc.PLUS] * 5)
    assert dev_up_to_phase(fix @ U @ plus, target) < 1e-10


# -- full-spin protocols ------------------------------------------------------

def test_bus_computational_state():
    for res in enumerate_branches(lambda s: px.quantum_bus(qc.ZERO, s)):
        if not res.flagged:
            assert dev_up_to_phase(res.corrected(), qc.ZERO) < 1e-10


def test_bus_plus_singlet_branch():
    res = px.quantum_bus(qc.PLUS, ms.Forced([ms.SINGLET_OUT, ms.SINGLET_OUT]))
    assert dev_up_to_phase(res.output().kraus, qc.MINUS) < 1e-10


def test_hadamard_examples():
    for psi, expect in ((qc.ZERO, qc.PLUS), (qc.PLUS, qc.ZERO)):
        for res in enumerate_branches(lambda s: px.hadamard_sequence(psi, s)):
            if not res.flagged:
                assert dev_up_to_phase(res.corrected(), expect) < 1e-10


def test_hadamard_leakage_before_ancilla_readout_is_reported():
    from stqc.protocols.schedule import Register, Runner
    reg = Register(2, "exchange_z_basis", "full", ancillae=(1,))
    r = Runner(reg, reg.initial_state({0: qc.ZERO}, {1: qc.PLUS}), ms.Forced([ms.SINGLET_OUT]))
    r.measure((0, 1), outcome_model=ms.S_T0)
    leak = ms.leakage_population(r.state, "exchange_z_basis", 0, 2)
    assert 0 <= leak <= 1


# -- schedules and ledger --------------------------------------------------

def test_empty_schedule():
    from stqc.protocols.schedule import Register
    reg = Register(1)
    state, ledger, records = run_schedule([], reg, qc.PLUS)
    assert np.allclose(state, qc.PLUS) and not ledger.frames and not records


def test_replay_matches_direct_run():
    res = pg.teleport_rotation(qc.random_state(np.random.default_rng(2), 2), 1.1, ms.Sampled(4))
    state, ledger, records = run_schedule(res.steps, res.register, res.initial)
    assert np.allclose(state, res.state)
    assert ledger.to_dict() == res.ledger.to_dict()
    assert [r.outcome for r in records] == res.outcomes


def test_impossible_forced_outcome_names_step():
    res = pg.prepare_state(0.0, 0.0, ms.Forced([0]))
    steps = [Step.from_dict(s.to_dict()) for s in res.steps]
    steps.append(Step("measure", (1,), outcome=ms.SINGLET_OUT))
    steps.append(Step("measure", (1,), outcome=ms.TRIPLET))
    with pytest.raises(qc.ImpossibleOutcome, match=f"step {len(steps) - 1}"):
        run_schedule(steps, res.register, res.initial)


def test_step_validation_and_roundtrip():
    with pytest.raises(qc.ContractError):
        Step("warp")
    with pytest.raises(qc.ContractError):
        Step("exchange", (0, 1), duration=-1.0)
    with pytest.raises(qc.ContractError):
        Step.from_dict({"kind": "zrot", "bogus": 1})
    s = Step("exchange", (0, 1), 1e-9, ((0, 1, 3.0),), label="x")
    assert Step.from_dict(s.to_dict()) == s


frames = st.tuples(st.integers(0, 1), st.integers(0, 1), st.floats(0, 2 * math.pi))


@settings(max_examples=50, deadline=None)
@given(a=frames, b=frames, c=frames)
def test_ledger_composition_is_associative_and_matches_operators(a, b, c):
    def led(f):
        L = CorrectionLedger()
        L.left_multiply(0, *f)
        return L
    A, B, C = led(a), led(b), led(c)
    left = A.compose(B).compose(C).operator([0])
    right = A.compose(B.compose(C)).operator([0])
    prod = A.operator([0]) @ B.operator([0]) @ C.operator([0])
    assert dev_up_to_phase(left, prod) < 1e-9
    assert dev_up_to_phase(right, prod) < 1e-9


@pytest.mark.parametrize("run,dim", [
    (lambda psi, s: pg.teleport_rotation(psi, 0.8, s), 2),
    (lambda psi, s: pg.square_gate(psi, 1, 1, s), 4),
    (lambda psi, s: pg.recycled_sequence(psi, [0.3, 1.0, 2.0], s), 2),
    (lambda psi, s: pg.stabilizer_roundtrip(psi, [0.3, 1.0, 2.0], s), 2),
    (lambda psi, s: px.quantum_bus(psi, s), 2),
    (lambda psi, s: px.hadamard_sequence(psi, s, outcome_model=ms.ALL_TRIPLET), 2),
    (lambda psi, s: px.two_qubit_sequence(psi, s), 4),
])
def test_branch_probabilities_sum_to_one(run, dim):
    psi = qc.random_state(np.random.default_rng(dim), dim)
    total = sum(r.probability for r in enumerate_branches(lambda s: run(psi, s)))
    assert abs(total - 1) < 1e-12


def test_sampled_runs_are_deterministic():
    a = [px.hadamard_sequence(qc.PLUS, ms.Sampled(8)).outcomes for _ in range(3)]
    assert a[0] == a[1] == a[2]
