import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stqc import measure as ms
from stqc import qcore as qc
from stqc import spinmodels as sm


@pytest.mark.parametrize("model", ms.OUTCOME_MODELS)
def test_pair_projectors_complete(model):
    prs = ms.pair_projectors(model)
    assert np.allclose(sum(prs.values()), np.eye(4))
    for Pm in prs.values():
        assert qc.is_projector(Pm)


def test_spec_validation():
    with pytest.raises(qc.ContractError):
        ms.MeasurementSpec((1, 1))
    with pytest.raises(qc.ContractError):
        ms.MeasurementSpec((0, 1), "bogus")
    with pytest.raises(qc.ContractError):
        ms.MeasurementSpec((0, 5)).validate(4)


def test_singlet_gives_singlet():
    rec, v = ms.measure(sm.SINGLET, ms.MeasurementSpec((0, 1)), ms.Sampled(0), 2)
    assert rec.outcome == ms.SINGLET_OUT and abs(rec.probability - 1) < 1e-15


def test_forced_impossible_outcome():
    with pytest.raises(qc.ImpossibleOutcome):
        ms.measure(sm.SINGLET, ms.MeasurementSpec((0, 1)), ms.Forced([ms.TRIPLET]), 2)
    with pytest.raises(qc.ContractError):
        ms.measure(sm.UD, ms.MeasurementSpec((0, 1)), ms.Forced([]), 2)


def test_inner_dot_measurement_is_parity_in_gradient_basis():
    """Compressed to the gradient qubit space, singlet + t0 is the even-parity projector."""
    V = sm.qubit_subspace_embedding(sm.GRADIENT, 2)
    prs = ms.outcome_projectors(ms.MeasurementSpec((1, 2), ms.S_T0), 4)
    M_even = np.diag([1, 0, 0, 1])
    rest = V.conj().T @ prs[ms.REST] @ V
    assert np.allclose(rest, np.eye(4) - M_even)
    st_sum = V.conj().T @ (prs[ms.TRIPLET] + prs[ms.SINGLET_OUT]) @ V
    assert np.allclose(st_sum, M_even)


def test_leakage_population():
    V = sm.encoding_basis(sm.EXCHANGE)
    assert ms.leakage_population(V @ qc.PLUS, sm.EXCHANGE, 0, 1) < 1e-15
    assert abs(ms.leakage_population(sm.UU, sm.EXCHANGE, 0, 1) - 1) < 1e-15


def random_dots(seed, n):
    return qc.random_state(np.random.default_rng(seed), 2 ** n)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), model=st.sampled_from(ms.OUTCOME_MODELS), a=st.integers(0, 2))
def test_probabilities_sum_and_idempotence(seed, model, a):
    psi = random_dots(seed, 4)
    spec = ms.MeasurementSpec((a, a + 1), model)
    prs = ms.outcome_projectors(spec, 4)
    total = sum(np.vdot(psi, Pm @ psi).real for Pm in prs.values())
    assert abs(total - 1) < 1e-12
    rec, post = ms.measure(psi, spec, ms.Sampled(seed), 4)
    rec2, _ = ms.measure(post, spec, ms.Sampled(seed + 1), 4)
    assert rec2.outcome == rec.outcome and rec2.probability > 1 - 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), model=st.sampled_from(ms.OUTCOME_MODELS))
def test_net_spin_sectors_not_created(seed, model):
    r = np.random.default_rng(seed)
    # superpose two sectors only
    psi = np.zeros(16, dtype=complex)
    for k in range(16):
        if bin(k).count("1") in (1, 2):
            psi[k] = r.normal() + 1j * r.normal()
    psi /= np.linalg.norm(psi)
    before = ms.net_spin_sectors(psi, 4)
    _, post = ms.measure(psi, ms.MeasurementSpec((1, 2), model), ms.Sampled(seed), 4)
    assert ms.net_spin_sectors(post, 4) <= before


def test_sampled_matches_forced_probabilities():
    psi = random_dots(7, 4)
    spec = ms.MeasurementSpec((1, 2), ms.S_T0)
    probs = {k: np.vdot(psi, Pm @ psi).real for k, Pm in ms.outcome_projectors(spec, 4).items()}
    src = ms.Sampled(99)
    n = 10_000
    counts = {k: 0 for k in probs}
    for _ in range(n):
        rec, _ = ms.measure(psi, spec, src, 4)
        counts[rec.outcome] += 1
    for k, p in probs.items():
        sigma = np.sqrt(n * p * (1 - p))
        assert abs(counts[k] - n * p) <= 3 * sigma + 1e-9


def test_sampled_determinism():
    psi = random_dots(3, 4)
    spec = ms.MeasurementSpec((0, 1))
    a = [ms.measure(psi, spec, s, 4)[0].outcome for s in [ms.Sampled(5)] * 20]
    b = [ms.measure(psi, spec, s, 4)[0].outcome for s in [ms.Sampled(5)] * 20]
    assert a == b


def test_qubit_measurement_helpers():
    state = qc.tensor(sm.SINGLET, sm.UD)
    rec, _ = ms.qubit_measurement(state, 0, ms.Sampled(0), 2)
    assert rec.outcome == ms.SINGLET_OUT
    rec, _ = ms.entangling_measurement(state, (0, 1), ms.Sampled(0), 2, ms.S_T0)
    assert rec.spec.dot_pair == (1, 2)
    with pytest.raises(qc.ContractError):
        ms.inner_dots(0, 2)
