import math
import warnings

import numpy as np
import pytest

from stqc import qcore as qc
from stqc import spinmodels as sm


def dressed_energies(mu12, mu34, mub, j):
    """Exact 4-dot energies of the states adiabatically connected to the qubit basis."""
    fields = sm.gradient_dot_fields([mu12, mu34], [mub])
    Hf = sm.full_spin_hamiltonian(sm.FullSpinModel(4, tuple(fields), {(1, 2): j}))
    w, v = np.linalg.eigh(Hf)
    V = sm.qubit_subspace_embedding(sm.GRADIENT, 2)
    overlap = np.abs(V.conj().T @ v) ** 2
    return w[np.argmax(overlap, axis=1)]


@pytest.mark.parametrize("mu12,mu34,mub,j", [(1.0, 1.0, 2.0, 0.1), (1.0, 1.3, 2.5, 0.05),
                                             (0.8, 1.1, 2.2, 0.2)])
def test_btilde_reproduces_exact_dressing(mu12, mu34, mub, j):
    p = sm.GradientModelParams(mu12, mu34, mub, j)
    eff = np.diag(sm.effective_gradient_hamiltonian(p, zz_sign=-1)).real
    assert np.max(np.abs(eff - dressed_energies(mu12, mu34, mub, j))) < 1e-12


def test_positive_zz_sign_misses_exact_dressing():
    p = sm.GradientModelParams(1.0, 1.0, 2.0, 0.1)
    eff = np.diag(sm.effective_gradient_hamiltonian(p, zz_sign=1)).real
    assert np.max(np.abs(eff - dressed_energies(1.0, 1.0, 2.0, 0.1))) > 0.01


def test_btilde_zero_exchange():
    assert sm.btilde(sm.GradientModelParams(1.0, 1.0, 2.0, 0.0)) == 0.0


@pytest.mark.parametrize("n1,n2", [(1, 1), (2, 3), (5, 9), (10, 19), (3, 5)])
def test_cz_schedule_gives_cz_after_z_phases(n1, n2):
    mu = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sch = sm.cz_schedule(n1, n2, mu)
    U = qc.evolve(sm.gradient_window_hamiltonian([mu, mu], [(0, 1, sch.j23)]), sch.tau)
    d = np.diag(U)
    a0, a1 = d[2] / d[0], d[1] / d[0]
    stripped = U / d[0] @ np.diag([1, 1 / a1, 1 / a0, 1 / (a0 * a1)])
    assert np.max(np.abs(stripped - qc.CZ)) < 1e-10


def test_cz_schedule_errors_and_warning():
    with pytest.raises(sm.ScheduleError):
        sm.cz_schedule(0, 1, 1.0)
    with pytest.raises(sm.ScheduleError):
        sm.cz_schedule(1, 2, 1.0)
    with pytest.warns(UserWarning):
        sm.cz_schedule(1, 1, 1.0)


def test_teleport_schedule():
    mu = math.pi / (4 * 20e-9)
    tau, j = sm.teleport_schedule(math.pi / 2, 0, mu)
    assert abs(tau - 20e-9) < 1e-18
    assert abs(j * tau - math.pi) < 1e-12
    with pytest.raises(sm.ScheduleError):
        sm.teleport_schedule(0.0, 0, mu)
    tau_w, j_w = sm.teleport_schedule(math.pi / 2, 0, mu, winding=3)
    assert j_w < j


def test_exchange_only_block_matches_heisenberg_compression():
    j = 0.37
    V = sm.qubit_subspace_embedding(sm.EXCHANGE, 2)
    Hc = V.conj().T @ (j * sm.pair_exchange(4, 1, 2)) @ V
    eq = sm.exchange_only_hamiltonian(sm.ExchangeOnlyParams(0.0, 0.0, j))
    assert np.max(np.abs(Hc - (eq - j / 4 * np.eye(4)))) < 1e-12


def test_intra_exchange_phase_sign():
    j, t = 1.3, 0.8
    V = sm.encoding_basis(sm.EXCHANGE)
    U = V.conj().T @ qc.evolve(j * sm.pair_exchange(2, 0, 1), t) @ V
    # singlet picks up e^{iJt}: P(-Jt) up to a global phase
    assert np.allclose(U / U[0, 0], qc.P(-j * t))
    phi = math.pi / 2
    assert abs(sm.exchange_angle_for_phase(phi) - 3 * math.pi / 2) < 1e-15
    assert abs(sm.exchange_angle_for_phase(phi, "literal") - phi) < 1e-15
    with pytest.raises(qc.ContractError):
        sm.exchange_angle_for_phase(phi, "other")


def test_phase_gate():
    assert np.allclose(sm.phase_gate(2.0, 0.5), qc.P(1.0))
    with pytest.raises(qc.ContractError):
        sm.phase_gate(-1.0, 1.0)


def test_full_model_validation_and_symmetry():
    with pytest.raises(qc.ContractError):
        sm.FullSpinModel(2, (0.0,), {})
    with pytest.raises(qc.ContractError):
        sm.FullSpinModel(2, (0.0, 0.0), {(0, 1): -1.0})
    with pytest.raises(qc.ContractError):
        sm.FullSpinModel(2, (0.0, 0.0), {(0, 1): 1.0, (1, 0): 1.0})
    m = sm.FullSpinModel(4, (0.3, -0.1, 0.2, 0.5), {(0, 1): 0.4, (1, 2): 0.2, (2, 3): 0.7})
    Hm = sm.full_spin_hamiltonian(m)
    assert qc.is_hermitian(Hm)
    Sz = sum(qc.embed(qc.Z, [i], range(4)) for i in range(4))
    assert np.max(np.abs(Hm @ Sz - Sz @ Hm)) < 1e-12


def test_singlet_energy():
    Hm = sm.pair_exchange(2, 0, 1)
    assert abs(np.vdot(sm.SINGLET, Hm @ sm.SINGLET) + 1) < 1e-15
    assert abs(np.vdot(sm.T0, Hm @ sm.T0)) < 1e-15


def test_units_and_regime_flag():
    assert sm.to_rad_per_s(1.0, "hz") == 2 * math.pi
    assert sm.to_rad_per_s(1.0, "rad_per_s") == 1.0
    with pytest.raises(qc.ContractError):
        sm.to_rad_per_s(1.0, "MHz")
    assert sm.GradientModelParams.symmetric(1.0, 0.05).leakage_suppressed
    assert not sm.GradientModelParams.symmetric(1.0, 0.5).leakage_suppressed


def test_dot_fields_gradients():
    f = sm.gradient_dot_fields([1.0, 1.5])
    assert abs((f[0] - f[1]) - 2.0) < 1e-15
    assert abs((f[2] - f[3]) - 3.0) < 1e-15
    assert abs((f[1] - f[2]) - (2 * 2.5 - 2.5)) < 1e-15
