"""Core state/filter/integrator behaviour."""

import math

import mpmath
import numpy as np
import pytest
from scipy.linalg import expm

from gpmsim import (DensityMatrix, DiagonalFilter, PureState, TruncationError,
                    ZeroProbabilityError, apply_filter, coherent_state,
                    fidelity_with_basis_state, fock_cutoff, integrate_ode)
from gpmsim.open_system import compose_with_ancilla

mpmath.mp.dps = 50


def poisson_peak(n_t):
    """High-precision e^-n n^n / n! oracle, independent of scipy."""
    return float(mpmath.e ** (-n_t) * mpmath.mpf(n_t) ** n_t / mpmath.factorial(n_t))


# ---------------------------------------------------------- coherent states

def test_vacuum_state():
    st = coherent_state(0.0, 10)
    assert st.amplitudes[0] == 1.0
    assert np.all(st.amplitudes[1:] == 0.0)


def test_coherent_population_at_target_matches_oracle():
    st = coherent_state(10.0, fock_cutoff(100))
    pop = fidelity_with_basis_state(st, 100)
    assert abs(pop - poisson_peak(100)) < 1e-12
    # the quoted steady-state success probability for this target
    assert abs(pop - 0.04) < 2e-3


def test_coherent_large_target_log_space():
    st = coherent_state(math.sqrt(200), fock_cutoff(200))
    pop = fidelity_with_basis_state(st, 200)
    assert abs(pop - poisson_peak(200)) < 1e-12
    assert abs(pop - 0.0282) < 1e-4


def test_coherent_truncation_error():
    with pytest.raises(TruncationError):
        coherent_state(math.sqrt(50), 80)


def test_coherent_normalized_and_phases():
    st = coherent_state(2.0 * complex(math.cos(0.7), math.sin(0.7)), 40)
    assert abs(st.norm() - 1.0) < 1e-12
    # relative phase between adjacent levels is arg(alpha)
    ratio = st.amplitudes[5] / st.amplitudes[4]
    assert abs(np.angle(ratio) - 0.7) < 1e-12


def test_coherent_gaussian_envelope():
    # population profile approaches the Gaussian envelope for large targets
    for n_t in (100, 400):
        st = coherent_state(math.sqrt(n_t), fock_cutoff(n_t))
        n = np.arange(st.dim)
        gauss = np.exp(-((n - n_t) ** 2) / (2.0 * n_t)) / math.sqrt(2 * math.pi * n_t)
        dev = np.abs(np.abs(st.amplitudes) ** 2 - gauss).max()
        assert dev < 0.1 / math.sqrt(2 * math.pi * n_t)


def test_normalize_random_states():
    rng = np.random.default_rng(0)
    for _ in range(25):
        dim = rng.integers(1, 40)
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        st = PureState(v).normalize()
        assert abs(st.norm() - 1.0) < 1e-12


# ----------------------------------------------------------------- fidelity

def test_fidelity_basis_state():
    amp = np.zeros(8, dtype=complex)
    amp[5] = 1.0
    assert fidelity_with_basis_state(PureState(amp), 5) == 1.0


def test_fidelity_equal_superposition():
    st = PureState(np.array([1.0, 1.0]) / math.sqrt(2))
    assert abs(fidelity_with_basis_state(st, 0) - 0.5) < 1e-15


def test_fidelity_index_out_of_range():
    st = PureState(np.ones(4) / 2.0)
    with pytest.raises(IndexError):
        fidelity_with_basis_state(st, 4)
    with pytest.raises(IndexError):
        fidelity_with_basis_state(st, -1)


def test_fidelity_with_offset_basis():
    st = PureState(np.array([0.0, 1.0, 0.0], dtype=complex), basis_offset=-1)
    assert fidelity_with_basis_state(st, 0) == 1.0


def test_fidelity_density_matrix_traces_ancilla():
    mode = PureState(np.array([0.6, 0.8], dtype=complex))
    rho = compose_with_ancilla(mode, "e")
    assert abs(fidelity_with_basis_state(rho, 1) - 0.64) < 1e-14
    with pytest.raises(IndexError):
        fidelity_with_basis_state(rho, 2)


# -------------------------------------------------------------- apply_filter

def test_identity_filter():
    st = coherent_state(1.5, 20)
    out, prob = apply_filter(st, DiagonalFilter(np.ones(21, dtype=complex)))
    assert abs(prob - 1.0) < 1e-12
    assert np.allclose(out.amplitudes, st.amplitudes)


def test_impossible_outcome_raises():
    vac = coherent_state(0.0, 5)
    coeff = np.ones(6, dtype=complex)
    coeff[0] = 0.0
    with pytest.raises(ZeroProbabilityError):
        apply_filter(vac, DiagonalFilter(coeff))


def test_first_round_filter_halves_coherent_state():
    # round-one resonant filter on |alpha|^2 = 100: direct-summation oracle
    n_t = 100
    st = coherent_state(10.0, fock_cutoff(n_t))
    n = np.arange(st.dim)
    coeff = np.cos((n_t + 1) * np.pi * np.sqrt((n + 1) / (n_t + 1)))
    expected = float(np.sum(np.abs(st.amplitudes) ** 2 * coeff ** 2))
    _, prob = apply_filter(st, DiagonalFilter(coeff.astype(complex)))
    assert abs(prob - expected) < 1e-12
    assert abs(prob - 0.5) < 0.01


def test_filter_contraction():
    rng = np.random.default_rng(1)
    for _ in range(25):
        dim = rng.integers(2, 30)
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        st = PureState(v).normalize()
        coeff = rng.uniform(0, 1, size=dim) * np.exp(2j * np.pi * rng.uniform(size=dim))
        try:
            _, prob = apply_filter(st, DiagonalFilter(coeff))
        except ZeroProbabilityError:
            continue
        assert prob <= 1.0 + 1e-12


def test_filter_dim_mismatch():
    st = coherent_state(1.0, 30)
    with pytest.raises(ValueError):
        apply_filter(st, DiagonalFilter(np.ones(5, dtype=complex)))


def test_filter_magnitude_invariant():
    with pytest.raises(ValueError):
        DiagonalFilter(np.array([1.0, 1.5], dtype=complex))


# ------------------------------------------------------------ density matrix

def test_density_matrix_shape_check():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(5, dtype=complex), mode_dim=2)


def test_density_matrix_helpers():
    mode = PureState(np.array([1.0, 0.0], dtype=complex))
    rho = compose_with_ancilla(mode, "g")
    assert abs(rho.trace() - 1.0) < 1e-15
    assert rho.hermiticity_defect() == 0.0
    assert abs(rho.mode_matrix()[0, 0] - 1.0) < 1e-15


# ---------------------------------------------------------------- integrator

def _decay_setup(mode_dim, kappa):
    a = np.kron(np.eye(2), np.diag(np.sqrt(np.arange(1.0, mode_dim)), 1))
    ada = a.conj().T @ a

    def rhs(t, rho):
        return kappa * (a @ rho @ a.conj().T - 0.5 * (ada @ rho + rho @ ada))

    return rhs


def test_zero_rhs_identity():
    ent = np.diag([0.3, 0.7, 0.0, 0.0]).astype(complex)
    rho = DensityMatrix(ent, mode_dim=2)
    out = integrate_ode(lambda t, r: np.zeros_like(r), rho, 1.0, tol=1e-8)
    assert np.abs(out.entries - ent).max() < 1e-12


def test_single_mode_decay():
    kappa = 1.7
    rhs = _decay_setup(3, kappa)
    ent = np.zeros((6, 6), dtype=complex)
    ent[1, 1] = 1.0  # ancilla g, one excitation
    out = integrate_ode(rhs, DensityMatrix(ent, mode_dim=3), 0.9, tol=1e-10)
    assert abs(out.entries[1, 1].real - math.exp(-kappa * 0.9)) < 1e-9


def test_matches_matrix_exponential_oracle():
    # full master equation with all rates zero reduces to unitary evolution
    from gpmsim import CouplingParams, NoiseParams
    from gpmsim.open_system import make_lindblad_rhs

    d = 30
    a = np.diag(np.sqrt(np.arange(1.0, d)), 1)
    sp = np.zeros((2, 2))
    sp[1, 0] = 1.0
    h = np.kron(sp, a) + np.kron(sp.T, a.T)
    rhs = make_lindblad_rhs(d, CouplingParams(g=1.0), NoiseParams(), "resonant")
    mode = coherent_state(3.0, d - 1, tail_tol=1e-6)
    rho0 = compose_with_ancilla(mode, "e")
    tau = math.pi / math.sqrt(10)
    out = integrate_ode(rhs, rho0, tau, tol=1e-8)
    u = expm(-1j * h * tau)
    ref = u @ rho0.entries @ u.conj().T
    assert np.abs(out.entries - ref).max() < 1e-6
    assert out.hermiticity_defect() < 1e-10
    assert abs(out.trace().real - 1.0) < 1e-8


def test_tolerance_halving_monotone():
    # fixed decaying JC instance; tighter tolerance must not increase error
    d = 4
    kappa = 0.7
    a = np.diag(np.sqrt(np.arange(1.0, d)), 1)
    big_a = np.kron(np.eye(2), a)
    ada = big_a.conj().T @ big_a
    sp = np.zeros((2, 2))
    sp[1, 0] = 1.0
    h = np.kron(sp, a) + np.kron(sp.T, a.T)

    def rhs(t, rho):
        return (-1j * (h @ rho - rho @ h)
                + kappa * (big_a @ rho @ big_a.conj().T
                           - 0.5 * (ada @ rho + rho @ ada)))

    eye = np.eye(2 * d)
    # row-major vectorization: vec(A X B) = kron(A, B^T) vec(X)
    superop = (-1j * (np.kron(h, eye) - np.kron(eye, h.T))
               + kappa * (np.kron(big_a, big_a.conj())
                          - 0.5 * (np.kron(ada, eye) + np.kron(eye, ada.T))))
    rng = np.random.default_rng(3)
    v = rng.normal(size=2 * d) + 1j * rng.normal(size=2 * d)
    v /= np.linalg.norm(v)
    rho0 = DensityMatrix(np.outer(v, v.conj()), mode_dim=d)
    duration = 3.0
    ref = (expm(superop * duration) @ rho0.entries.ravel()).reshape(2 * d, 2 * d)
    errs = []
    tol = 1e-3
    for _ in range(7):
        out = integrate_ode(rhs, rho0, duration, tol=tol)
        errs.append(np.abs(out.entries - ref).max())
        tol /= 2
    assert all(errs[i + 1] <= errs[i] for i in range(len(errs) - 1)), errs


def test_integrator_argument_validation():
    rho = DensityMatrix(np.eye(4, dtype=complex) / 4.0, mode_dim=2)
    with pytest.raises(ValueError):
        integrate_ode(lambda t, r: r, rho, -1.0)
    with pytest.raises(ValueError):
        integrate_ode(lambda t, r: r, rho, 1.0, tol=0.0)
