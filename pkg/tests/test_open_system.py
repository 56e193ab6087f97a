"""Master-equation right-hand side, ancilla measurement, noisy runs."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from gpmsim import (CouplingParams, DensityMatrix, NoiseParams, PureState,
                    ZeroProbabilityError, build_dispersive_schedule,
                    build_fock_schedule, coherent_state, fock_cutoff,
                    hadamard_ancilla, lindblad_rhs, project_ancilla,
                    reset_ancilla_ground, run_dispersive_protocol,
                    run_ideal_protocol, run_noisy_protocol)
from gpmsim.open_system import compose_with_ancilla, make_lindblad_rhs


def dense_reference_rhs(kind, d, params, noise):
    """Independent oracle: composite operators built with kron."""
    a = np.diag(np.sqrt(np.arange(1.0, d)), 1)
    i2, im = np.eye(2), np.eye(d)
    sm = np.zeros((2, 2))
    sm[0, 1] = 1.0  # |g><e| in the (g, e) ordering
    pe = np.diag([0.0, 1.0])
    big_a = np.kron(i2, a)
    big_s = np.kron(sm, im)
    big_p = np.kron(pe, im)
    if kind == "resonant":
        h = (params.delta * big_p
             + params.g * (big_s.T @ big_a + big_a.conj().T @ big_s))
    else:
        h = params.delta * big_p - params.chi * np.kron(pe, a.conj().T @ a)

    def lind(op, rho, rate):
        od = op.conj().T
        return rate * (op @ rho @ od - 0.5 * (od @ op @ rho + rho @ od @ op))

    def rhs(rho):
        return (-1j * (h @ rho - rho @ h)
                + lind(big_a, rho, noise.kappa)
                + lind(big_s, rho, noise.gamma)
                + lind(big_p, rho, noise.gamma_phi))

    return rhs


def random_density(rng, dim, rank=3):
    vecs = rng.normal(size=(rank, dim)) + 1j * rng.normal(size=(rank, dim))
    w = rng.uniform(0.2, 1.0, size=rank)
    w /= w.sum()
    ent = sum(wi * np.outer(v, v.conj()) / np.vdot(v, v).real
              for wi, v in zip(w, vecs))
    return ent


def test_noise_params_validation():
    with pytest.raises(ValueError):
        NoiseParams(kappa=-1.0)


def test_rhs_matches_dense_oracle():
    rng = np.random.default_rng(5)
    for kind in ("resonant", "dispersive"):
        for _ in range(10):
            d = int(rng.integers(3, 7))
            params = CouplingParams(g=rng.uniform(0.5, 2), chi=rng.uniform(0.5, 2),
                                    delta=rng.uniform(0, 2))
            noise = NoiseParams(kappa=rng.uniform(0, 1), gamma=rng.uniform(0, 1),
                                gamma_phi=rng.uniform(0, 1))
            rho = DensityMatrix(random_density(rng, 2 * d), mode_dim=d)
            fast = lindblad_rhs(rho, params, noise, kind)
            slow = dense_reference_rhs(kind, d, params, noise)(rho.entries)
            assert np.abs(fast - slow).max() < 1e-12


def test_rhs_trace_and_hermiticity_random():
    # 100 randomized instances: generator is trace-free and Hermiticity-preserving
    rng = np.random.default_rng(6)
    for trial in range(100):
        kind = "resonant" if trial % 2 else "dispersive"
        d = int(rng.integers(3, 7))
        params = CouplingParams(g=rng.uniform(0.5, 2), chi=rng.uniform(0.5, 2),
                                delta=rng.uniform(0, 2))
        noise = NoiseParams(kappa=rng.uniform(0, 1), gamma=rng.uniform(0, 1),
                            gamma_phi=rng.uniform(0, 1))
        x = rng.normal(size=(2 * d, 2 * d)) + 1j * rng.normal(size=(2 * d, 2 * d))
        rho = DensityMatrix(x + x.conj().T, mode_dim=d)
        drho = lindblad_rhs(rho, params, noise, kind)
        assert abs(np.trace(drho)) < 1e-12 * max(1.0, np.abs(drho).max())
        assert np.abs(drho - drho.conj().T).max() < 1e-12 * max(1.0, np.abs(drho).max())


def test_rhs_zero_on_eigenprojector():
    # rates off: any eigenprojector of the Hamiltonian is stationary
    d = 5
    params = CouplingParams(g=1.3)
    a = np.diag(np.sqrt(np.arange(1.0, d)), 1)
    sp = np.zeros((2, 2))
    sp[1, 0] = 1.0
    h = params.g * (np.kron(sp, a) + np.kron(sp.T, a.T))
    _, vecs = np.linalg.eigh(h)
    proj = np.outer(vecs[:, 3], vecs[:, 3].conj())
    drho = lindblad_rhs(DensityMatrix(proj, mode_dim=d), params, NoiseParams(),
                        "resonant")
    assert np.abs(drho).max() < 1e-12


def test_rhs_cavity_decay_rate():
    # population of (g, n=1) decays at exactly kappa
    d = 4
    ent = np.zeros((2 * d, 2 * d), dtype=complex)
    ent[1, 1] = 1.0
    rho = DensityMatrix(ent, mode_dim=d)
    drho = lindblad_rhs(rho, CouplingParams(g=2.0), NoiseParams(kappa=0.7),
                        "resonant")
    assert abs(drho[1, 1].real + 0.7) < 1e-12


def test_rhs_rejects_bad_hamiltonian():
    rho = DensityMatrix(np.eye(4, dtype=complex) / 4, mode_dim=2)
    with pytest.raises(ValueError):
        lindblad_rhs(rho, CouplingParams(), NoiseParams(), "resonant")
    with pytest.raises(ValueError):
        lindblad_rhs(rho, CouplingParams(g=1.0), NoiseParams(), "other")


# ---------------------------------------------------------------- projection

def test_project_keeps_measured_branch():
    mode = PureState(np.array([0.8, 0.6], dtype=complex))
    rho = compose_with_ancilla(mode, "e")
    out, prob = project_ancilla(rho, "e")
    assert abs(prob - 1.0) < 1e-12
    assert np.abs(out.entries - rho.entries).max() < 1e-12


def test_project_impossible_outcome():
    rho = compose_with_ancilla(PureState(np.array([1.0, 0.0], dtype=complex)), "g")
    with pytest.raises(ZeroProbabilityError):
        project_ancilla(rho, "e")


def test_project_mixed_ancilla_half():
    d = 3
    mode = np.diag([0.5, 0.3, 0.2]).astype(complex)
    ent = np.zeros((2 * d, 2 * d), dtype=complex)
    ent[:d, :d] = 0.5 * mode
    ent[d:, d:] = 0.5 * mode
    out, prob = project_ancilla(DensityMatrix(ent, mode_dim=d), "e")
    assert abs(prob - 0.5) < 1e-12
    assert abs(out.trace().real - 1.0) < 1e-12


def test_hadamard_and_reset():
    mode = PureState(np.array([1.0, 0.0], dtype=complex))
    rho = compose_with_ancilla(mode, "g")
    had = hadamard_ancilla(rho)
    d = rho.mode_dim
    # ancilla now (|g>+|e>)/sqrt(2): all four blocks carry weight 1/2
    for blk in (had.entries[:d, :d], had.entries[d:, d:],
                had.entries[:d, d:], had.entries[d:, :d]):
        assert abs(blk[0, 0] - 0.5) < 1e-12
    assert np.abs(hadamard_ancilla(had).entries - rho.entries).max() < 1e-12
    back = reset_ancilla_ground(had)
    assert abs(back.entries[0, 0] - 1.0) < 1e-12


# ---------------------------------------------------------------- noisy runs

def test_noiseless_resonant_matches_ideal():
    n_t = 16
    state = coherent_state(4.0, fock_cutoff(n_t, width=6.0), tail_tol=1e-6)
    sched = build_fock_schedule(n_t, 4, 1e8)
    ideal = run_ideal_protocol(state, sched)
    noisy = run_noisy_protocol(state, sched, NoiseParams(), tol=1e-8)
    fid_diff = np.abs(np.array(ideal.fidelity_per_round)
                      - np.array(noisy.fidelity_per_round)).max()
    prob_diff = np.abs(np.array(ideal.success_prob_per_round)
                       - np.array(noisy.success_prob_per_round)).max()
    assert fid_diff < 1e-5
    assert prob_diff < 1e-5


def test_noiseless_dispersive_matches_ideal():
    n_t = 16
    state = coherent_state(4.0, fock_cutoff(n_t, width=6.0), tail_tol=1e-6)
    sched = build_dispersive_schedule(n_t, 4, 2e6)
    ideal = run_dispersive_protocol(state, sched)
    noisy = run_noisy_protocol(state, sched, NoiseParams(), tol=1e-8)
    fid_diff = np.abs(np.array(ideal.fidelity_per_round)
                      - np.array(noisy.fidelity_per_round)).max()
    assert fid_diff < 1e-5


def test_noisy_run_preserves_state_quality():
    # trace/Hermiticity hold through propagation and measurement
    n_t = 9
    state = coherent_state(3.0, fock_cutoff(n_t, width=6.0), tail_tol=1e-6)
    sched = build_fock_schedule(n_t, 3, 1e8)
    noise = NoiseParams(kappa=1e4, gamma=1e5, gamma_phi=1e5)
    record = run_noisy_protocol(state, sched, noise, tol=1e-7)
    rho = record.final_state
    assert abs(rho.trace().real - 1.0) < 1e-8
    assert rho.hermiticity_defect() < 1e-10
    assert np.linalg.eigvalsh(rho.entries).min() > -1e-8
    # noise can only hurt
    ideal = run_ideal_protocol(state, sched)
    for fn, fi in zip(record.fidelity_per_round, ideal.fidelity_per_round):
        assert fn <= fi + 1e-9


def test_noisy_truncation_guard():
    amp = np.zeros(10, dtype=complex)
    amp[-1] = 1.0
    sched = build_fock_schedule(5, 2, 1e8)
    from gpmsim import TruncationError
    with pytest.raises(TruncationError):
        run_noisy_protocol(PureState(amp), sched, NoiseParams())


def test_unknown_schedule_type():
    state = coherent_state(2.0, 30)
    with pytest.raises(TypeError):
        run_noisy_protocol(state, object(), NoiseParams())
