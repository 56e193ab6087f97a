"""Spin-star protocol for preparing the center Dicke state |J, 0>.

A central ancilla spin exchange-coupled to M identical spins (kept in the
fully symmetric J = M/2 subspace) plays the role the mode played for Fock
states: conditioning on the ancilla outcome applies a diagonal filter in
the collective m basis.  Because the e- and g-branch filters are blind to
the m = -1 and m = +1 neighbours respectively, the schedule is hybrid:
one excited-ancilla round, an instantaneous ancilla flip, then
ground-ancilla rounds with halving multipliers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hilbert import (CouplingParams, DiagonalFilter, PureState, RunRecord,
                      apply_filter)

_BRANCH_SIGN = {"e": +1, "g": -1}


@dataclass(frozen=True)
class DickeEnsemble:
    """Symmetric-subspace state of M spins: amplitudes over m = -J..J."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 3 or amp.size % 2 == 0:
            raise ValueError("amplitudes must cover m = -J..J for even M >= 2")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def M(self) -> int:
        return self.amplitudes.size - 1

    @property
    def J(self) -> int:
        return self.M // 2

    def normalize(self) -> "DickeEnsemble":
        return DickeEnsemble(self.amplitudes / np.linalg.norm(self.amplitudes))

    def as_pure_state(self) -> PureState:
        return PureState(self.amplitudes, basis_offset=-self.J)

    def population(self, m: int) -> float:
        return float(abs(self.amplitudes[m + self.J]) ** 2)


@dataclass(frozen=True)
class DickeSchedule:
    """Hybrid round list: (ancilla branch, multiplier, duration in s)."""

    M: int
    g: float
    rounds: tuple[tuple[str, int, float], ...]
    m_t: int = 0
    rounding: str = "floor"

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def total_time(self) -> float:
        return sum(r[2] for r in self.rounds)


def _branch_weight(m, branch):
    """m(m+1) for the e branch, m(m-1) for the g branch."""
    return m * (m + _BRANCH_SIGN[branch])


def collective_splitting(m: int, branch: str, J: float,
                         params: CouplingParams) -> float:
    """Rabi splitting of the {|i, m>, |i-bar, m+-1>} block."""
    w = J * (J + 1) - _branch_weight(m, branch)
    return math.sqrt(0.25 * params.delta ** 2 + 4.0 * params.g ** 2 * w)


def lambda_coefficient(m: int, branch: str, tau: float, J: int,
                       params: CouplingParams) -> complex:
    """Amplitude for the ancilla to stay in |branch> with the ensemble at m.

    Exact diagonal element of the joint propagator restricted to the
    relevant two-level block.  When the block splitting vanishes (edge
    states such as |e>|J, J> on resonance) the state is dark and the
    amplitude is 1.
    """
    if not -J <= m <= J:
        raise ValueError(f"m={m} outside [-J, J]")
    if branch not in _BRANCH_SIGN:
        raise ValueError("branch must be 'e' or 'g'")
    lam = collective_splitting(m, branch, J, params)
    if lam == 0.0:
        return 1.0 + 0.0j
    # the g block is (|g,m>, |e,m-1>) with ancilla energies -delta/2, +delta/2;
    # the e block mirrors it, flipping the sign of the sine term
    sign = -_BRANCH_SIGN[branch]
    return complex(math.cos(lam * tau),
                   sign * 0.5 * params.delta / lam * math.sin(lam * tau))


def initial_product_state(M: int, phi: float) -> DickeEnsemble:
    """All spins tipped by the same polar angle phi (binomial amplitudes).

    Amplitudes are evaluated in log space so ensembles of thousands of
    spins stay finite.
    """
    if M < 2 or M % 2:
        raise ValueError("M must be even and >= 2")
    J = M // 2
    m = np.arange(-J, J + 1)
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    if s == 0.0 or c == 0.0:
        amp = np.zeros(M + 1, dtype=complex)
        amp[0 if s == 0.0 else M] = 1.0
        return DickeEnsemble(amp)
    k = m + J
    log_amp = (0.5 * (gammaln(M + 1) - gammaln(k + 1) - gammaln(M - k + 1))
               + (J - m) * math.log(abs(c)) + (J + m) * math.log(abs(s)))
    amp = np.exp(log_amp) * np.sign(c) ** (J - m) * np.sign(s) ** (J + m)
    return DickeEnsemble(amp.astype(complex)).normalize()


def optimal_phi(m_t: int, M: int) -> float:
    """Tipping angle maximizing the initial weight on |J, m_t>."""
    if abs(2 * m_t) > M:
        raise ValueError("need |2 m_t| <= M")
    return math.acos(-2.0 * m_t / M)


def dicke_filter(branch: str, xi: int, m_t: int, J: int, g: float) -> DiagonalFilter:
    """Post-selection filter for one round of xi target half-periods.

    Coefficients cos(xi pi sqrt((J(J+1) - m(m+-1)) / (J(J+1) - m_t(m_t+-1))))
    with + for the e branch and - for the g branch; magnitude 1 at the
    target and at its branch-degenerate neighbour.
    """
    if xi < 1:
        raise ValueError("xi must be >= 1")
    m = np.arange(-J, J + 1)
    w = J * (J + 1) - _branch_weight(m, branch)
    w_t = J * (J + 1) - _branch_weight(m_t, branch)
    if w_t <= 0:
        raise ValueError(f"target m_t={m_t} is dark for the {branch} branch")
    coeff = np.cos(xi * np.pi * np.sqrt(w / w_t))
    tau = xi * math.pi / (2.0 * g * math.sqrt(w_t))
    return DiagonalFilter(coeff.astype(complex), elapsed_time=tau)


def build_dicke_schedule(M: int, N: int, g: float, rounding: str = "floor",
                         lagged: bool = True) -> DickeSchedule:
    """Hybrid schedule: one e round, then g rounds with halving multipliers.

    Multipliers follow xi_k = floor(J(J+1)/2^k) (or ceil); round 1 uses
    xi_1 with the ancilla excited, and round k >= 2 uses xi_(k-1) with
    the ancilla in the ground state, so the first two rounds share xi_1.
    ``lagged=False`` switches the later rounds to xi_k, which skips the
    g-branch pass needed to remove the m = -1 neighbour and is kept only
    for comparison.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if M < 2 or M % 2:
        raise ValueError("M must be even and >= 2")
    if g <= 0:
        raise ValueError("spin-star protocol needs g > 0")
    if rounding not in ("floor", "ceil"):
        raise ValueError("rounding must be 'floor' or 'ceil'")
    J = M // 2
    jj = J * (J + 1)
    op = math.floor if rounding == "floor" else math.ceil
    clamped = False

    def xi(k):
        nonlocal clamped
        v = op(jj / 2 ** k)
        if v < 1:
            clamped = True
            return 1
        return v

    base = math.pi / (2.0 * g * math.sqrt(jj))  # target half-period, m_t = 0
    rounds = [("e", xi(1), xi(1) * base)]
    for k in range(2, N + 1):
        x = xi(k - 1) if lagged else xi(k)
        rounds.append(("g", x, x * base))
    if clamped:
        warnings.warn(f"multiplier sequence for M={M} bottomed out at 1 "
                      f"before round {N}; extra rounds refine only weakly",
                      stacklevel=2)
    return DickeSchedule(M=M, g=g, rounds=tuple(rounds), rounding=rounding)


def run_dicke_protocol(initial: DickeEnsemble,
                       schedule: DickeSchedule) -> RunRecord:
    """Sequential filtered run toward |J, 0|; fidelity is the m=0 population."""
    if initial.M != schedule.M:
        raise ValueError("ensemble size does not match the schedule")
    J = initial.J
    state = initial.as_pure_state()
    record = RunRecord(final_state=initial)
    for branch, xi, tau in schedule.rounds:
        filt = dicke_filter(branch, xi, schedule.m_t, J, schedule.g)
        state, prob = apply_filter(state, filt)
        record.append_round(float(abs(state.amplitudes[J]) ** 2), prob, tau)
    record.final_state = DickeEnsemble(state.amplitudes)
    return record


def dicke_gpm_operator(branch: str, N: int, J: int) -> DiagonalFilter:
    """Idealized comb projector the branch rounds approximate after N rounds.

    Keeps m = 2^(N+1) j together with m = 2^(N+1) j - 1 for the e branch
    (+1 for the g branch); oracle only, elapsed time zero.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if branch not in _BRANCH_SIGN:
        raise ValueError("branch must be 'e' or 'g'")
    step = 2 ** (N + 1)
    coeff = np.zeros(2 * J + 1, dtype=complex)
    for j in range(-(2 * J) // step - 1, (2 * J) // step + 2):
        for m in (step * j, step * j - _BRANCH_SIGN[branch]):
            if -J <= m <= J:
                coeff[m + J] = 1.0
    return DiagonalFilter(coeff, elapsed_time=0.0)


def qfi_x(state: DickeEnsemble) -> float:
    """Pure-state quantum Fisher information for rotations about x.

    Evaluates 4 Var(J_x) through the tridiagonal ladder elements
    <m+1|J_+|m> = sqrt(J(J+1) - m(m+1)).
    """
    amp = state.amplitudes
    J = state.J
    m = np.arange(-J, J, dtype=float)
    ladder = 0.5 * np.sqrt(J * (J + 1) - m * (m + 1))  # <m+1|J_x|m>
    jx_amp = np.zeros_like(amp)
    jx_amp[1:] += ladder * amp[:-1]
    jx_amp[:-1] += ladder * amp[1:]
    mean = np.vdot(amp, jx_amp).real
    second = np.vdot(jx_amp, jx_amp).real
    return float(4.0 * (second - mean * mean))


def steady_success_probability(initial: DickeEnsemble, m_t: int = 0) -> float:
    """Limit of the cumulative success probability: the initial m_t weight."""
    return initial.population(m_t)
