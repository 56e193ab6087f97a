"""Resonant exchange-coupling protocol for Fock-state generation.

An ancilla prepared in its excited state exchanges excitations with the
mode; holding the joint evolution for an integer number ``l`` of target
Rabi half-periods and post-selecting the ancilla in |e> realises a
diagonal filter that leaves the target level untouched.  Halving ``l``
round after round refines the surviving comb of levels down to the
target, emulating a generalized parity measurement.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .hilbert import (CouplingParams, DiagonalFilter, PureState, RunRecord,
                      apply_filter, fidelity_with_basis_state)


@dataclass(frozen=True)
class FockSchedule:
    """Round multipliers and timing for the resonant protocol.

    Round ``k`` evolves for ``multipliers[k-1]`` half-periods of the
    target-level Rabi frequency sqrt(n_t + 1) * g (resonant case).
    """

    n_t: int
    g: float
    multipliers: tuple[int, ...]
    rounding: str = "floor"

    @property
    def n_rounds(self) -> int:
        return len(self.multipliers)

    @property
    def base_period(self) -> float:
        """Half-period pi/Omega of the target-level Rabi oscillation."""
        return math.pi / (math.sqrt(self.n_t + 1) * self.g)

    @property
    def durations(self) -> tuple[float, ...]:
        t = self.base_period
        return tuple(l * t for l in self.multipliers)

    @property
    def total_time(self) -> float:
        return self.base_period * sum(self.multipliers)


def beta_coefficient(n: int, tau: float, params: CouplingParams) -> complex:
    """Amplitude for the ancilla to stay excited with the mode at level n.

    Exact diagonal element of the joint propagator restricted to the
    two-level block {|e,n>, |g,n+1>}; equals cos(Omega_n tau) on
    resonance with Omega_n = sqrt(delta^2/4 + (n+1) g^2).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    delta = params.delta
    omega = math.sqrt(0.25 * delta * delta + (n + 1) * params.g ** 2)
    phase = complex(math.cos(0.5 * delta * tau), -math.sin(0.5 * delta * tau))
    return phase * complex(math.cos(omega * tau),
                           -0.5 * delta / omega * math.sin(omega * tau))


def resonant_filter(n_t: int, l: int, g: float, n_max: int) -> DiagonalFilter:
    """Post-selection filter for one resonant round of l half-periods.

    Coefficients cos(l pi sqrt((n+1)/(n_t+1))) over levels 0..n_max;
    magnitude 1 exactly at the target level.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if not 0 <= n_t <= n_max:
        raise ValueError("need 0 <= n_t <= n_max")
    n = np.arange(n_max + 1)
    coeff = np.cos(l * np.pi * np.sqrt((n + 1) / (n_t + 1)))
    tau = l * math.pi / (math.sqrt(n_t + 1) * g)
    return DiagonalFilter(coeff.astype(complex), elapsed_time=tau)


def build_fock_schedule(n_t: int, N: int, g: float,
                        rounding: str = "floor") -> FockSchedule:
    """Halving multiplier sequence l_k ~ (n_t+1)/2^(k-1) for N rounds.

    ``rounding`` picks floor (default) or ceil for each l_k.  Once the
    sequence reaches 1 it stays clamped there (further halving has no
    integer room) and a warning is emitted.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if g <= 0:
        raise ValueError("resonant protocol needs g > 0")
    if rounding not in ("floor", "ceil"):
        raise ValueError("rounding must be 'floor' or 'ceil'")
    op = math.floor if rounding == "floor" else math.ceil
    ls = []
    clamped = False
    for k in range(1, N + 1):
        l = op((n_t + 1) / 2 ** (k - 1))
        if l < 1:
            l = 1
            clamped = True
        ls.append(l)
    if clamped:
        warnings.warn(f"multiplier sequence for n_t={n_t} bottomed out at 1 "
                      f"before round {N}; extra rounds refine only weakly",
                      stacklevel=2)
    return FockSchedule(n_t=n_t, g=g, multipliers=tuple(ls), rounding=rounding)


def run_ideal_protocol(initial: PureState, schedule: FockSchedule) -> RunRecord:
    """Closed-system sequential run: filter, renormalize, record.

    Fidelity is the target-level population |<n_t|psi>|^2 after each
    round; the per-round success probability is the squared norm removed
    by that round's filter.
    """
    n_max = initial.dim - 1
    if schedule.n_t > n_max:
        raise ValueError("state truncation does not include the target level")
    record = RunRecord(final_state=initial)
    state = initial
    for l, tau in zip(schedule.multipliers, schedule.durations):
        filt = resonant_filter(schedule.n_t, l, schedule.g, n_max)
        state, prob = apply_filter(state, filt)
        record.append_round(fidelity_with_basis_state(state, schedule.n_t),
                            prob, tau)
    record.final_state = state
    return record


def gpm_operator(n_t: int, N: int, n_max: int) -> DiagonalFilter:
    """Idealized generalized-parity projector onto the comb n_t + 2^N j.

    This is the oracle the physical rounds approximate, not a physical
    filter; its elapsed time is zero.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    coeff = np.zeros(n_max + 1, dtype=complex)
    step = 2 ** N
    j = -(n_t // step)
    while n_t + step * j <= n_max:
        coeff[n_t + step * j] = 1.0
        j += 1
    return DiagonalFilter(coeff, elapsed_time=0.0)


def success_prob_theory(n_t: int, N: int) -> float:
    """Gaussian-comb estimate of the cumulative success probability.

    Sums (2 pi n_t)^(-1/2) exp(-j^2 2^(2N) / (2 n_t)) over the comb
    indices j >= -floor(n_t / 2^N); approaches 2^-N in early rounds and
    (2 pi n_t)^(-1/2) for large N.
    """
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    step = 2 ** N
    j_min = -(n_t // step)
    # terms beyond ~40 sigma are zero at double precision
    j_max = int(math.ceil(40.0 * math.sqrt(n_t) / step)) + 1
    j = np.arange(j_min, j_max + 1, dtype=float)
    return float(np.exp(-j * j * step * step / (2.0 * n_t)).sum()
                 / math.sqrt(2.0 * math.pi * n_t))


def steady_success_probability(initial: PureState, n_t: int) -> float:
    """Limit of the cumulative success probability for many rounds.

    Every level other than the target is eventually filtered out, so the
    cumulative probability converges to the initial target population.
    """
    return fidelity_with_basis_state(initial, n_t)
