"""Dispersive-coupling baseline protocol (Ramsey-type rounds).

Each round sandwiches a free evolution under the number-dependent qubit
phase shift between two instantaneous Hadamard gates and post-selects the
ancilla ground state.  With the detuning parked on the target level and
round durations halving, the surviving comb is refined exactly — this
realisation needs no small-offset approximation, at the price of being
much slower than the exchange-coupling protocol for large targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (DiagonalFilter, PureState, RunRecord, apply_filter,
                      fidelity_with_basis_state)


@dataclass(frozen=True)
class DispersiveSchedule:
    """Round timing for the dispersive protocol: tau_k = pi/(chi 2^(k-1))."""

    n_t: int
    chi: float
    n_rounds: int

    @property
    def delta(self) -> float:
        """Detuning parked on the target level."""
        return self.chi * self.n_t

    @property
    def durations(self) -> tuple[float, ...]:
        return tuple(math.pi / (self.chi * 2 ** (k - 1))
                     for k in range(1, self.n_rounds + 1))

    @property
    def total_time(self) -> float:
        return sum(self.durations)


def build_dispersive_schedule(n_t: int, N: int, chi: float) -> DispersiveSchedule:
    if N < 1:
        raise ValueError("N must be >= 1")
    if chi <= 0:
        raise ValueError("dispersive protocol needs chi > 0")
    return DispersiveSchedule(n_t=n_t, chi=chi, n_rounds=N)


def dispersive_filter(schedule: DispersiveSchedule, k: int,
                      n_max: int) -> DiagonalFilter:
    """Ground-state filter of round k (1-based) on levels 0..n_max.

    Coefficients exp(-i (delta - chi n) tau_k / 2) cos((delta - chi n)
    tau_k / 2); zero on levels whose offset from the target is an odd
    multiple of 2^(k-1).
    """
    if not 1 <= k <= schedule.n_rounds:
        raise ValueError(f"round index {k} outside 1..{schedule.n_rounds}")
    tau = schedule.durations[k - 1]
    n = np.arange(n_max + 1)
    half_phase = 0.5 * (schedule.delta - schedule.chi * n) * tau
    coeff = np.exp(-1j * half_phase) * np.cos(half_phase)
    return DiagonalFilter(coeff, elapsed_time=tau)


def run_dispersive_protocol(initial: PureState,
                            schedule: DispersiveSchedule) -> RunRecord:
    """Closed-system sequential run of the dispersive rounds."""
    n_max = initial.dim - 1
    if schedule.n_t > n_max:
        raise ValueError("state truncation does not include the target level")
    record = RunRecord(final_state=initial)
    state = initial
    for k in range(1, schedule.n_rounds + 1):
        filt = dispersive_filter(schedule, k, n_max)
        state, prob = apply_filter(state, filt)
        record.append_round(fidelity_with_basis_state(state, schedule.n_t),
                            prob, filt.elapsed_time)
    record.final_state = state
    return record
