"""Core state and operator types shared by all protocols.

States live in a truncated number basis: Fock levels ``n = 0..n_max`` for a
bosonic mode, or collective-spin projections ``m = -J..J`` for an ensemble
(handled through ``basis_offset``).  Measurement rounds act through diagonal
non-unitary filters; open-system runs use a dense density matrix on the
composite ancilla (x) mode space together with the adaptive propagator
``integrate_ode``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import gammaln


class TruncationError(ValueError):
    """Basis cutoff too small for the requested state."""


class ZeroProbabilityError(RuntimeError):
    """The requested measurement outcome has (numerically) zero probability."""


class IntegrationError(RuntimeError):
    """The adaptive propagator failed (step underflow or solver breakdown)."""


@dataclass(frozen=True)
class PureState:
    """Complex amplitude vector over a truncated number basis.

    Parameters
    ----------
    amplitudes : array_like
        Complex amplitudes, one per basis state.
    basis_offset : int
        Physical label of the first entry: 0 for a Fock basis,
        ``-J`` for a collective-spin ``m`` basis.
    """

    amplitudes: np.ndarray
    basis_offset: int = 0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size < 1:
            raise ValueError("amplitudes must be a non-empty 1-D vector")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "PureState":
        n = self.norm()
        if n < 1e-300:
            raise ZeroProbabilityError("cannot normalize a zero state")
        return PureState(self.amplitudes / n, self.basis_offset)

    def position(self, index: int) -> int:
        """Array position of the physical basis label ``index``."""
        pos = index - self.basis_offset
        if not 0 <= pos < self.dim:
            raise IndexError(f"basis label {index} outside "
                             f"[{self.basis_offset}, {self.basis_offset + self.dim - 1}]")
        return pos


@dataclass(frozen=True)
class DiagonalFilter:
    """Diagonal non-unitary evolution operator (measurement restriction).

    Coefficients are the ancilla-conditioned amplitudes, one per basis
    state; their magnitude never exceeds 1.  ``elapsed_time`` is the
    physical duration (seconds) of the joint evolution the filter encodes.
    """

    coefficients: np.ndarray
    elapsed_time: float = 0.0

    def __post_init__(self):
        coeff = np.asarray(self.coefficients, dtype=complex)
        if coeff.ndim != 1 or coeff.size < 1:
            raise ValueError("coefficients must be a non-empty 1-D vector")
        if np.any(np.abs(coeff) > 1.0 + 1e-12):
            raise ValueError("filter coefficients must have magnitude <= 1")
        object.__setattr__(self, "coefficients", coeff)

    @property
    def dim(self) -> int:
        return self.coefficients.size


@dataclass(frozen=True)
class CouplingParams:
    """Ancilla-mode coupling constants, all angular rates in s^-1.

    ``g`` is the exchange (Jaynes-Cummings / spin-star) coupling, ``chi``
    the dispersive strength and ``delta`` the ancilla-mode detuning in the
    rotating frame.  Quoted MHz/kHz values are used directly as s^-1
    without a 2*pi factor.
    """

    g: float = 0.0
    chi: float = 0.0
    delta: float = 0.0


@dataclass(frozen=True)
class DensityMatrix:
    """Dense density matrix on the composite ancilla (x) mode space.

    Basis ordering is ``index = ancilla * mode_dim + n`` with ancilla 0
    the ground and 1 the excited state, so the four ancilla blocks are
    contiguous ``mode_dim x mode_dim`` views.
    """

    entries: np.ndarray
    mode_dim: int

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=complex)
        if ent.shape != (2 * self.mode_dim, 2 * self.mode_dim):
            raise ValueError("entries must be square with dim = 2 * mode_dim")
        object.__setattr__(self, "entries", ent)

    @property
    def dim(self) -> int:
        return 2 * self.mode_dim

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def mode_matrix(self) -> np.ndarray:
        """Reduced mode density matrix (ancilla traced out)."""
        d = self.mode_dim
        return self.entries[:d, :d] + self.entries[d:, d:]

    def ancilla_block(self, outcome: str) -> np.ndarray:
        d = self.mode_dim
        if outcome == "g":
            return self.entries[:d, :d]
        if outcome == "e":
            return self.entries[d:, d:]
        raise ValueError("outcome must be 'g' or 'e'")


@dataclass
class RunRecord:
    """Per-round bookkeeping of a sequential measurement protocol."""

    fidelity_per_round: list[float] = field(default_factory=list)
    success_prob_per_round: list[float] = field(default_factory=list)
    cumulative_success: float = 1.0
    total_time: float = 0.0
    final_state: object = None

    def append_round(self, fidelity: float, success_prob: float, duration: float):
        self.fidelity_per_round.append(float(fidelity))
        self.success_prob_per_round.append(float(success_prob))
        self.cumulative_success *= float(success_prob)
        self.total_time += float(duration)

    @property
    def n_rounds(self) -> int:
        return len(self.fidelity_per_round)


def fock_cutoff(n_t: float, width: float = 8.0) -> int:
    """Highest Fock level to retain for a coherent state centred at n_t.

    The 8-sigma margin alone leaves a tail just above 1e-12 at the
    extremes (the Poisson upper tail is heavier than Gaussian), so a
    slowly growing pad is added; the default then keeps the discarded
    mass below 1e-12 across the working range n_t <= ~3000.  Beyond
    that the log-gamma conditioning of the tail estimate itself becomes
    the limit and a looser ``tail_tol`` is appropriate.
    """
    return int(math.ceil(n_t + width * math.sqrt(n_t))) + 12 + int(n_t) // 400


def coherent_state(alpha: complex, n_max: int, tail_tol: float = 1e-12) -> PureState:
    """Truncated coherent state |alpha> on Fock levels 0..n_max.

    Amplitudes are evaluated in log space (log-gamma) so that targets up
    to n ~ 2000 stay finite.  Raises ``TruncationError`` when the
    discarded tail mass exceeds ``tail_tol``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(n_max + 1)
    r = abs(alpha)
    if r == 0.0:
        amp = np.zeros(n_max + 1, dtype=complex)
        amp[0] = 1.0
        return PureState(amp)
    log_p = -r * r + 2.0 * n * math.log(r) - gammaln(n + 1)
    tail = 1.0 - float(np.exp(log_p).sum())
    if tail > tail_tol:
        raise TruncationError(
            f"coherent-state tail mass {tail:.3e} above {tail_tol:.1e}; "
            f"raise n_max (have {n_max})")
    phase = np.exp(1j * np.angle(alpha) * n)
    amp = np.exp(0.5 * log_p) * phase
    return PureState(amp).normalize()


def fidelity_with_basis_state(state: Union[PureState, DensityMatrix],
                              index: int) -> float:
    """Population of the basis state with physical label ``index``.

    For a composite ``DensityMatrix`` the ancilla is traced out first.
    """
    if isinstance(state, PureState):
        return float(np.abs(state.amplitudes[state.position(index)]) ** 2)
    if isinstance(state, DensityMatrix):
        if not 0 <= index < state.mode_dim:
            raise IndexError(f"mode index {index} outside [0, {state.mode_dim - 1}]")
        d = state.mode_dim
        return float((state.entries[index, index]
                      + state.entries[d + index, d + index]).real)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def apply_filter(state: PureState, filt: DiagonalFilter) -> tuple[PureState, float]:
    """Conditioned update after one successful measurement round.

    Multiplies elementwise, returns the renormalized state and the
    success probability (the squared norm before renormalization).
    """
    if filt.dim != state.dim:
        raise ValueError(f"filter dim {filt.dim} != state dim {state.dim}")
    amp = state.amplitudes * filt.coefficients
    prob = float(np.vdot(amp, amp).real)
    if prob < 1e-15:
        raise ZeroProbabilityError(
            f"measurement outcome has probability {prob:.3e}")
    return PureState(amp / math.sqrt(prob), state.basis_offset), prob


def integrate_ode(rhs: Callable[[float, np.ndarray], np.ndarray],
                  initial: DensityMatrix,
                  duration: float,
                  tol: float = 1e-8) -> DensityMatrix:
    """Propagate d(rho)/dt = rhs(t, rho) with an adaptive embedded RK pair.

    Parameters
    ----------
    rhs : callable
        Matrix-in, matrix-out derivative function.
    duration : float
        Propagation time in seconds (>= 0).
    tol : float
        Relative tolerance; the absolute tolerance is ``tol * 1e-4``
        (1e-12 at the default 1e-8).
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if duration == 0.0:
        return initial
    shape = initial.entries.shape

    def flat_rhs(t, y):
        return rhs(t, y.reshape(shape)).ravel()

    sol = solve_ivp(flat_rhs, (0.0, duration), initial.entries.ravel(),
                    method="DOP853", rtol=tol, atol=tol * 1e-4)
    if not sol.success:
        raise IntegrationError(
            f"propagation failed after {sol.nfev} evaluations "
            f"(step underflow?): {sol.message}")
    return DensityMatrix(sol.y[:, -1].reshape(shape), initial.mode_dim)
