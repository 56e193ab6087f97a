"""Scaling-law extraction: minimum-round searches and least-squares fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import dicke, jc_fock
from .hilbert import apply_filter, coherent_state, fock_cutoff


class NotReachedError(RuntimeError):
    """The fidelity threshold was not reached within the round cap."""


class DegenerateInputError(ValueError):
    """Too few points for the requested fit."""


@dataclass(frozen=True)
class ScalingFit:
    """Fit family tag, coefficients and root-mean-square residual."""

    model: str
    coefficients: tuple[float, ...]
    residual: float


def min_rounds(target_kind: str, size: int, threshold: float,
               max_rounds: int = 20, rounding: str = "floor") -> int:
    """Smallest round count whose ideal-protocol fidelity meets ``threshold``.

    ``target_kind`` is "fock" (size = target level n_t) or "dicke"
    (size = even ensemble size M).  Rounds are applied incrementally so
    the search costs a single protocol run.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    # the search deliberately runs past the schedule's natural depth, so
    # silence the bottomed-out warning the builders would emit
    if target_kind == "fock":
        n_t = size
        n_max = fock_cutoff(n_t)
        state = coherent_state(math.sqrt(n_t), n_max)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            schedule = jc_fock.build_fock_schedule(n_t, max_rounds, g=1.0,
                                                   rounding=rounding)
        for k, l in enumerate(schedule.multipliers, start=1):
            filt = jc_fock.resonant_filter(n_t, l, 1.0, n_max)
            state, _ = apply_filter(state, filt)
            if abs(state.amplitudes[n_t]) ** 2 >= threshold:
                return k
    elif target_kind == "dicke":
        ensemble = dicke.initial_product_state(size, dicke.optimal_phi(0, size))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            schedule = dicke.build_dicke_schedule(size, max_rounds, g=1.0,
                                                  rounding=rounding)
        state = ensemble.as_pure_state()
        J = ensemble.J
        for k, (branch, xi, _) in enumerate(schedule.rounds, start=1):
            filt = dicke.dicke_filter(branch, xi, 0, J, 1.0)
            state, _ = apply_filter(state, filt)
            if abs(state.amplitudes[J]) ** 2 >= threshold:
                return k
    else:
        raise ValueError("target_kind must be 'fock' or 'dicke'")
    raise NotReachedError(
        f"{target_kind} size {size} did not reach {threshold} in {max_rounds} rounds")


def scaling_curve(target_kind: str, sizes, threshold: float,
                  max_rounds: int = 20) -> list[tuple[int, int]]:
    """Minimum-round staircase over a grid of target sizes."""
    return [(int(s), min_rounds(target_kind, int(s), threshold, max_rounds))
            for s in sizes]


def fit_log_scaling(points, fix_slope: bool = True) -> ScalingFit:
    """Fit N = log2(sqrt(size)) + c (slope fixed at 1/2 in log2).

    With ``fix_slope=False`` the slope is fitted too (diagnostic only);
    the constrained family is what the round counts are compared against.
    """
    pts = [(float(s), float(n)) for s, n in points]
    if len(pts) < 3:
        raise DegenerateInputError("need at least 3 points")
    x = np.array([0.5 * math.log2(s) for s, _ in pts])
    y = np.array([n for _, n in pts])
    if fix_slope:
        c = float(np.mean(y - x))
        resid = float(np.sqrt(np.mean((y - x - c) ** 2)))
        return ScalingFit("log-sqrt-offset", (c,), resid)
    a_mat = np.column_stack([x, np.ones_like(x)])
    (slope, c), *_ = np.linalg.lstsq(a_mat, y, rcond=None)
    resid = float(np.sqrt(np.mean((y - a_mat @ (slope, c)) ** 2)))
    return ScalingFit("log-sqrt-free", (float(slope), float(c)), resid)


def fit_qfi_quadratic(points) -> ScalingFit:
    """Least-squares a*M^2 + b*M (no constant term)."""
    pts = [(float(m), float(q)) for m, q in points]
    if len(pts) < 2:
        raise DegenerateInputError("need at least 2 points")
    m = np.array([p[0] for p in pts])
    q = np.array([p[1] for p in pts])
    a_mat = np.column_stack([m * m, m])
    coef, *_ = np.linalg.lstsq(a_mat, q, rcond=None)
    resid = float(np.sqrt(np.mean((q - a_mat @ coef) ** 2)))
    return ScalingFit("quadratic", (float(coef[0]), float(coef[1])), resid)
