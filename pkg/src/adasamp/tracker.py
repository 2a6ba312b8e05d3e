"""Safe interval tracking of gradient magnitudes across solver steps.

Coordinate descent tracks per-feature bounds on the loss-term gradient;
SGD tracks per-sample bounds on the scalar margin derivative, which scale
by the row norm into component gradient-norm bounds.  Updates widen the
inactive intervals by a worst-case drift (norm products times the loss
curvature, plus any proximal displacement) and collapse the active one
onto its observed value.  In exact-gram mode the drift for least squares
is known exactly and intervals shift instead of widening.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import glm
from .sampling import GradientBox

CD_CAUCHY_SCHWARZ = "cd_cauchy_schwarz"
CD_EXACT_GRAM = "cd_exact_gram"
SGD_CAUCHY_SCHWARZ = "sgd_cauchy_schwarz"
MODES = (CD_CAUCHY_SCHWARZ, CD_EXACT_GRAM, SGD_CAUCHY_SCHWARZ)

DEFAULT_GRAM_LIMIT = 20000


@dataclass
class TrackerState:
    """Bounds plus the geometry needed to widen them.

    ``norms`` are column norms for CD modes and row norms for the SGD
    mode.  ``reg_magnitudes`` carries |2 lambda x_i| for CD under L2 so
    the smooth interval and the exact regularizer term combine on query.
    ``signed_values`` backs exact-gram tracking (sign-aware shifts).
    """

    mode: str
    lower: np.ndarray
    upper: np.ndarray
    exact_mask: np.ndarray
    norms: np.ndarray
    curvature_bound: float
    gram: np.ndarray | None = None
    signed_values: np.ndarray | None = None
    reg_magnitudes: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.lower.size


def init_tracker(
    problem: glm.GlmProblem, mode: str, gram_limit: int = DEFAULT_GRAM_LIMIT
) -> TrackerState:
    """Fresh tracker: nothing observed, so [0, inf) everywhere except
    zero-norm directions whose gradient contribution is provably zero."""
    if mode not in MODES:
        raise ValueError(f"unknown tracker mode {mode!r}")
    if mode == SGD_CAUCHY_SCHWARZ:
        norms = problem.design.row_norms.copy()
    else:
        norms = problem.design.column_norms.copy()
    n = norms.size
    if n == 0:
        raise ValueError("empty problem")

    gram = None
    signed = None
    if mode == CD_EXACT_GRAM:
        if problem.loss is not glm.SquareLoss:
            raise ValueError("exact-gram tracking needs constant curvature (square loss)")
        if n > gram_limit:
            raise ValueError(
                f"gram table for n={n} exceeds the limit {gram_limit}; "
                "raise gram_limit explicitly to allow the quadratic memory"
            )
        csc = problem.design.csc
        gram = (csc.T @ csc).toarray()
        signed = np.zeros(n)

    reg = None
    if mode != SGD_CAUCHY_SCHWARZ and problem.reg == "l2" and problem.lam > 0.0:
        reg = np.zeros(n)

    upper = np.where(norms > 0.0, np.inf, 0.0)
    return TrackerState(
        mode=mode,
        lower=np.zeros(n),
        upper=upper,
        exact_mask=np.zeros(n, dtype=bool),
        norms=norms,
        curvature_bound=problem.loss.curvature_sup,
        gram=gram,
        signed_values=signed,
        reg_magnitudes=reg,
    )


def _collapse(state: TrackerState, index: int, signed_value: float) -> None:
    mag = abs(signed_value)
    state.lower[index] = mag
    state.upper[index] = mag
    state.exact_mask[index] = True
    if state.signed_values is not None:
        state.signed_values[index] = signed_value


def cd_update(
    state: TrackerState,
    index: int,
    displacement: float,
    observed_gradient: float,
    reg_derivative: float | None = None,
) -> TrackerState:
    """Account for one coordinate step.

    ``displacement`` is the change of x at ``index``; ``observed_gradient``
    is the signed loss-term gradient there after the step;
    ``reg_derivative`` the new 2*lambda*x_i when tracking L2 separately.
    """
    if state.mode == SGD_CAUCHY_SCHWARZ:
        raise ValueError("cd_update on an SGD tracker")
    if not np.isfinite(displacement):
        raise ValueError("non-finite displacement")
    if displacement != 0.0:
        if state.mode == CD_EXACT_GRAM:
            shift = displacement * state.gram[:, index]
            exact = state.exact_mask
            state.signed_values[exact] += shift[exact]
            mag = np.abs(state.signed_values[exact])
            state.lower[exact] = mag
            state.upper[exact] = mag
            rough = ~exact
            drift = np.abs(shift[rough])
            state.lower[rough] = np.maximum(state.lower[rough] - drift, 0.0)
            state.upper[rough] += drift
        else:
            drift = (
                state.curvature_bound * abs(displacement) * state.norms[index]
            ) * state.norms
            np.maximum(state.lower - drift, 0.0, out=state.lower)
            state.upper += drift
            state.exact_mask &= drift == 0.0
    _collapse(state, index, observed_gradient)
    if state.reg_magnitudes is not None and reg_derivative is not None:
        state.reg_magnitudes[index] = abs(reg_derivative)
    return state


def sgd_update(
    state: TrackerState,
    index: int,
    displacement: float,
    residual_norm: float,
    observed_derivative: float,
) -> TrackerState:
    """Account for one stochastic step x -> x + displacement * a_index
    followed by a proximal move of norm ``residual_norm``."""
    if state.mode != SGD_CAUCHY_SCHWARZ:
        raise ValueError("sgd_update on a CD tracker")
    if residual_norm < 0.0:
        raise ValueError("negative residual norm")
    if displacement != 0.0 or residual_norm != 0.0:
        drift = state.curvature_bound * state.norms * (
            abs(displacement) * state.norms[index] + residual_norm
        )
        np.maximum(state.lower - drift, 0.0, out=state.lower)
        state.upper += drift
        state.exact_mask &= drift == 0.0
    _collapse(state, index, observed_derivative)
    return state


def observe_exact(state: TrackerState, index: int, magnitude: float) -> TrackerState:
    """Collapse one interval onto a known magnitude."""
    if magnitude < 0.0:
        raise ValueError("magnitude must be nonnegative")
    _collapse(state, index, magnitude)
    return state


def refresh_exact(state: TrackerState, signed_values: np.ndarray) -> TrackerState:
    """Collapse every interval onto freshly computed values (full reset)."""
    signed_values = np.asarray(signed_values, dtype=np.float64)
    if signed_values.shape != state.lower.shape:
        raise ValueError("refresh vector length mismatch")
    mag = np.abs(signed_values)
    state.lower[:] = mag
    state.upper[:] = mag
    state.exact_mask[:] = True
    if state.signed_values is not None:
        state.signed_values[:] = signed_values
    return state


def sampling_box(state: TrackerState) -> GradientBox:
    """Bounds on the quantity the sampler scores.

    CD: the full coordinate gradient (smooth interval combined with the
    exact L2 term by interval arithmetic).  SGD: the component gradient
    norm (scalar interval times the row norm).
    """
    if state.mode == SGD_CAUCHY_SCHWARZ:
        lo = state.lower * state.norms
        up = state.upper * state.norms
        return GradientBox(lo, up, state.exact_mask & (lo == up))
    if state.reg_magnitudes is None:
        return GradientBox(
            state.lower.copy(), state.upper.copy(), state.exact_mask.copy()
        )
    t = state.reg_magnitudes
    lo = np.maximum(np.maximum(state.lower - t, t - state.upper), 0.0)
    up = state.upper + t
    return GradientBox(lo, up, state.exact_mask & (lo == up))
