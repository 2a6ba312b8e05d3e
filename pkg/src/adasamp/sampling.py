"""Sampling distributions for randomized descent directions.

Provides the static curvature-proportional distribution, the full-information
gradient-based distribution, and the worst-case-optimal distribution computed
from interval bounds on gradient magnitudes.  The latter solves

    min over probability vectors p  of  max over c in [lower, upper]
        sum_i L_i c_i^2 / p_i  /  ||c||_2^2

whose optimum is characterized by a three-branch fixed point: each
coordinate of the worst-case certificate sits at its upper bound, at its
lower bound, or at ``sqrt(L_i) * m`` for a common scalar m.  The solver
sorts the transformed bounds once and resolves the branches with a
two-pointer sweep, so one call costs O(n log n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize


class StationaryPointError(RuntimeError):
    """Every direction has provably zero gradient; nothing left to sample."""


class DiagnosticUnavailableError(RuntimeError):
    """The competitive-ratio diagnostic cannot run on this input."""


class LipschitzProfile:
    """Per-direction smoothness constants with cached derived quantities."""

    __slots__ = ("values", "sqrt_values", "trace", "min_value")

    def __init__(self, values):
        v = np.ascontiguousarray(values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("smoothness constants must form a nonempty 1-d vector")
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise ValueError("smoothness constants must be strictly positive and finite")
        self.values = v
        self.sqrt_values = np.sqrt(v)
        self.trace = float(np.sum(v))
        self.min_value = float(np.min(v))

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"LipschitzProfile(n={len(self)}, trace={self.trace:.6g})"


@dataclass
class GradientBox:
    """Safe interval bounds on per-direction gradient magnitudes.

    ``exact_mask[i]`` marks intervals collapsed onto an observed value.
    Upper bounds may be +inf (nothing known yet).
    """

    lower: np.ndarray
    upper: np.ndarray
    exact_mask: np.ndarray = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError("bound vectors must be 1-d and of equal length")
        if self.lower.size == 0:
            raise ValueError("empty gradient box")
        if self.exact_mask is None:
            self.exact_mask = np.zeros(self.lower.size, dtype=bool)
        else:
            self.exact_mask = np.asarray(self.exact_mask, dtype=bool)
            if self.exact_mask.shape != self.lower.shape:
                raise ValueError("exact_mask length mismatch")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not contain NaN")
        if np.any(self.lower < 0.0) or not np.all(np.isfinite(self.lower)):
            raise ValueError("lower bounds must be finite and nonnegative")
        if np.any(self.lower > self.upper):
            raise ValueError("need lower <= upper for every coordinate")
        if np.any(self.exact_mask & (self.lower != self.upper)):
            raise ValueError("exact intervals must have zero width")
        if np.any(self.exact_mask & ~np.isfinite(self.upper)):
            raise ValueError("exact intervals must be finite")

    @property
    def n(self) -> int:
        return self.lower.size


@dataclass
class SafeSamplingSolution:
    """Worst-case certificate, sampling probabilities and minimax value."""

    certificate: np.ndarray
    probabilities: np.ndarray
    value: float
    stepsize: float


def check_probability_vector(p: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be nonempty and 1-d")
    if np.any(p < 0.0) or not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be finite and nonnegative")
    if abs(float(np.sum(p)) - 1.0) > tol:
        raise ValueError(f"probabilities sum to {float(np.sum(p))!r}, not 1")
    return p


def effective_value(p: np.ndarray, c: np.ndarray, profile: LipschitzProfile) -> float:
    """Variance proxy sum_i L_i c_i^2 / p_i with the convention 0/0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if p.shape != c.shape or p.size != len(profile):
        raise ValueError("dimension mismatch between p, c and the smoothness profile")
    zero = p == 0.0
    if np.any(zero & (c != 0.0)):
        raise ValueError("zero probability on a coordinate with nonzero mass")
    if np.any(zero):
        keep = ~zero
        return float(np.sum(profile.values[keep] * c[keep] * c[keep] / p[keep]))
    return float(np.sum(profile.values * c * c / p))


def fixed_li_sampling(profile: LipschitzProfile) -> tuple[np.ndarray, float]:
    """Static curvature-proportional distribution and its best stepsize."""
    return profile.values / profile.trace, 1.0 / profile.trace


def optimal_sampling(
    gradient_magnitudes: np.ndarray, profile: LipschitzProfile
) -> tuple[np.ndarray, float]:
    """Full-information distribution p_i ~ sqrt(L_i) |g_i| and its stepsize.

    Raises StationaryPointError when every magnitude is zero.
    """
    g = np.asarray(gradient_magnitudes, dtype=np.float64)
    if g.shape != (len(profile),):
        raise ValueError("gradient vector length mismatch")
    if np.any(g < 0.0):
        raise ValueError("gradient magnitudes must be nonnegative")
    weights = profile.sqrt_values * g
    total = float(np.sum(weights))
    if total <= 0.0:
        raise StationaryPointError("all gradient magnitudes are zero")
    alpha = float(np.dot(g, g)) / (total * total)
    return weights / total, alpha


def _minimax_objective(c: np.ndarray, sqrt_values: np.ndarray) -> float:
    """||sqrt(L) c||_1^2 / ||c||_2^2 for nonnegative c."""
    s = float(np.sum(sqrt_values * c))
    q = float(np.dot(c, c))
    return s * s / q


def _solve_box(lower, upper, profile):
    """Two-pointer sweep on the sorted transformed bounds.

    Returns (certificate, probabilities, value) for a box whose upper
    bounds are all strictly positive.
    """
    sqrt_l = profile.sqrt_values
    n = lower.size
    t_lower = lower / sqrt_l
    t_upper = upper / sqrt_l
    order_low = np.argsort(t_lower, kind="stable")
    order_up = np.argsort(t_upper, kind="stable")
    sorted_tl = t_lower[order_low]
    sorted_tu = t_upper[order_up]

    c = np.zeros(n)
    decided = np.zeros(n, dtype=bool)
    lo_ptr = 0          # next position in the ascending upper bounds
    hi_ptr = n - 1      # next position in the ascending lower bounds
    n_decided = 0
    m = float(sorted_tl[-1])
    sum_sq = 0.0        # sum of c_i^2 over decided coordinates
    sum_weighted = 0.0  # sum of sqrt(L_i) c_i over decided coordinates

    while n_decided < n:
        t_low = float(sorted_tl[hi_ptr])
        if t_low > m:
            # Largest undecided lower bound is violated: pin it there.
            idx = int(order_low[hi_ptr])
            if decided[idx]:
                # Only reachable through rounding noise on a zero-width
                # interval; in exact arithmetic a decided coordinate can
                # never be violated again, so nothing is left to decide.
                break
            val = float(lower[idx])
            c[idx] = val
            decided[idx] = True
            sum_sq += val * val
            sum_weighted += sqrt_l[idx] * val
            m_new = t_low if n_decided == 0 else sum_sq / sum_weighted
            assert m <= m_new <= t_low, "lower-bound decision left its corridor"
            m = m_new
            hi_ptr -= 1
            n_decided += 1
            continue
        t_up = float(sorted_tu[lo_ptr])
        if t_up < m:
            # Smallest undecided upper bound is violated: cap it there.
            idx = int(order_up[lo_ptr])
            if decided[idx]:
                break
            val = float(upper[idx])
            c[idx] = val
            decided[idx] = True
            sum_sq += val * val
            sum_weighted += sqrt_l[idx] * val
            m_new = t_up if n_decided == 0 else sum_sq / sum_weighted
            assert t_up <= m_new <= m, "upper-bound decision left its corridor"
            m = m_new
            lo_ptr += 1
            n_decided += 1
            continue
        break  # no violated bound: every remaining coordinate is interior

    if n_decided == 0:
        # Certificate scale is free; any feasible m yields the static
        # curvature-proportional distribution.  Pick the smallest finite
        # transformed upper bound, falling back to the largest transformed
        # lower bound (or 1 when the box is fully uninformative) so the
        # certificate stays inside the box.
        t_up_min = float(sorted_tu[0])
        if np.isfinite(t_up_min):
            m = t_up_min
        elif m <= 0.0:
            m = 1.0
        # Clamp away sub-ulp excursions of sqrt(L) * (u / sqrt(L)).
        c = np.clip(sqrt_l * m, lower, upper)
        p = profile.values / profile.trace
        return c, p, profile.trace

    free = ~decided
    if np.any(free):
        c[free] = np.clip(sqrt_l[free] * m, lower[free], upper[free])
    weighted = sqrt_l * c
    total = float(np.sum(weighted))
    return c, weighted / total, _minimax_objective(c, sqrt_l)


def compute_safe_sampling(box: GradientBox, profile: LipschitzProfile) -> SafeSamplingSolution:
    """Best sampling distribution consistent with the gradient box.

    Coordinates whose upper bound is exactly zero have provably zero
    gradient; they receive probability zero and are excluded from the
    solve.  Raises StationaryPointError when that removes everything.
    """
    if box.n != len(profile):
        raise ValueError("box and smoothness profile disagree on dimension")
    active = box.upper > 0.0
    if not np.any(active):
        raise StationaryPointError("all upper bounds are zero")
    if np.all(active):
        c, p, v = _solve_box(box.lower, box.upper, profile)
    else:
        sub = LipschitzProfile(profile.values[active])
        c_sub, p_sub, v = _solve_box(box.lower[active], box.upper[active], sub)
        c = np.zeros(box.n)
        p = np.zeros(box.n)
        c[active] = c_sub
        p[active] = p_sub
    return SafeSamplingSolution(certificate=c, probabilities=p, value=v, stepsize=1.0 / v)


def stepsize_from_solution(solution: SafeSamplingSolution) -> float:
    """Reciprocal of the minimax value; lies in [1/trace, 1/min L_i]."""
    return 1.0 / solution.value


def draw_index(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from p: O(n) cumulative sum, binary search."""
    cum = np.cumsum(p)
    u = rng.random() * cum[-1]
    i = int(np.searchsorted(cum, u, side="right"))
    return min(i, p.size - 1)


def competitive_ratio_bound(
    box: GradientBox,
    profile: LipschitzProfile,
    value: float,
    starts: int = 16,
    seed: int = 0,
) -> float:
    """Diagnostic upper estimate of the hindsight competitive ratio.

    Divides the minimax value by the smallest objective found through
    corner enumeration and multi-start local minimization over the box.
    Small dimensions only; infinite upper bounds are rejected.
    """
    if not np.all(np.isfinite(box.upper)):
        raise DiagnosticUnavailableError("unbounded box: ratio diagnostic needs finite bounds")
    lower, upper = box.lower, box.upper
    sqrt_l = profile.sqrt_values
    n = box.n

    candidates = [lower, upper, 0.5 * (lower + upper)]
    if n <= 12:
        grids = np.meshgrid(*[np.array([lo, hi]) for lo, hi in zip(lower, upper)], indexing="ij")
        corners = np.stack([g.ravel() for g in grids], axis=-1)
        candidates.extend(corners)
    rng = np.random.default_rng(seed)
    candidates.extend(lower + rng.random((starts, n)) * (upper - lower))

    def split_objective(c):
        s = float(np.sum(sqrt_l * c))
        q = float(np.dot(c, c))
        return s, q

    best = np.inf
    best_point = None
    for cand in candidates:
        cand = np.asarray(cand, dtype=np.float64)
        if not np.any(cand):
            continue
        val = _minimax_objective(cand, sqrt_l)
        if val < best:
            best, best_point = val, cand

    def fun_and_grad(c):
        s, q = split_objective(c)
        if q == 0.0:
            return np.inf, np.zeros_like(c)
        f = s * s / q
        grad = (2.0 * s / q) * (sqrt_l - (s / q) * c)
        return f, grad

    start_points = [best_point, 0.5 * (lower + upper)]
    start_points.extend(lower + rng.random((4, n)) * (upper - lower))
    bounds = list(zip(lower, upper))
    for x0 in start_points:
        if x0 is None or not np.any(x0):
            continue
        res = scipy.optimize.minimize(
            fun_and_grad, x0, jac=True, method="L-BFGS-B", bounds=bounds
        )
        if np.all(res.x >= lower - 1e-12) and np.all(res.x <= upper + 1e-12):
            point = np.clip(res.x, lower, upper)
            if np.any(point):
                val = _minimax_objective(point, sqrt_l)
                if val < best:
                    best = val
    if not np.isfinite(best) or best <= 0.0:
        raise DiagnosticUnavailableError("could not evaluate the box objective")
    return value / best
