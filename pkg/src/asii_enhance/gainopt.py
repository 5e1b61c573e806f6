"""ASII-optimal critical-band gains under an equal-power constraint.

For band speech energy s_j, residual far-end noise b_j, near-end noise n_j
and objective weights g_j, the allocation problem is::

    maximize    sum_j g_j a_j s_j / (a_j (s_j + b_j) + n_j)
    subject to  sum_j a_j s_j = r,   a_j >= 0

Each term is concave in a_j, so the KKT conditions are sufficient.  With
c_j = s_j + b_j and multiplier nu, a band is active iff nu < g_j / n_j and
then::

    a_j = sqrt(n_j g_j) / (sqrt(nu) c_j) - n_j / c_j

The multiplier for a given active set closes the budget in one step; the
active set itself is found by sweeping bands in order of their threshold
g_j / n_j.  Two independent oracles (simplex grid search and scaled
projected gradient ascent) check the closed form.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._validation import check_nonnegative, check_same_length

EPS_ALPHA = 1e-8


class InfeasibleProblemError(ValueError):
    pass


@dataclass
class AllocationProblem:
    s2: np.ndarray
    b2: np.ndarray
    n2: np.ndarray
    weights: np.ndarray
    budget: float | None = None

    def __post_init__(self):
        self.s2 = check_nonnegative(self.s2, "s2", ndim=1)
        self.b2 = check_nonnegative(self.b2, "b2", ndim=1)
        self.n2 = check_nonnegative(self.n2, "n2", ndim=1)
        self.weights = np.asarray(self.weights, dtype=float)
        check_same_length(s2=self.s2, b2=self.b2, n2=self.n2, weights=self.weights)
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("objective weights must be positive and finite")
        if not np.any(self.s2 > 0):
            raise InfeasibleProblemError("no band carries speech energy")
        if self.budget is None:
            self.budget = float(self.s2.sum())
        if not self.budget > 0:
            raise ValueError(f"budget must be positive, got {self.budget}")

    @classmethod
    def from_energies(cls, energies, weights, budget=None):
        return cls(energies.s2, energies.b2, energies.n2, weights, budget)

    @property
    def n_bands(self):
        return len(self.s2)

    def thresholds(self):
        """Multiplier value below which each band receives positive gain."""
        with np.errstate(divide="ignore"):
            return np.where(self.n2 > 0, self.weights / np.where(self.n2 > 0, self.n2, 1.0), np.inf)


@dataclass
class GainSolution:
    alpha_band: np.ndarray
    nu: float
    active_set: np.ndarray
    objective_value: float
    alpha_bin: np.ndarray | None = None
    status: str = "optimal"
    degenerate_bands: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))


def weighted_audibility(alpha, problem):
    """sum_j g_j a_j s_j / (a_j s_j + a_j b_j + n_j); 0/0 terms count as 0."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != problem.s2.shape:
        raise ValueError(f"alpha has shape {alpha.shape}, expected {problem.s2.shape}")
    if np.any(alpha < 0):
        raise ValueError("gains must be non-negative")
    num = alpha * problem.s2
    den = alpha * (problem.s2 + problem.b2) + problem.n2
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(np.sum(problem.weights * terms))


def _alpha_from_scale(x, problem):
    # x = 1 / sqrt(nu)
    c = problem.s2 + problem.b2
    safe_c = np.where(c > 0, c, 1.0)
    alpha = (np.sqrt(problem.n2 * problem.weights) * x - problem.n2) / safe_c
    return np.where(c > 0, np.maximum(alpha, 0.0), 0.0)


def alpha_from_nu(nu, problem):
    """Closed-form band gains for a given multiplier ``nu``."""
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    return _alpha_from_scale(1.0 / np.sqrt(nu), problem)


def _scale_for_active_set(active, problem, budget):
    s, b, n, g = (a[active] for a in (problem.s2, problem.b2, problem.n2, problem.weights))
    c = s + b
    num = budget + np.sum(s * n / c)
    den = np.sum(s * np.sqrt(n * g) / c)
    if not den > 0:
        raise ValueError("active set has no band with positive near-end noise and speech")
    return num / den


def nu_for_active_set(active, problem, budget=None):
    """Multiplier that spends ``budget`` exactly when every band in ``active`` is positive."""
    active = np.atleast_1d(np.asarray(active, dtype=int))
    if active.size == 0:
        raise ValueError("empty active set")
    budget = problem.budget if budget is None else budget
    x = _scale_for_active_set(active, problem, budget)
    return 1.0 / x**2


def nu_by_bisection(problem, budget=None, free=None, iters=200):
    """Multiplier solving sum_j a_j(nu) s_j = budget by bisection on log(nu)."""
    budget = problem.budget if budget is None else budget
    if free is None:
        free = (problem.s2 > 0) & (problem.n2 > 0)

    def spent(log_nu):
        alpha = alpha_from_nu(np.exp(log_nu), problem)
        return np.sum(alpha[free] * problem.s2[free])

    hi = np.log(np.max(problem.thresholds()[free]))
    lo = hi - 1.0
    while spent(lo) < budget:
        lo -= 2.0 * (hi - lo)
        if lo < -1400:
            raise RuntimeError("bisection could not bracket the multiplier")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if spent(mid) > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return float(np.exp(0.5 * (lo + hi)))


def optimal_band_gains(problem):
    """Global maximizer of the weighted audibility under the equal-power constraint.

    Bands without speech get zero gain and no budget.  Bands with speech but
    no near-end noise have gain-independent audibility; they get
    ``EPS_ALPHA`` and the rest of the budget is allocated in closed form.
    If no band has near-end noise, every feasible point is optimal and the
    uniform allocation is returned with ``status="no_near_end_noise"``.
    """
    s2, n2 = problem.s2, problem.n2
    speech = s2 > 0
    degenerate = speech & (n2 == 0)
    free = speech & (n2 > 0)
    alpha = np.zeros(problem.n_bands)

    if not free.any():
        alpha[speech] = problem.budget / s2[speech].sum()
        return GainSolution(
            alpha_band=alpha,
            nu=0.0,
            active_set=np.flatnonzero(speech),
            objective_value=weighted_audibility(alpha, problem),
            status="no_near_end_noise",
            degenerate_bands=np.flatnonzero(degenerate),
        )

    alpha[degenerate] = EPS_ALPHA
    budget = problem.budget - EPS_ALPHA * s2[degenerate].sum()
    if not budget > 0:
        raise InfeasibleProblemError("budget exhausted by noise-free bands")

    idx = np.flatnonzero(free)
    thr = problem.thresholds()[idx]
    order = idx[np.argsort(-thr, kind="stable")]
    thr_sorted = np.sort(thr)[::-1]
    # tie groups enter the active set together
    group_ends = np.append(np.flatnonzero(np.diff(thr_sorted) != 0) + 1, len(idx))

    status = "optimal"
    active = None
    for m in group_ends:
        cand = order[:m]
        x = _scale_for_active_set(cand, problem, budget)
        nu = 1.0 / x**2
        next_thr = thr_sorted[m] if m < len(idx) else 0.0
        if nu >= next_thr:
            active = cand
            break
    if active is None:
        nu = nu_by_bisection(problem, budget, free)
        x = 1.0 / np.sqrt(nu)
        active = np.flatnonzero(free & (alpha_from_nu(nu, problem) > 0))
        status = "optimal_bisection"

    a = _alpha_from_scale(x, problem)
    # one Newton correction of the scale absorbs rounding in the budget sum
    s_act = s2[active]
    slope = np.sum(s_act * np.sqrt(n2[active] * problem.weights[active]) / (s_act + problem.b2[active]))
    x += (budget - np.sum(a[active] * s_act)) / slope
    a = _alpha_from_scale(x, problem)
    alpha[active] = a[active]
    active = np.sort(active[alpha[active] > 0])

    return GainSolution(
        alpha_band=alpha,
        nu=float(1.0 / x**2),
        active_set=active,
        objective_value=weighted_audibility(alpha, problem),
        status=status,
        degenerate_bands=np.flatnonzero(degenerate),
    )


def kkt_residuals(solution, problem):
    """Stationarity, primal and dual feasibility residuals of a solution.

    ``stationarity`` is relative to nu * s_j over the active set, ``primal``
    relative to the budget, ``dual_min`` the smallest inactive-band
    inequality multiplier (must be >= 0).
    """
    s, b, n, g = problem.s2, problem.b2, problem.n2, problem.weights
    alpha, nu = solution.alpha_band, solution.nu
    free = (s > 0) & (n > 0)
    act = np.zeros(len(s), dtype=bool)
    act[solution.active_set] = True
    act &= free
    grad = g * s * n / (alpha * (s + b) + n) ** 2
    stat = np.abs(grad[act] - nu * s[act]) / (nu * s[act])
    lam = nu * s[free & ~act] - grad[free & ~act]
    return {
        "stationarity": float(stat.max(initial=0.0)),
        "primal": float(abs(np.sum(alpha * s) - problem.budget) / problem.budget),
        "dual_min": float(lam.min(initial=0.0)),
        "complementarity": float(np.max(np.abs(alpha[free & ~act]), initial=0.0)),
        "min_alpha": float(alpha.min()),
    }


def _compositions(total, parts):
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]])
    bars = np.array(list(combinations(range(total + parts - 1), parts - 1)))
    padded = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), total + parts - 1)])
    return np.diff(padded, axis=1) - 1


def _project_scaled_simplex(y, d, total):
    # argmin sum d_j (x_j - y_j)^2  s.t. sum x = total, x >= 0
    # x_j = max(y_j - mu / d_j, 0); breakpoints at mu = d_j y_j
    bp = d * y
    order = np.argsort(-bp)
    inv_d = 1.0 / d
    sum_y = 0.0
    sum_inv = 0.0
    mu = None
    for pos, j in enumerate(order):
        sum_y += y[j]
        sum_inv += inv_d[j]
        cand = (sum_y - total) / sum_inv
        nxt = bp[order[pos + 1]] if pos + 1 < len(order) else -np.inf
        if cand >= nxt:
            mu = cand
            break
    return np.maximum(y - mu * inv_d, 0.0)


def oracle_band_gains(problem, resolution=None, mode="grid", max_iter=10000, tol=1e-12):
    """Brute-force maximizer used to check :func:`optimal_band_gains`.

    ``mode="grid"`` enumerates every allocation of the budget in energy
    steps of ``resolution`` (at most ``budget / 10``) and returns the best.
    ``mode="projected_gradient"`` runs gradient ascent in the band-energy
    coordinates, scaled by the diagonal curvature and projected back onto
    the constraint set in the same metric, until a step improves the
    objective by less than ``tol``.  Bands without speech get zero gain.
    """
    s = problem.s2
    speech = np.flatnonzero(s > 0)
    r = problem.budget
    alpha = np.zeros(problem.n_bands)

    if mode == "grid":
        if resolution is None:
            resolution = r / 20
        if resolution > r / 10 + 1e-12 * r:
            raise ValueError(f"resolution {resolution} coarser than budget / 10")
        if len(speech) > 8:
            raise ValueError("grid mode supports at most 8 bands")
        steps = int(np.ceil(r / resolution - 1e-9))
        energy = _compositions(steps, len(speech)) * (r / steps)
        a = energy / s[speech]
        num = a * s[speech]
        den = a * (s[speech] + problem.b2[speech]) + problem.n2[speech]
        terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        best = np.argmax(terms @ problem.weights[speech])
        alpha[speech] = a[best]
        return alpha

    if mode != "projected_gradient":
        raise ValueError(f"unknown oracle mode {mode!r}")

    sj = s[speech]
    cj = (sj + problem.b2[speech]) / sj
    nj = problem.n2[speech]
    gj = problem.weights[speech]

    def value(e):
        den = cj * e + nj
        return float(np.sum(gj * np.divide(e, den, out=np.zeros_like(e), where=den > 0)))

    e = np.full(len(sj), r / len(sj))
    f = value(e)
    for _ in range(max_iter):
        den = cj * e + nj
        grad = gj * nj / den**2
        curv = np.maximum(2.0 * gj * nj * cj / den**3, 1e-300)
        target = _project_scaled_simplex(e + grad / curv, curv, r)
        step = target - e
        slope = float(grad @ step)
        # objective differences below rounding carry no information
        noise = 4 * np.finfo(float).eps * max(abs(f), 1.0)
        t = 1.0
        while True:
            cand = e + t * step
            f_new = value(cand)
            if f_new >= f + 1e-4 * t * slope - noise or t < 1e-12:
                break
            t *= 0.5
        improved = f_new - f
        e, f = cand, max(f, f_new)
        if improved < tol and np.max(np.abs(t * step)) <= 1e-13 * r:
            break
    alpha[speech] = e / sj
    return alpha


def bin_gains_from_band_gains(alpha_band, bands, frozen_gain=1.0):
    """alpha_k = sum_j |H_j(k)|^2 alpha_j; bins outside every band keep ``frozen_gain``."""
    alpha_band = check_nonnegative(alpha_band, "alpha_band", ndim=1)
    if len(alpha_band) != bands.n_bands:
        raise ValueError(f"{len(alpha_band)} band gains for {bands.n_bands} bands")
    alpha_bin = bands.weights.T @ alpha_band
    alpha_bin[~bands.covered] = frozen_gain
    return alpha_bin


def compose_processor(weights, alpha_bin):
    """Per-bin processor v_k = sqrt(alpha_k) w_k, shape (K, M)."""
    w = weights.w if hasattr(weights, "w") else np.asarray(weights)
    alpha_bin = np.asarray(alpha_bin, dtype=float)
    if np.any(alpha_bin < 0):
        raise ValueError("bin gains must be non-negative")
    if len(alpha_bin) != w.shape[0]:
        raise ValueError(f"{len(alpha_bin)} bin gains for {w.shape[0]} bins")
    return np.sqrt(alpha_bin)[:, None] * w


def speech_power_ratio(processor, stats):
    """sum_k |v_k^H d_k|^2 sigma_S,k^2 / sum_k sigma_S,k^2."""
    resp = np.abs(np.einsum("km,km->k", np.conj(processor), stats.steering)) ** 2
    return float(np.sum(resp * stats.sigma_s2) / np.sum(stats.sigma_s2))
