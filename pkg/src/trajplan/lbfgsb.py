"""Bound-constrained limited-memory quasi-Newton minimizer.

Each iteration builds the quadratic model m(x) = h(xk) + g'(x-xk)
+ 1/2 (x-xk)' B (x-xk) with B = theta*I - W M W' in compact limited-memory
form, walks the projected steepest-descent path to the generalized Cauchy
point, minimizes the model over the free variables (direct Sherman-Morrison-
Woodbury solve of the small inner system), truncates back into the box, and
line-searches the resulting direction under the strong Wolfe conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class LineSearchFailure(RuntimeError):
    pass


class NonFiniteObjective(RuntimeError):
    pass


@dataclass
class BoxProblem:
    """min h(x) s.t. lower <= x <= upper; fun returns (h(x), grad h(x))."""

    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    fun: callable

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != (self.dimension,) or self.upper.shape != (self.dimension,):
            raise ValueError("bound shapes must match dimension")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")


@dataclass
class SolverOptions:
    max_iterations: int = 500
    history_size: int = 8
    gradient_tolerance: float = 1e-5  # on ||proj grad||_inf / max(1, ||x||_inf)
    objective_change_floor: float = 1e-12
    max_line_search_evals: int = 20
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    # secant refinement toward the exact 1D minimizer; gives finite
    # termination on quadratics at the cost of roughly one extra evaluation
    # per iteration
    line_search_refine: bool = True


@dataclass
class SolverResult:
    x: np.ndarray
    fval: float
    projected_gradient_norm: float
    iterations: int
    evaluations: int
    reason: str  # 'converged' | 'max-iter' | 'line-search-failure'

    @property
    def converged(self) -> bool:
        return self.reason == "converged"


class LbfgsHistory:
    """Curvature pairs and the compact representation B = theta*I - W M W'."""

    CURVATURE_FLOOR = 1e-10  # s'y > floor * |s||y| required to retain a pair

    def __init__(self, history_size: int = 8):
        self.history_size = history_size
        self.s: list[np.ndarray] = []
        self.y: list[np.ndarray] = []
        self.theta = 1.0
        self._compact = None
        self._sty = None
        self._sts = None

    def __len__(self):
        return len(self.s)

    def update(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Append a pair if it passes the positive-curvature safeguard."""
        sy = float(s @ y)
        if sy <= self.CURVATURE_FLOOR * np.linalg.norm(s) * np.linalg.norm(y):
            return False
        self.s.append(s.copy())
        self.y.append(y.copy())
        if len(self.s) > self.history_size:
            self.s.pop(0)
            self.y.pop(0)
        self._append_gram(s, y)
        self.theta = float(y @ y) / sy  # B0 = theta*I, standard scaling
        self._compact = None
        return True

    def _append_gram(self, s_new, y_new):
        """Grow the cached cross products S'Y and S'S by one pair in O(m n)
        instead of the O(m^2 n) full rebuild."""
        if self._sty is None:
            return
        m = len(self.s)
        cross_sy = np.array([sj @ y_new for sj in self.s[:-1]])
        cross_ys = np.array([s_new @ yj for yj in self.y[:-1]])
        cross_ss = np.array([sj @ s_new for sj in self.s[:-1]])
        off = self._sty.shape[0] - (m - 1)  # 1 when the oldest pair was dropped
        sty = np.empty((m, m))
        sts = np.empty((m, m))
        sty[: m - 1, : m - 1] = self._sty[off:, off:]
        sts[: m - 1, : m - 1] = self._sts[off:, off:]
        sty[: m - 1, -1] = cross_sy
        sty[-1, : m - 1] = cross_ys
        sts[: m - 1, -1] = sts[-1, : m - 1] = cross_ss
        sty[-1, -1] = s_new @ y_new
        sts[-1, -1] = s_new @ s_new
        self._sty, self._sts = sty, sts

    def _gram(self):
        if self._sty is None:
            S = np.stack(self.s, axis=1)
            self._sty = S.T @ np.stack(self.y, axis=1)
            self._sts = S.T @ S
        return self._sty, self._sts

    def compact(self):
        """(W, M, Minv) with B = theta*I - W M W'. Empty history gives
        zero-column W."""
        if self._compact is None:
            m = len(self.s)
            if m == 0:
                W = np.zeros((0, 0))
                M = np.zeros((0, 0))
                Minv = np.zeros((0, 0))
            else:
                S = np.stack(self.s, axis=1)  # n x m
                Y = np.stack(self.y, axis=1)
                W = np.concatenate([Y, self.theta * S], axis=1)  # n x 2m
                StY, StS = self._gram()
                D = np.diag(np.diag(StY))
                Lmat = np.tril(StY, k=-1)
                Minv = np.block([[-D, Lmat.T], [Lmat, self.theta * StS]])
                M = np.linalg.inv(Minv)
            self._compact = (W, M, Minv)
        return self._compact

    def w_row(self, i: int) -> np.ndarray:
        W, _, _ = self.compact()
        if W.shape[1] == 0:
            return np.zeros(0)
        return W[i]


def generalized_cauchy_point(x, g, model: LbfgsHistory, lower, upper):
    """First local minimizer of the quadratic model along the projected
    steepest-descent path.

    Returns (x_c, active_mask, c) where active_mask flags variables at a bound
    at x_c and c = W'(x_c - x) for reuse in the subspace step. Breakpoint ties
    are processed in ascending variable index.
    """
    n = x.size
    theta = model.theta
    W, M, _ = model.compact()
    has_w = W.shape[1] > 0

    t = np.full(n, np.inf)
    neg = g < 0
    pos = g > 0
    t[neg] = (x[neg] - upper[neg]) / g[neg]
    t[pos] = (x[pos] - lower[pos]) / g[pos]
    d = np.where(t > 0, -g, 0.0)

    x_c = x.copy()
    # variables blocked immediately (at a bound, gradient pushing outward)
    blocked0 = t <= 0
    x_c[blocked0 & neg] = upper[blocked0 & neg]
    x_c[blocked0 & pos] = lower[blocked0 & pos]

    c = np.zeros(W.shape[1])
    if not np.any(d):
        active = (x_c <= lower) | (x_c >= upper)
        return x_c, active, c

    p = W.T @ d if has_w else c
    f1 = float(g @ d)  # = -d'd
    f2 = -theta * f1 - (float(p @ M @ p) if has_w else 0.0)
    f2 = max(f2, 1e-30)
    dt_min = -f1 / f2
    t_old = 0.0

    order = np.argsort(t, kind="stable")
    for b in order:
        tb = t[b]
        if not np.isfinite(tb):
            break
        if tb <= 0:
            continue
        dt = tb - t_old
        if dt_min < dt:
            break
        # variable b reaches its bound at tb
        gb = g[b]
        xb_bound = upper[b] if d[b] > 0 else lower[b]
        zb = xb_bound - x[b]
        if has_w:
            c = c + dt * p
            wb = W[b]
            Mc = M @ c
            Mp = M @ p
            Mw = M @ wb
            f1 += dt * f2 + gb * gb + theta * gb * zb - gb * float(wb @ Mc)
            f2 += -theta * gb * gb - 2.0 * gb * float(wb @ Mp) - gb * gb * float(wb @ Mw)
            p = p + gb * wb
        else:
            f1 += dt * f2 + gb * gb + theta * gb * zb
            f2 += -theta * gb * gb
        f2 = max(f2, 1e-30)
        x_c[b] = xb_bound
        d[b] = 0.0
        t_old = tb
        dt_min = -f1 / f2

    dt_min = max(dt_min, 0.0)
    t_star = t_old + dt_min
    free = d != 0.0
    x_c[free] = x[free] + t_star * d[free]
    if has_w:
        c = c + dt_min * p
    active = (x_c <= lower) | (x_c >= upper)
    return x_c, active, c


def subspace_minimize(x, g, x_c, c, active, model: LbfgsHistory, lower, upper):
    """Minimize the quadratic model over the variables free at the Cauchy
    point, with active variables fixed, then truncate the step into the box.

    Falls back to the Cauchy point on curvature breakdown.
    """
    free = ~active
    if not np.any(free):
        return x_c.copy()
    theta = model.theta
    W, _, Minv = model.compact()
    has_w = W.shape[1] > 0

    # reduced gradient of the model at x_c
    r = g + theta * (x_c - x)
    if has_w:
        _, M, _ = model.compact()
        r = r - W @ (M @ c)
    rf = r[free]

    if has_w:
        U = W[free]
        K = Minv - (U.T @ U) / theta
        try:
            z = np.linalg.solve(K, U.T @ rf)
        except np.linalg.LinAlgError:
            return x_c.copy()
        df = -(rf / theta) - (U @ z) / (theta * theta)
        if not np.all(np.isfinite(df)):
            return x_c.copy()
    else:
        df = -rf / theta

    # largest alpha in (0, 1] keeping x_c + alpha*d inside the box
    lo = lower[free]
    hi = upper[free]
    xc_f = x_c[free]
    alpha = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(df > 0, (hi - xc_f) / df, np.inf)
        dn = np.where(df < 0, (lo - xc_f) / df, np.inf)
    alpha = min(1.0, float(np.min(np.minimum(up, dn), initial=np.inf)))
    alpha = max(alpha, 0.0)

    x_bar = x_c.copy()
    x_bar[free] = np.clip(xc_f + alpha * df, lo, hi)
    return x_bar


def wolfe_line_search(phi, phi0, dphi0, alpha_max, c1=1e-4, c2=0.9, max_evals=20,
                      refine_step=True):
    """Strong Wolfe search on phi(alpha) -> (value, derivative, payload).

    Requires dphi0 < 0. Returns (alpha, value, payload). If alpha_max is hit
    while the objective is still decreasing there, the cap is returned.
    """
    if dphi0 >= 0:
        raise ValueError(f"direction is not a descent direction (dphi0={dphi0:.3e})")
    evals = 0

    def ev(a):
        nonlocal evals
        evals += 1
        return phi(a)

    def zoom(a_lo, f_lo, d_lo, a_hi, f_hi):
        best = (a_lo, f_lo, None)
        while evals < max_evals:
            # quadratic interpolation with bisection safeguard
            denom = 2.0 * (f_hi - f_lo - d_lo * (a_hi - a_lo))
            if abs(denom) > 1e-300:
                a = a_lo - d_lo * (a_hi - a_lo) ** 2 / denom
            else:
                a = 0.5 * (a_lo + a_hi)
            span = abs(a_hi - a_lo)
            if not (min(a_lo, a_hi) + 0.1 * span <= a <= max(a_lo, a_hi) - 0.1 * span):
                a = 0.5 * (a_lo + a_hi)
            f, df, payload = ev(a)
            if f > phi0 + c1 * a * dphi0 or f >= f_lo:
                a_hi, f_hi = a, f
            else:
                if abs(df) <= -c2 * dphi0:
                    return a, f, payload
                if df * (a_hi - a_lo) >= 0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, d_lo = a, f, df
                best = (a, f, payload)
            if span < 1e-14:
                break
        if best[2] is not None and best[1] < phi0:
            return best
        raise LineSearchFailure("zoom evaluation cap exhausted")

    def refine(a, f, df, a_from, d_from, payload):
        # one secant step toward the 1D minimizer; exact when phi is quadratic.
        # Keeps quasi-Newton steps close to exact line searches, which gives
        # finite termination on quadratic objectives.
        if not refine_step or evals >= max_evals or df == d_from or abs(df) <= 1e-2 * abs(dphi0):
            return a, f, payload
        a_hat = a - df * (a - a_from) / (df - d_from)
        if not np.isfinite(a_hat) or a_hat <= 0 or a_hat > alpha_max:
            return a, f, payload
        f_hat, d_hat, payload_hat = ev(a_hat)
        if (
            f_hat <= f
            and f_hat <= phi0 + c1 * a_hat * dphi0
            and abs(d_hat) <= -c2 * dphi0
        ):
            return a_hat, f_hat, payload_hat
        return a, f, payload

    a_prev, f_prev, d_prev = 0.0, phi0, dphi0
    a = min(1.0, alpha_max)
    first = True
    while evals < max_evals:
        f, df, payload = ev(a)
        if f > phi0 + c1 * a * dphi0 or (not first and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, a, f)
        if abs(df) <= -c2 * dphi0:
            return refine(a, f, df, a_prev, d_prev, payload)
        if df >= 0:
            return zoom(a, f, df, a_prev, f_prev)
        if a >= alpha_max:
            if f < phi0:
                return a, f, payload  # feasibility cap, still decreasing
            raise LineSearchFailure("no decrease at the feasible cap")
        a_prev, f_prev, d_prev = a, f, df
        a = min(2.0 * a, alpha_max)
        first = False
    raise LineSearchFailure("line-search evaluation cap exhausted")


def projected_gradient(x, g, lower, upper):
    return x - np.clip(x - g, lower, upper)


def minimize(problem: BoxProblem, x0, options: SolverOptions | None = None) -> SolverResult:
    """Run the bound-constrained quasi-Newton iteration from x0 (clamped into
    the box before the first evaluation)."""
    opts = options or SolverOptions()
    lower, upper = problem.lower, problem.upper
    n = problem.dimension
    evals = 0

    def evaluate(x):
        nonlocal evals
        evals += 1
        f, g = problem.fun(x)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            bad = "objective" if not np.isfinite(f) else f"gradient[{int(np.argmax(~np.isfinite(g)))}]"
            raise NonFiniteObjective(f"non-finite {bad} at feasible point")
        return float(f), np.asarray(g, dtype=float)

    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    f, g = evaluate(x)
    hist = LbfgsHistory(opts.history_size)

    reason = "max-iter"
    it = 0
    for it in range(opts.max_iterations):
        pg = projected_gradient(x, g, lower, upper)
        pg_norm = float(np.max(np.abs(pg), initial=0.0))
        if pg_norm <= opts.gradient_tolerance * max(1.0, float(np.max(np.abs(x), initial=0.0))):
            reason = "converged"
            break

        x_c, active, c = generalized_cauchy_point(x, g, hist, lower, upper)
        x_bar = subspace_minimize(x, g, x_c, c, active, hist, lower, upper)
        d = x_bar - x
        if float(g @ d) >= 0 or not np.any(d):
            d = x_c - x  # guaranteed descent along the projected path
            if float(g @ d) >= 0 or not np.any(d):
                reason = "converged" if pg_norm <= 10 * opts.gradient_tolerance else "line-search-failure"
                break

        # largest feasible step along d (>= 1 since x_bar is feasible)
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.where(d > 0, (upper - x) / d, np.inf)
            dn = np.where(d < 0, (lower - x) / d, np.inf)
        alpha_max = float(np.min(np.minimum(up, dn), initial=np.inf))
        alpha_max = max(alpha_max, 1.0)

        def phi(a):
            xt = np.clip(x + a * d, lower, upper)
            ft, gt = evaluate(xt)
            return ft, float(gt @ d), (xt, ft, gt)

        try:
            _, _, payload = wolfe_line_search(
                phi, f, float(g @ d), alpha_max,
                c1=opts.wolfe_c1, c2=opts.wolfe_c2, max_evals=opts.max_line_search_evals,
                refine_step=opts.line_search_refine,
            )
        except LineSearchFailure:
            reason = "line-search-failure"
            break

        x_new, f_new, g_new = payload
        hist.update(x_new - x, g_new - g)
        if abs(f - f_new) < opts.objective_change_floor * max(1.0, abs(f)):
            x, f, g = x_new, f_new, g_new
            it += 1
            reason = "converged"
            break
        x, f, g = x_new, f_new, g_new
    else:
        it = opts.max_iterations

    pg_norm = float(np.max(np.abs(projected_gradient(x, g, lower, upper)), initial=0.0))
    return SolverResult(x=x, fval=f, projected_gradient_norm=pg_norm,
                        iterations=it, evaluations=evals, reason=reason)
