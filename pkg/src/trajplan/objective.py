"""Penalty-form trajectory objective and its exact analytic gradient.

Variables are packed as per-state blocks [x, y, theta, v, a, omega] for
k = 0..n followed by the n time intervals [t_0..t_{n-1}].

Angle equality everywhere uses the (sin, cos) residual pair, which removes
the wraparound discontinuity at +/-pi.
"""

from __future__ import annotations

import numpy as np

from .config import PlannerConfig
from .corridor import Corridor
from .trajectory import Trajectory

STATE_BLOCK = 6  # x, y, theta, v, a, omega


def angle_residual(a, b):
    """(sin a - sin b, cos a - cos b); both zero iff the angles are equal
    modulo 2*pi."""
    return np.sin(a) - np.sin(b), np.cos(a) - np.cos(b)


def transition(s, c, c_next, t):
    """Propagate state [x, y, theta, v] over one interval with trapezoidal
    averaging of the velocity components, acceleration and angular velocity."""
    if t <= 0:
        raise ValueError(f"time interval must be positive, got {t}")
    x, y, theta, v = s
    a, omega = c
    a1, omega1 = c_next
    v1 = v + 0.5 * (a + a1) * t
    theta1 = theta + 0.5 * (omega + omega1) * t
    x1 = x + 0.5 * (v * np.cos(theta) + v1 * np.cos(theta1)) * t
    y1 = y + 0.5 * (v * np.sin(theta) + v1 * np.sin(theta1)) * t
    return np.array([x1, y1, theta1, v1])


def penalty_L(x, x_j):
    """Twice continuously differentiable one-sided penalty: 0 below zero,
    cubic up to the knee x_j, quadratic continuation beyond."""
    x = np.asarray(x, dtype=float)
    return np.where(
        x <= 0.0,
        0.0,
        np.where(x < x_j, x**3, 3.0 * x_j * x**2 - 3.0 * x_j**2 * x + x_j**3),
    )


def penalty_L_grad(x, x_j):
    x = np.asarray(x, dtype=float)
    return np.where(
        x <= 0.0,
        0.0,
        np.where(x < x_j, 3.0 * x**2, 6.0 * x_j * x - 3.0 * x_j**2),
    )


def pack(traj: Trajectory) -> np.ndarray:
    states = np.stack([traj.x, traj.y, traj.theta, traj.v, traj.a, traj.omega], axis=1)
    return np.concatenate([states.ravel(), traj.t])


def unpack(z: np.ndarray, n: int) -> Trajectory:
    n1 = n + 1
    states = z[: STATE_BLOCK * n1].reshape(n1, STATE_BLOCK)
    return Trajectory(states[:, 0], states[:, 1], states[:, 2],
                      states[:, 3], states[:, 4], states[:, 5], z[STATE_BLOCK * n1 :])


def packed_bounds(n: int, cfg: PlannerConfig) -> tuple[np.ndarray, np.ndarray]:
    """Box bounds: v, a and t bounded, x/y/theta/omega free."""
    n1 = n + 1
    lower = np.full(STATE_BLOCK * n1 + n, -np.inf)
    upper = np.full(STATE_BLOCK * n1 + n, np.inf)
    idx = np.arange(n1) * STATE_BLOCK
    lower[idx + 3], upper[idx + 3] = cfg.v_min, cfg.v_max
    lower[idx + 4], upper[idx + 4] = cfg.a_min, cfg.a_max
    lower[STATE_BLOCK * n1 :], upper[STATE_BLOCK * n1 :] = cfg.t_min, cfg.t_max
    return lower, upper


def objective_smoothness_time(traj: Trajectory, delta_t: float) -> float:
    """Integral of squared jerk and squared angular acceleration plus the
    weighted total duration."""
    da = np.diff(traj.a)
    dw = np.diff(traj.omega)
    return float(np.sum(da**2 / traj.t + dw**2 / traj.t + delta_t * traj.t))


def equality_penalty(traj: Trajectory, start, goal) -> float:
    """Quadratic penalty on the transition residuals and endpoint matching."""
    return _equality_terms(traj, np.asarray(start, float), np.asarray(goal, float))[0]


def _equality_terms(traj, start, goal):
    X, Y, TH, V, A, W, T = traj.x, traj.y, traj.theta, traj.v, traj.a, traj.omega, traj.t
    ct, st = np.cos(TH), np.sin(TH)
    ex = X[1:] - X[:-1] - 0.5 * T * (V[:-1] * ct[:-1] + V[1:] * ct[1:])
    ey = Y[1:] - Y[:-1] - 0.5 * T * (V[:-1] * st[:-1] + V[1:] * st[1:])
    ev = V[1:] - V[:-1] - 0.5 * T * (A[:-1] + A[1:])
    phi = TH[:-1] + 0.5 * T * (W[:-1] + W[1:])
    es = st[1:] - np.sin(phi)
    ec = ct[1:] - np.cos(phi)
    e0 = np.array([X[0] - start[0], Y[0] - start[1],
                   st[0] - np.sin(start[2]), ct[0] - np.cos(start[2]), V[0] - start[3]])
    en = np.array([X[-1] - goal[0], Y[-1] - goal[1],
                   st[-1] - np.sin(goal[2]), ct[-1] - np.cos(goal[2]), V[-1] - goal[3]])
    value = float(np.sum(ex**2 + ey**2 + ev**2 + es**2 + ec**2) + np.sum(e0**2) + np.sum(en**2))
    return value, (ex, ey, ev, es, ec, phi, e0, en)


def inequality_penalty(traj: Trajectory, corridor: Corridor, cfg: PlannerConfig) -> float:
    """Curvature, corridor-safety (both disc points, junction included) and
    gear-shift penalties."""
    val = cfg.delta_kappa * float(np.sum(penalty_L(traj.omega**2 - traj.v**2 * cfg.kappa_max**2, cfg.x_j)))
    val += cfg.delta_v * float(np.sum(penalty_L(-traj.v[:-1] * traj.v[1:], cfg.x_j)))
    val += cfg.delta_s * _safety_value(traj, corridor, cfg)
    return val


def _disc_points(traj, idx, cfg):
    bx = traj.x[idx]
    by = traj.y[idx]
    fx = bx + cfg.disc_offset * np.cos(traj.theta[idx])
    fy = by + cfg.disc_offset * np.sin(traj.theta[idx])
    return bx, by, fx, fy


def _safety_value(traj, corridor, cfg):
    margin = cfg.safety_margin
    total = 0.0
    for i, states in enumerate(corridor.assignment):
        idx = np.asarray(states)
        poly = corridor.polygons[i]
        bx, by, fx, fy = _disc_points(traj, idx, cfg)
        for px, py in ((bx, by), (fx, fy)):
            res = px[:, None] * poly.A[:, 0] + py[:, None] * poly.A[:, 1] - (poly.b - margin)
            total += float(np.sum(penalty_L(res, cfg.x_j)))
        if i + 1 < len(corridor.polygons):
            nxt = corridor.polygons[i + 1]
            j = idx[-1]
            jbx, jby, jfx, jfy = _disc_points(traj, np.array([j]), cfg)
            for px, py in ((jbx, jby), (jfx, jfy)):
                res = px[:, None] * nxt.A[:, 0] + py[:, None] * nxt.A[:, 1] - (nxt.b - margin)
                total += float(np.sum(penalty_L(res, cfg.x_j)))
    return total


class PenaltyObjective:
    """Callable packed-vector objective J = lo*Jo + leq*Jeq + lie*Jie with its
    analytic gradient."""

    def __init__(self, corridor: Corridor, cfg: PlannerConfig, start, goal,
                 lambda_eq: float | None = None, lambda_ie: float | None = None):
        self.corridor = corridor
        self.cfg = cfg
        self.start = np.asarray(start, dtype=float)
        self.goal = np.asarray(goal, dtype=float)
        self.n = corridor.n_states - 1
        self.lambda_eq = cfg.lambda_eq if lambda_eq is None else lambda_eq
        self.lambda_ie = cfg.lambda_ie if lambda_ie is None else lambda_ie
        self._build_safety_tables()

    def _build_safety_tables(self):
        """Stack every (polygon, state) half-space block, junction rows
        included, into padded arrays so the safety term evaluates in a
        handful of vectorized operations."""
        pairs = []  # (state index, A, b)
        for i, states in enumerate(self.corridor.assignment):
            poly = self.corridor.polygons[i]
            for j in states:
                pairs.append((j, poly.A, poly.b))
            if i + 1 < len(self.corridor.polygons):
                nxt = self.corridor.polygons[i + 1]
                pairs.append((states[-1], nxt.A, nxt.b))
        mmax = max(p[1].shape[0] for p in pairs)
        K = len(pairs)
        self._sel = np.array([p[0] for p in pairs])
        self._A0 = np.zeros((K, mmax))
        self._A1 = np.zeros((K, mmax))
        # padding rows use A = 0, b = 1 so their residual is always inactive
        self._B = np.ones((K, mmax))
        for r, (_, A, b) in enumerate(pairs):
            m = A.shape[0]
            self._A0[r, :m] = A[:, 0]
            self._A1[r, :m] = A[:, 1]
            # half-spaces tightened by the safety margin so the penalty
            # equilibrates strictly inside the true corridor
            self._B[r, :m] = b - self.cfg.safety_margin

    @property
    def dimension(self) -> int:
        return STATE_BLOCK * (self.n + 1) + self.n

    def __call__(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        cfg = self.cfg
        n = self.n
        traj = unpack(z, n)
        X, Y, TH, V, A, W, T = traj.x, traj.y, traj.theta, traj.v, traj.a, traj.omega, traj.t
        ct, st = np.cos(TH), np.sin(TH)

        gX = np.zeros(n + 1)
        gY = np.zeros(n + 1)
        gTH = np.zeros(n + 1)
        gV = np.zeros(n + 1)
        gA = np.zeros(n + 1)
        gW = np.zeros(n + 1)
        gT = np.zeros(n)

        # smoothness + time
        da = np.diff(A)
        dw = np.diff(W)
        J_o = float(np.sum(da**2 / T + dw**2 / T + cfg.delta_t * T))
        lo = cfg.lambda_o
        gA[:-1] += lo * (-2.0 * da / T)
        gA[1:] += lo * (2.0 * da / T)
        gW[:-1] += lo * (-2.0 * dw / T)
        gW[1:] += lo * (2.0 * dw / T)
        gT += lo * (-(da**2 + dw**2) / T**2 + cfg.delta_t)

        # equality penalties
        J_eq, (ex, ey, ev, es, ec, phi, e0, en) = _equality_terms(traj, self.start, self.goal)
        leq = self.lambda_eq
        cphi, sphi = np.cos(phi), np.sin(phi)
        gphi = -2.0 * es * cphi + 2.0 * ec * sphi  # d(es^2+ec^2)/dphi

        gX[:-1] += leq * (-2.0 * ex)
        gX[1:] += leq * (2.0 * ex)
        gY[:-1] += leq * (-2.0 * ey)
        gY[1:] += leq * (2.0 * ey)
        gTH[:-1] += leq * (
            2.0 * ex * (0.5 * T * V[:-1] * st[:-1])
            + 2.0 * ey * (-0.5 * T * V[:-1] * ct[:-1])
            + gphi
        )
        gTH[1:] += leq * (
            2.0 * ex * (0.5 * T * V[1:] * st[1:])
            + 2.0 * ey * (-0.5 * T * V[1:] * ct[1:])
            + 2.0 * es * ct[1:]
            - 2.0 * ec * st[1:]
        )
        gV[:-1] += leq * (2.0 * ex * (-0.5 * T * ct[:-1]) + 2.0 * ey * (-0.5 * T * st[:-1]) - 2.0 * ev)
        gV[1:] += leq * (2.0 * ex * (-0.5 * T * ct[1:]) + 2.0 * ey * (-0.5 * T * st[1:]) + 2.0 * ev)
        gA[:-1] += leq * (-ev * T)
        gA[1:] += leq * (-ev * T)
        gW[:-1] += leq * (gphi * 0.5 * T)
        gW[1:] += leq * (gphi * 0.5 * T)
        gT += leq * (
            2.0 * ex * (-0.5 * (V[:-1] * ct[:-1] + V[1:] * ct[1:]))
            + 2.0 * ey * (-0.5 * (V[:-1] * st[:-1] + V[1:] * st[1:]))
            + 2.0 * ev * (-0.5 * (A[:-1] + A[1:]))
            + gphi * 0.5 * (W[:-1] + W[1:])
        )
        # endpoint terms
        gX[0] += leq * 2.0 * e0[0]
        gY[0] += leq * 2.0 * e0[1]
        gTH[0] += leq * (2.0 * e0[2] * ct[0] - 2.0 * e0[3] * st[0])
        gV[0] += leq * 2.0 * e0[4]
        gX[-1] += leq * 2.0 * en[0]
        gY[-1] += leq * 2.0 * en[1]
        gTH[-1] += leq * (2.0 * en[2] * ct[-1] - 2.0 * en[3] * st[-1])
        gV[-1] += leq * 2.0 * en[4]

        # inequality penalties
        lie = self.lambda_ie
        xj = cfg.x_j
        # curvature
        u = W**2 - V**2 * cfg.kappa_max**2
        J_ie = cfg.delta_kappa * float(np.sum(penalty_L(u, xj)))
        lk = lie * cfg.delta_kappa * penalty_L_grad(u, xj)
        gW += lk * 2.0 * W
        gV += lk * (-2.0 * V * cfg.kappa_max**2)
        # gear shifting
        q = -V[:-1] * V[1:]
        J_ie += cfg.delta_v * float(np.sum(penalty_L(q, xj)))
        lq = lie * cfg.delta_v * penalty_L_grad(q, xj)
        gV[:-1] += lq * (-V[1:])
        gV[1:] += lq * (-V[:-1])
        # corridor safety, both disc points, junction rows included
        ls = lie * cfg.delta_s
        Loff = cfg.disc_offset
        sel = self._sel
        px = X[sel]
        py = Y[sel]
        cs = ct[sel]
        sn = st[sel]
        res_b = px[:, None] * self._A0 + py[:, None] * self._A1 - self._B
        res_f = res_b + Loff * (cs[:, None] * self._A0 + sn[:, None] * self._A1)
        res = np.concatenate([res_b, res_f])
        # inline penalty_L / penalty_L_grad on the stacked residual matrix
        pos = res > 0.0
        rp = np.where(pos, res, 0.0)
        cubic = rp < xj
        J_ie += cfg.delta_s * float(
            np.sum(np.where(cubic, rp**3, 3.0 * xj * rp**2 - 3.0 * xj**2 * rp + xj**3))
        )
        lp = np.where(pos, np.where(cubic, 3.0 * rp**2, 6.0 * xj * rp - 3.0 * xj**2), 0.0)
        K = sel.size
        lp_b, lp_f = lp[:K], lp[K:]
        lpa0_b = np.einsum("km,km->k", lp_b, self._A0)
        lpa1_b = np.einsum("km,km->k", lp_b, self._A1)
        lpa0_f = np.einsum("km,km->k", lp_f, self._A0)
        lpa1_f = np.einsum("km,km->k", lp_f, self._A1)
        gX += ls * np.bincount(sel, weights=lpa0_b + lpa0_f, minlength=n + 1)
        gY += ls * np.bincount(sel, weights=lpa1_b + lpa1_f, minlength=n + 1)
        gTH += ls * Loff * np.bincount(
            sel, weights=-sn * lpa0_f + cs * lpa1_f, minlength=n + 1)

        J = lo * J_o + leq * J_eq + lie * J_ie
        grad = np.concatenate([np.stack([gX, gY, gTH, gV, gA, gW], axis=1).ravel(), gT])
        if not np.isfinite(J) or not np.all(np.isfinite(grad)):
            bad = int(np.argmax(~np.isfinite(grad))) if np.all(np.isfinite([J])) else -1
            raise FloatingPointError(f"non-finite objective/gradient (variable {bad})")
        return J, grad


def full_objective_and_gradient(z, corridor, cfg, start, goal):
    """Functional wrapper over PenaltyObjective for one-off evaluations."""
    return PenaltyObjective(corridor, cfg, start, goal)(z)
