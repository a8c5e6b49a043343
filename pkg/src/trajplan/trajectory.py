"""Discrete trajectory representation, dense resampling under the
constant-jerk / constant-angular-acceleration interval model, and the
velocity/acceleration/jerk metric table."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrajectoryPoint:
    x: float
    y: float
    theta: float
    v: float
    a: float
    omega: float
    t: float  # interval to the next point; 0.0 on the last point


class Trajectory:
    """n+1 discrete states with controls, plus n positive time intervals.

    Stored as parallel arrays; `points` materializes TrajectoryPoint views.
    """

    def __init__(self, x, y, theta, v, a, omega, t):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.theta = np.asarray(theta, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.omega = np.asarray(omega, dtype=float)
        self.t = np.asarray(t, dtype=float)
        n1 = self.x.size
        if n1 < 2:
            raise ValueError("a trajectory needs at least two states")
        for arr in (self.y, self.theta, self.v, self.a, self.omega):
            if arr.size != n1:
                raise ValueError("state arrays must share one length")
        if self.t.size != n1 - 1:
            raise ValueError(f"expected {n1 - 1} time intervals, got {self.t.size}")
        if np.any(self.t <= 0):
            raise ValueError("time intervals must be positive")

    @property
    def n(self) -> int:
        """Number of intervals."""
        return self.t.size

    @property
    def duration(self) -> float:
        return float(np.sum(self.t))

    @property
    def points(self) -> list[TrajectoryPoint]:
        tfull = np.concatenate([self.t, [0.0]])
        return [
            TrajectoryPoint(*vals)
            for vals in zip(self.x, self.y, self.theta, self.v, self.a, self.omega, tfull)
        ]

    def knot_times(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.t)])

    def copy(self) -> "Trajectory":
        return Trajectory(self.x.copy(), self.y.copy(), self.theta.copy(),
                          self.v.copy(), self.a.copy(), self.omega.copy(), self.t.copy())


@dataclass
class DenseTrajectory:
    """Dense samples: jerk is the per-interval constant value."""

    time: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    a: np.ndarray
    jerk: np.ndarray
    omega: np.ndarray


def sample_trajectory(traj: Trajectory, dt: float) -> DenseTrajectory:
    """Sample at step dt. Within interval i the jerk and angular acceleration
    are the constants (a_{i+1}-a_i)/t_i and (w_{i+1}-w_i)/t_i, so a, v, omega
    and theta have closed forms in the interval-local time tau; x and y are
    integrated numerically at substeps <= dt/4. Every knot is emitted."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    times, xs, ys, ths, vs, accs, jerks, oms = [], [], [], [], [], [], [], []
    t_start = 0.0
    for i in range(traj.n):
        ti = traj.t[i]
        jerk = (traj.a[i + 1] - traj.a[i]) / ti
        alpha = (traj.omega[i + 1] - traj.omega[i]) / ti
        # sample offsets within the interval, knot at tau=0 included
        taus = np.arange(0.0, ti, dt)
        # fine integration grid for x, y
        h = min(dt / 4.0, ti / 4.0)
        nfine = max(1, int(np.ceil(ti / h)))
        fine = np.linspace(0.0, ti, nfine + 1)
        vf = traj.v[i] + traj.a[i] * fine + 0.5 * jerk * fine**2
        thf = traj.theta[i] + traj.omega[i] * fine + 0.5 * alpha * fine**2
        dxf = vf * np.cos(thf)
        dyf = vf * np.sin(thf)
        cx = traj.x[i] + np.concatenate([[0.0], np.cumsum((dxf[1:] + dxf[:-1]) * 0.5 * np.diff(fine))])
        cy = traj.y[i] + np.concatenate([[0.0], np.cumsum((dyf[1:] + dyf[:-1]) * 0.5 * np.diff(fine))])
        for tau in taus:
            times.append(t_start + tau)
            vs.append(traj.v[i] + traj.a[i] * tau + 0.5 * jerk * tau**2)
            accs.append(traj.a[i] + jerk * tau)
            oms.append(traj.omega[i] + alpha * tau)
            ths.append(traj.theta[i] + traj.omega[i] * tau + 0.5 * alpha * tau**2)
            jerks.append(jerk)
            xs.append(float(np.interp(tau, fine, cx)))
            ys.append(float(np.interp(tau, fine, cy)))
        t_start += ti
    # final knot
    times.append(t_start)
    xs.append(float(traj.x[-1]))
    ys.append(float(traj.y[-1]))
    ths.append(float(traj.theta[-1]))
    vs.append(float(traj.v[-1]))
    accs.append(float(traj.a[-1]))
    oms.append(float(traj.omega[-1]))
    jerks.append(jerks[-1] if jerks else 0.0)
    return DenseTrajectory(*(np.asarray(arr) for arr in (times, xs, ys, ths, vs, accs, jerks, oms)))


def metrics(dense: DenseTrajectory) -> dict[str, float]:
    """Mean/max of |v|, |a|, |jerk| over dense samples."""
    if dense.time.size < 2:
        raise ValueError("need at least two samples")
    return {
        "v_mean": float(np.mean(np.abs(dense.v))),
        "v_max": float(np.max(np.abs(dense.v))),
        "a_mean": float(np.mean(np.abs(dense.a))),
        "a_max": float(np.max(np.abs(dense.a))),
        "jerk_mean": float(np.mean(np.abs(dense.jerk))),
        "jerk_max": float(np.max(np.abs(dense.jerk))),
    }
