"""Penalty objective pieces: residuals, penalty function, smoothness term,
packing, bounds, and the analytic gradient against finite differences."""

import numpy as np
import pytest

from trajplan import (
    Corridor,
    HPolygon,
    PenaltyObjective,
    PlannerConfig,
    Trajectory,
    angle_residual,
    equality_penalty,
    full_objective_and_gradient,
    inequality_penalty,
    objective_smoothness_time,
    pack,
    penalty_L,
    penalty_L_grad,
    transition,
    unpack,
)
from trajplan.objective import STATE_BLOCK, packed_bounds

from conftest import chain_corridor, fd_gradient, random_feasible_points


def big_box_corridor(n1, xmin=-50.0, xmax=50.0):
    poly = HPolygon.from_rect(xmin, -50.0, xmax, 50.0)
    return Corridor([poly], [list(range(n1))])


def rolled_trajectory(n=6, v=1.0, dt=0.8):
    """Zero-residual straight trajectory: constant v, zero controls, states
    produced by rolling transition() forward."""
    states = [np.array([0.0, 0.0, 0.0, v])]
    for _ in range(n):
        states.append(transition(states[-1], (0.0, 0.0), (0.0, 0.0), dt))
    arr = np.stack(states)
    zeros = np.zeros(n + 1)
    return Trajectory(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3],
                      zeros, zeros, np.full(n, dt))


class TestAngleResidual:
    def test_wraparound_seam(self):
        s, c = angle_residual(np.pi, -np.pi)
        assert s == pytest.approx(0.0, abs=1e-15)
        assert c == pytest.approx(0.0, abs=1e-15)

    def test_identity(self):
        assert angle_residual(1.3, 1.3) == (0.0, 0.0)

    def test_quarter_turn(self):
        s, c = angle_residual(0.0, np.pi / 2)
        assert s == pytest.approx(-1.0)
        assert c == pytest.approx(1.0)


class TestTransition:
    def test_constant_straight(self):
        out = transition((0.0, 0.0, 0.0, 1.0), (0.0, 0.0), (0.0, 0.0), 2.0)
        assert out == pytest.approx([2.0, 0.0, 0.0, 1.0])

    def test_velocity_trapezoid(self):
        out = transition((0.0, 0.0, 0.0, 1.0), (0.0, 0.0), (1.0, 0.0), 1.0)
        assert out[3] == pytest.approx(1.5)

    def test_heading_trapezoid(self):
        out = transition((0.0, 0.0, 0.0, 0.0), (0.0, 0.0), (0.0, np.pi), 1.0)
        assert out[2] == pytest.approx(np.pi / 2)

    def test_non_positive_interval_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            transition((0, 0, 0, 0), (0, 0), (0, 0), 0.0)


class TestPenaltyL:
    def test_inactive(self):
        assert penalty_L(-0.5, 1.0) == 0.0
        assert penalty_L_grad(-0.5, 1.0) == 0.0

    def test_cubic_branch(self):
        assert penalty_L(0.5, 1.0) == pytest.approx(0.125)
        assert penalty_L_grad(0.5, 1.0) == pytest.approx(0.75)

    def test_quadratic_branch(self):
        assert penalty_L(2.0, 1.0) == pytest.approx(7.0)  # 3*4 - 3*2 + 1
        assert penalty_L_grad(2.0, 1.0) == pytest.approx(9.0)

    def test_c2_continuity_at_knee(self):
        xj = 0.3
        eps = 1e-9
        assert penalty_L(xj - eps, xj) == pytest.approx(penalty_L(xj + eps, xj), abs=1e-8)
        assert penalty_L_grad(xj - eps, xj) == pytest.approx(
            penalty_L_grad(xj + eps, xj), abs=1e-7)

    def test_gradient_matches_fd(self):
        xs = np.array([-0.2, 0.05, 0.5, 0.99, 1.01, 3.0])
        h = 1e-7
        fd = (penalty_L(xs + h, 1.0) - penalty_L(xs - h, 1.0)) / (2 * h)
        assert penalty_L_grad(xs, 1.0) == pytest.approx(fd, abs=1e-5)


class TestSmoothnessTime:
    def test_only_time_term(self):
        n = 5
        traj = Trajectory(np.zeros(n + 1), np.zeros(n + 1), np.zeros(n + 1),
                          np.zeros(n + 1), np.full(n + 1, 0.7),
                          np.full(n + 1, -0.2), np.ones(n))
        assert objective_smoothness_time(traj, 1.0) == pytest.approx(5.0)

    def test_acceleration_ramp(self):
        traj = Trajectory([0, 0], [0, 0], [0, 0], [0, 0], [0.0, 1.0], [0, 0], [2.0])
        assert objective_smoothness_time(traj, 0.0) == pytest.approx(0.5)

    def test_zero_controls(self):
        traj = Trajectory([0, 1], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1.0])
        assert objective_smoothness_time(traj, 0.0) == 0.0


class TestEqualityPenalty:
    def test_rolled_forward_is_zero(self):
        traj = rolled_trajectory()
        start = [0.0, 0.0, 0.0, 1.0]
        goal = [traj.x[-1], traj.y[-1], 0.0, 1.0]
        assert equality_penalty(traj, start, goal) == pytest.approx(0.0, abs=1e-24)

    def test_wraparound_endpoint(self):
        # theta_n = pi against a goal heading of -pi is exact, not a 2*pi error
        n = 4
        theta = np.full(n + 1, np.pi)
        traj = Trajectory(np.cos(np.pi) * np.arange(n + 1) * 0.5, np.zeros(n + 1),
                          theta, np.full(n + 1, 1.0) * -1.0 + 0.0,
                          np.zeros(n + 1), np.zeros(n + 1), np.full(n, 0.5))
        # rebuild exactly with transition to zero the interior residuals
        traj = rolled_trajectory(n=n)
        traj.theta[:] = np.pi
        traj.x[:] = -np.arange(n + 1) * 0.8  # v=1 along theta=pi
        start = [0.0, 0.0, np.pi, 1.0]
        goal = [traj.x[-1], 0.0, -np.pi, 1.0]
        assert equality_penalty(traj, start, goal) == pytest.approx(0.0, abs=1e-24)

    def test_perturbation_quadratic_increase(self):
        traj = rolled_trajectory()
        start = [0.0, 0.0, 0.0, 1.0]
        goal = [traj.x[-1], traj.y[-1], 0.0, 1.0]
        eps = 1e-3
        traj.x[3] += eps
        # the perturbed x enters the two adjacent transition residuals
        assert equality_penalty(traj, start, goal) == pytest.approx(2 * eps**2)


class TestInequalityPenalty:
    def test_all_inactive(self):
        cfg = PlannerConfig()
        traj = rolled_trajectory(n=3)
        cor = big_box_corridor(4)
        assert inequality_penalty(traj, cor, cfg) == 0.0

    def test_gear_shift_term(self):
        cfg = PlannerConfig(x_j=1.0, delta_v=2.5)
        traj = Trajectory([0, 1], [0, 0], [0, 0], [1.0, -1.0],
                          [0, 0], [0, 0], [1.0])
        cor = big_box_corridor(2)
        # -v0*v1 = 1 -> delta_v * L(1) = delta_v
        assert inequality_penalty(traj, cor, cfg) == pytest.approx(2.5)

    def test_curvature_term(self):
        cfg = PlannerConfig(kappa_max=1.0, x_j=10.0, delta_kappa=0.5)
        traj = Trajectory([0, 1], [0, 0], [0, 0], [1.0, 1.0],
                          [0, 0], [2.0, 0.0], [1.0])
        cor = big_box_corridor(2)
        # omega^2 - v^2*kappa^2 = 3 at state 0 (cubic branch), inactive at 1
        assert inequality_penalty(traj, cor, cfg) == pytest.approx(0.5 * 27.0)

    def test_safety_term_uses_both_discs(self):
        cfg = PlannerConfig()
        # rear disc well inside, front disc pushed past the right face
        poly = HPolygon.from_rect(0.0, 0.0, 2.0, 2.0)
        cor = Corridor([poly], [[0, 1]])
        traj = Trajectory([1.5, 1.5], [1.0, 1.0], [0.0, 0.0], [0, 0],
                          [0, 0], [0, 0], [1.0])
        val = inequality_penalty(traj, cor, cfg)
        # front disc at x = 2.3 violates by 0.3 (+margin) for both states
        expect = cfg.delta_s * 2 * penalty_L(0.3 + cfg.safety_margin, cfg.x_j)
        assert val == pytest.approx(expect)

    def test_junction_state_checked_against_next_polygon(self):
        cfg = PlannerConfig()
        pa = HPolygon.from_rect(0.0, 0.0, 3.0, 2.0)
        pb = HPolygon.from_rect(2.5, 0.0, 6.0, 2.0)
        cor = Corridor([pa, pb], [[0], [1]])
        # state 0 inside polygon A but left of polygon B's xmin
        traj = Trajectory([1.0, 4.0], [1.0, 1.0], [np.pi / 2, np.pi / 2],
                         [0, 0], [0, 0], [0, 0], [1.0])
        val = inequality_penalty(traj, cor, cfg)
        # junction row: rear and front discs of state 0 violate pb by 1.5
        expect = cfg.delta_s * 2 * penalty_L(1.5 + cfg.safety_margin, cfg.x_j)
        assert val == pytest.approx(expect)


class TestPacking:
    def test_roundtrip(self):
        rng = np.random.default_rng(0)
        n = 5
        traj = Trajectory(*(rng.normal(size=n + 1) for _ in range(6)),
                          rng.uniform(0.1, 1.0, n))
        z = pack(traj)
        assert z.size == STATE_BLOCK * (n + 1) + n
        back = unpack(z, n)
        for name in ("x", "y", "theta", "v", "a", "omega", "t"):
            assert np.array_equal(getattr(back, name), getattr(traj, name))

    def test_packed_bounds_layout(self):
        cfg = PlannerConfig()
        lower, upper = packed_bounds(2, cfg)
        assert lower.size == upper.size == STATE_BLOCK * 3 + 2
        for k in range(3):
            base = k * STATE_BLOCK
            assert np.isinf(lower[base]) and np.isinf(upper[base])          # x
            assert np.isinf(lower[base + 2]) and np.isinf(upper[base + 2])  # theta
            assert lower[base + 3] == cfg.v_min and upper[base + 3] == cfg.v_max
            assert lower[base + 4] == cfg.a_min and upper[base + 4] == cfg.a_max
            assert np.isinf(lower[base + 5]) and np.isinf(upper[base + 5])  # omega
        assert np.all(lower[-2:] == cfg.t_min) and np.all(upper[-2:] == cfg.t_max)


class TestFullObjective:
    def test_time_gradient_is_lambda_delta_t(self):
        """At a zero-residual trajectory with constant controls and inactive
        inequalities, the gradient w.r.t. every t_i is exactly lambda_o *
        delta_t (the only surviving term)."""
        cfg = PlannerConfig(lambda_o=2.0, delta_t=3.0)
        traj = rolled_trajectory()
        cor = big_box_corridor(traj.n + 1)
        start = [0.0, 0.0, 0.0, 1.0]
        goal = [traj.x[-1], traj.y[-1], 0.0, 1.0]
        _, grad = full_objective_and_gradient(pack(traj), cor, cfg, start, goal)
        gT = grad[STATE_BLOCK * (traj.n + 1):]
        assert np.allclose(gT, cfg.lambda_o * cfg.delta_t, rtol=0, atol=1e-12)

    def test_zero_residual_value_is_smoothness_only(self):
        cfg = PlannerConfig()
        traj = rolled_trajectory()
        cor = big_box_corridor(traj.n + 1)
        start = [0.0, 0.0, 0.0, 1.0]
        goal = [traj.x[-1], traj.y[-1], 0.0, 1.0]
        val, _ = full_objective_and_gradient(pack(traj), cor, cfg, start, goal)
        assert val == pytest.approx(
            cfg.lambda_o * objective_smoothness_time(traj, cfg.delta_t))

    def test_two_pi_translation_invariance(self):
        cfg = PlannerConfig()
        n = 6
        rng = np.random.default_rng(5)
        cor = chain_corridor(n)
        start = np.array([2.0, 2.0, 0.3, 0.0])
        goal = np.array([30.0, 2.0, -0.4, 0.0])
        z = random_feasible_points(rng, n, cfg, 1)[0]
        v0, _ = full_objective_and_gradient(z, cor, cfg, start, goal)
        z2 = z.copy()
        idx = np.arange(n + 1) * STATE_BLOCK + 2
        z2[idx] += 2 * np.pi
        start2 = start + np.array([0, 0, 2 * np.pi, 0])
        goal2 = goal + np.array([0, 0, 2 * np.pi, 0])
        v1, _ = full_objective_and_gradient(z2, cor, cfg, start2, goal2)
        assert v1 == pytest.approx(v0, rel=1e-9)

    def test_gradient_matches_finite_differences(self):
        """Analytic gradient against central differences at 20 random
        feasible points on a small (n=8) chain-corridor problem."""
        cfg = PlannerConfig()
        n = 8
        cor = chain_corridor(n)
        obj = PenaltyObjective(cor, cfg, [2.0, 2.0, 0.0, 0.0], [30.0, 2.0, 0.0, 0.0])
        rng = np.random.default_rng(11)
        worst = 0.0
        for z in random_feasible_points(rng, n, cfg, 20):
            _, g = obj(z)
            g_fd = fd_gradient(obj, z)
            err = np.max(np.abs(g - g_fd)) / max(1.0, np.max(np.abs(g_fd)))
            worst = max(worst, err)
        assert worst < 1e-5

    def test_non_finite_input_raises(self):
        cfg = PlannerConfig()
        n = 3
        cor = big_box_corridor(n + 1)
        obj = PenaltyObjective(cor, cfg, [0, 0, 0, 0], [1, 0, 0, 0])
        z = np.ones(obj.dimension)
        z[0] = np.nan
        with pytest.raises(FloatingPointError):
            obj(z)
