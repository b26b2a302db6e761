import math

import numpy as np
import pytest

from moduliflow.flow import (
    AbortedRunError,
    FlowParams,
    MapState,
    StepRejectedError,
    TangentField,
    cfl_dt_max,
    chain_rule_residual,
    dissipation_rate,
    energy,
    jacobian_det,
    read_snapshot,
    run_flow,
    step,
    tension_field,
    write_snapshot,
)
from moduliflow.initial import build_initial_state
from moduliflow.mesh import DomainGrid
from moduliflow.testfunctions import AffineFunction, BumpFunction

TWO_PI = 2.0 * np.pi


def _constant_state(grid, u0=0.3, v0=1.7):
    return MapState(grid, grid.full(u0), grid.full(v0))


def _tension_oracle(state):
    """Plain-loop reimplementation of the discrete energy gradient.

    Deliberately index-by-index and roll-free so a vectorisation slip in the
    library cannot also hide here.
    """
    grid = state.grid
    n1, n2 = grid.shape
    u, v = state.u, state.v
    tau_u = np.zeros((n1, n2))
    tau_v = np.zeros((n1, n2))
    for i in range(n1):
        for j in range(n2):
            sig = lambda a, b: 1.0 / v[a % n1, b % n2] ** 2
            acc_u = acc_v = acc_s = 0.0
            for (di, dj, h) in ((1, 0, grid.h1), (0, 1, grid.h2)):
                ip, jp = (i + di) % n1, (j + dj) % n2
                im, jm = (i - di) % n1, (j - dj) % n2
                rho_f = 0.5 * (sig(i, j) + sig(ip, jp))
                rho_b = 0.5 * (sig(im, jm) + sig(i, j))
                du_f = (u[ip, jp] - u[i, j]) / h
                du_b = (u[i, j] - u[im, jm]) / h
                dv_f = (v[ip, jp] - v[i, j]) / h
                dv_b = (v[i, j] - v[im, jm]) / h
                acc_u += (rho_f * du_f - rho_b * du_b) / h
                acc_v += (rho_f * dv_f - rho_b * dv_b) / h
                acc_s += du_f**2 + dv_f**2 + du_b**2 + dv_b**2
            tau_u[i, j] = v[i, j] ** 2 * acc_u
            tau_v[i, j] = v[i, j] ** 2 * acc_v + acc_s / (2.0 * v[i, j])
    return tau_u, tau_v


class TestMapState:
    def test_positivity_and_shape(self, grid64):
        with pytest.raises(ValueError):
            MapState(grid64, grid64.zeros(), grid64.zeros())
        with pytest.raises(ValueError):
            MapState(grid64, np.zeros((4, 4)), np.ones((4, 4)))

    def test_copy_is_deep(self, grid64):
        s = _constant_state(grid64)
        c = s.copy()
        c.u[0, 0] = 99.0
        assert s.u[0, 0] == 0.3


class TestTensionField:
    def test_constant_map_is_stationary(self, grid64):
        tau = tension_field(_constant_state(grid64))
        assert np.all(tau.tau_u == 0.0) and np.all(tau.tau_v == 0.0)

    def test_flat_u_keeps_tau_u_zero(self):
        grid = DomainGrid(16, 16)
        v = 1.0 + 0.1 * np.sin(TWO_PI * grid.x2) * np.ones(grid.shape)
        tau = tension_field(MapState(grid, grid.zeros(), v))
        assert np.all(tau.tau_u == 0.0)
        assert float(np.abs(tau.tau_v).max()) > 0.1

    def test_matches_plain_loop_oracle(self, rng):
        grid = DomainGrid(8, 6)
        u = 0.2 * rng.standard_normal(grid.shape)
        v = np.exp(0.3 * rng.standard_normal(grid.shape))
        state = MapState(grid, u, v)
        tau = tension_field(state)
        ou, ov = _tension_oracle(state)
        scale = float(np.abs(ov).max())
        assert np.abs(tau.tau_u - ou).max() <= 1e-12 * scale
        assert np.abs(tau.tau_v - ov).max() <= 1e-12 * scale

    def test_continuum_limit_second_order(self):
        # tau_u = Lap u - (2/v) <Du, Dv>, tau_v = Lap v + (|Du|^2 - |Dv|^2)/v
        # for the smooth sinusoidal family; the discrete operator must
        # converge at O(h^2) to the analytic field.
        def analytic(grid):
            x1, x2 = grid.x1, grid.x2
            s1, c1 = np.sin(TWO_PI * x1), np.cos(TWO_PI * x1)
            s2, c2 = np.sin(TWO_PI * x2), np.cos(TWO_PI * x2)
            one = np.ones(grid.shape)
            u = 0.15 * s1 * c2 * one
            v = 1.0 + 0.1 * c1 * s2 * one
            ux = 0.15 * TWO_PI * c1 * c2
            uy = -0.15 * TWO_PI * s1 * s2
            vx = -0.1 * TWO_PI * s1 * s2
            vy = 0.1 * TWO_PI * c1 * c2
            lap_u = -2.0 * TWO_PI**2 * u
            lap_v = -2.0 * TWO_PI**2 * (v - 1.0)
            tau_u = lap_u - 2.0 / v * (ux * vx + uy * vy)
            tau_v = lap_v + (ux**2 + uy**2 - vx**2 - vy**2) / v
            return MapState(grid, u, v), tau_u * one, tau_v * one

        errs = []
        for n in (32, 64, 128):
            grid = DomainGrid(n, n)
            state, tu, tv = analytic(grid)
            tau = tension_field(state)
            errs.append(max(float(np.abs(tau.tau_u - tu).max()),
                            float(np.abs(tau.tau_v - tv).max())))
        assert 3.4 <= errs[0] / errs[1] <= 4.6
        assert 3.4 <= errs[1] / errs[2] <= 4.6


class TestEnergy:
    def test_constant_map(self, grid64):
        assert energy(_constant_state(grid64)) == 0.0

    def test_single_mode_closed_form(self):
        # u = eps sin(2 pi x1), v = 1: the staggered discretisation sums to
        # exactly eps^2 sin(pi h)^2 / h^2 (continuum limit pi^2 eps^2).
        eps = 1e-3
        for n in (32, 64):
            grid = DomainGrid(n, n)
            u = eps * np.sin(TWO_PI * grid.x1) * np.ones(grid.shape)
            e = energy(MapState(grid, u, grid.full(1.0)))
            exact = eps**2 * math.sin(math.pi * grid.h1) ** 2 / grid.h1**2
            assert abs(e - exact) <= 1e-12 * exact
            if n == 64:
                assert abs(e - math.pi**2 * eps**2) <= 1e-3 * math.pi**2 * eps**2

    def test_dilation_invariance(self, rng):
        # z -> 2z is a hyperbolic isometry; with the power-of-two factor the
        # discrete energy is reproduced bit for bit.
        grid = DomainGrid(16, 16)
        u = rng.standard_normal(grid.shape)
        v = np.exp(0.4 * rng.standard_normal(grid.shape))
        assert energy(MapState(grid, 2.0 * u, 2.0 * v)) == energy(MapState(grid, u, v))


class TestStep:
    def test_constant_map_unchanged(self, grid64):
        s = _constant_state(grid64)
        dt = cfl_dt_max(s)
        s2 = step(s, dt)
        assert np.array_equal(s2.u, s.u) and np.array_equal(s2.v, s.v)
        assert s2.t == dt

    def test_definition(self, rng):
        grid = DomainGrid(16, 16)
        u = 0.1 * rng.standard_normal(grid.shape)
        v = np.exp(0.2 * rng.standard_normal(grid.shape))
        s = MapState(grid, u, v)
        dt = cfl_dt_max(s, 0.5)
        tau = tension_field(s)
        s2 = step(s, dt)
        assert np.array_equal(s2.u, s.u + dt * tau.tau_u)
        assert np.array_equal(s2.v, s.v + dt * tau.tau_v)

    def test_dt_validation(self, grid64):
        s = _constant_state(grid64)
        with pytest.raises(ValueError):
            step(s, 0.0)
        with pytest.raises(ValueError):
            step(s, 10.0 * cfl_dt_max(s, 1.0))

    def test_rejects_target_escape(self, grid64):
        s = _constant_state(grid64, v0=1.0)
        dt = cfl_dt_max(s, 0.5)
        sink = TangentField(grid64.zeros(), grid64.full(-2.0 / dt))
        with pytest.raises(StepRejectedError):
            step(s, dt, sink)


class TestCfl:
    def test_small_v_sharpens_the_cap(self):
        grid = DomainGrid(10, 10)
        base = cfl_dt_max(_constant_state(grid, v0=1.0), 1.0)
        assert base == grid.h1**2 / 4.0
        assert cfl_dt_max(_constant_state(grid, v0=0.5), 1.0) == 0.25 * base

    def test_large_v_does_not_loosen_it(self):
        grid = DomainGrid(10, 10)
        assert cfl_dt_max(_constant_state(grid, v0=5.0), 1.0) == grid.h1**2 / 4.0

    def test_safety_validation(self, grid64):
        with pytest.raises(ValueError):
            cfl_dt_max(_constant_state(grid64), 0.0)
        with pytest.raises(ValueError):
            cfl_dt_max(_constant_state(grid64), 1.5)


class TestDissipation:
    def test_constant_map(self, grid64):
        assert dissipation_rate(_constant_state(grid64)) == 0.0

    def test_first_order_energy_balance(self):
        grid = DomainGrid(32, 32)
        state = build_initial_state(grid, {"kind": "sinusoidal"})
        d = dissipation_rate(state)
        mismatches = []
        for frac in (0.2, 0.1):
            dt = frac * cfl_dt_max(state, 1.0)
            drop = (energy(state) - energy(step(state, dt))) / dt
            mismatches.append(abs(drop - d))
        # Explicit Euler: the defect in dE/dt = -D is O(dt).
        assert 1.6 <= mismatches[0] / mismatches[1] <= 2.4

    def test_translation_invariance(self, rng):
        grid = DomainGrid(16, 16)
        u = 0.3 * rng.standard_normal(grid.shape)
        v = np.exp(0.2 * rng.standard_normal(grid.shape))
        d0 = dissipation_rate(MapState(grid, u, v))
        d1 = dissipation_rate(MapState(grid, u + 1.0, v))
        assert abs(d0 - d1) <= 1e-12 * d0


class TestRichardson:
    def test_halving_ratio(self):
        grid = DomainGrid(32, 32)
        state = build_initial_state(grid, {"kind": "sinusoidal"})

        def gap(dt):
            full = step(state, dt)
            half = step(step(state, 0.5 * dt), 0.5 * dt)
            return max(float(np.abs(full.u - half.u).max()),
                       float(np.abs(full.v - half.v).max()))

        dt = 0.5 * cfl_dt_max(state, 1.0)
        assert 3.5 <= gap(dt) / gap(0.5 * dt) <= 4.5

    def test_two_half_steps_beat_one_full_step(self):
        grid = DomainGrid(32, 32)
        state = build_initial_state(grid, {"kind": "sinusoidal"})
        dt = 0.5 * cfl_dt_max(state, 1.0)
        ref = state
        for _ in range(16):
            ref = step(ref, dt / 16.0)
        full = step(state, dt)
        half = step(step(state, 0.5 * dt), 0.5 * dt)
        err_full = float(np.abs(full.v - ref.v).max())
        err_half = float(np.abs(half.v - ref.v).max())
        assert err_half < err_full


class TestRunFlow:
    def test_constant_map_runs_to_final_time(self, grid64):
        traj = run_flow(_constant_state(grid64), FlowParams(t_final=1.0))
        assert traj.times[-1] == 1.0
        assert np.all(traj.energy == 0.0) and np.all(traj.dissipation == 0.0)
        assert traj.termination == "stalled"
        assert traj.accepted_steps == 0
        assert len(traj.snapshots) == 21  # cadence 0.05 inclusive of both ends
        assert [round(s.t, 10) for s in traj.snapshots] == [
            round(0.05 * k, 10) for k in range(21)
        ]

    def test_duration_semantics_with_offset_start(self, grid64):
        s = _constant_state(grid64)
        s.t = 0.30
        traj = run_flow(s, FlowParams(t_final=0.2, snapshot_interval=0.05))
        assert traj.times[-1] == pytest.approx(0.5, abs=1e-14)
        # Snapshot times are absolute multiples of the interval.
        assert [round(t, 10) for t in traj.snapshot_times] == [
            0.3, 0.35, 0.4, 0.45, 0.5
        ]

    def test_default_run_dissipates_monotonically(self, grid64):
        state = build_initial_state(grid64, {"kind": "sinusoidal"})
        traj = run_flow(state, FlowParams(t_final=0.05))
        assert traj.monotonicity_violations == 0
        assert float(np.diff(traj.energy).max()) <= 1e-10
        assert traj.energy[-1] < traj.energy[0]
        gap = abs(traj.energy[0] - traj.energy[-1] - traj.cumulative_dissipation[-1])
        assert gap <= 0.02 * traj.energy[0]

    def test_dt_floor_aborts_with_partial_trajectory(self, grid64):
        state = build_initial_state(grid64, {"kind": "sinusoidal"})
        with pytest.raises(AbortedRunError) as info:
            run_flow(state, FlowParams(t_final=1.0, dt_floor=1.0))
        traj = info.value.trajectory
        assert traj.termination == "aborted"
        assert len(traj.snapshots) >= 1
        assert traj.times[-1] == 0.0

    def test_param_validation(self):
        with pytest.raises(ValueError):
            FlowParams(t_final=0.0)
        with pytest.raises(ValueError):
            FlowParams(t_final=1.0, cfl_safety=2.0)
        with pytest.raises(ValueError):
            FlowParams(t_final=1.0, dt_floor=0.0)


class TestJacobian:
    def test_constant_map(self, grid64):
        assert np.all(jacobian_det(_constant_state(grid64)) == 0.0)

    def test_product_mode_value_at_origin(self):
        grid = DomainGrid(64, 64)
        u = 0.1 * np.sin(TWO_PI * grid.x1) * np.ones(grid.shape)
        v = 1.0 + 0.1 * np.sin(TWO_PI * grid.x2) * np.ones(grid.shape)
        jac = jacobian_det(MapState(grid, u, v))
        # Central differences of the two sines at the origin node.
        central = 0.1 * math.sin(TWO_PI * grid.h1) / grid.h1
        assert abs(jac[0, 0] - central**2) <= 1e-14
        assert abs(jac[0, 0] - 0.04 * math.pi**2) <= 5e-3

    def test_axis_swap_antisymmetry(self, rng):
        grid = DomainGrid(12, 12)
        u = rng.standard_normal(grid.shape)
        v = np.exp(0.1 * rng.standard_normal(grid.shape))
        j = jacobian_det(MapState(grid, u, v))
        j_swapped = jacobian_det(MapState(grid, u.T.copy(), v.T.copy()))
        assert np.array_equal(j_swapped, -j.T)


class TestChainRule:
    def test_constant_map_residual_vanishes(self, grid64):
        f = BumpFunction([0.3, 1.7], [0.5, 0.5])
        assert chain_rule_residual(_constant_state(grid64), f) == 0.0

    def test_second_order_for_smooth_pair(self):
        f = BumpFunction([0.0, 1.1], [0.3, 0.25])
        res = []
        for n in (64, 128):
            state = build_initial_state(DomainGrid(n, n), {"kind": "sinusoidal"})
            res.append(chain_rule_residual(state, f))
        assert 3.5 <= res[0] / res[1] <= 4.5

    def test_affine_observable_still_second_order(self):
        # Affine f has zero flat Hessian but a nonzero covariant one; the
        # identity must still close at O(h^2).
        f = AffineFunction(0.5, 1.0, -0.7)
        res = []
        for n in (64, 128):
            state = build_initial_state(DomainGrid(n, n), {"kind": "sinusoidal"})
            res.append(chain_rule_residual(state, f))
        assert res[1] > 0.0
        assert 3.5 <= res[0] / res[1] <= 4.5


class TestSnapshotIO:
    def test_round_trip_is_bit_exact(self, rng, tmp_path):
        grid = DomainGrid(8, 12)
        state = MapState(grid, rng.standard_normal(grid.shape),
                         np.exp(rng.standard_normal(grid.shape)), t=0.375)
        path = tmp_path / "snap.csv"
        write_snapshot(state, path)
        back = read_snapshot(path)
        assert back.grid == grid and back.t == state.t
        assert np.array_equal(back.u, state.u)
        assert np.array_equal(back.v, state.v)

    def test_schema_line_is_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("not a snapshot\n")
        with pytest.raises(ValueError):
            read_snapshot(path)

    def test_row_count_is_enforced(self, grid64, tmp_path):
        path = tmp_path / "short.csv"
        write_snapshot(_constant_state(grid64), path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-10]) + "\n")
        with pytest.raises(ValueError):
            read_snapshot(path)
