"""Gradient flow of the harmonic-map energy into the upper half-plane.

A map state holds two periodic scalar fields (u, v) on a DomainGrid, read as
the coordinates of a map from the flat torus into the hyperbolic plane
(v > 0).  The energy is

    E = 1/2 * integral of (|Du|^2 + |Dv|^2) / v^2,

discretised with the staggered forward differences of the grid and the
metric weight 1/v^2 averaged onto cell edges.  tension_field() returns the
exact negative gradient of that discrete energy in the hyperbolic L^2 inner
product <a, b> = integral of (a_u b_u + a_v b_v)/v^2, so forward-Euler
stepping dissipates the discrete energy structurally (up to O(dt) per step),
and the energy identity E(0) - E(T) = integral of D holds at first order.

The continuum limit of the two components is

    tau_u = Lap u - (2/v) <Du, Dv>,
    tau_v = Lap v + (|Du|^2 - |Dv|^2) / v,

which is certified against the energy by the gradient-consistency tests
rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import DomainGrid

# Hard positivity floor for the second coordinate; states at or below the
# floor are treated as having escaped the target.
V_FLOOR = 1e-8

SNAPSHOT_SCHEMA = "moduliflow-snapshot-v1"


class TargetEscapeError(ValueError):
    """A state's v field is at or below the positivity floor."""

    def __init__(self, message: str, node: tuple[int, int]):
        super().__init__(message)
        self.node = node


class StepRejectedError(RuntimeError):
    """A proposed explicit step left the target or increased the energy."""

    def __init__(self, message: str, node: tuple[int, int] | None = None):
        super().__init__(message)
        self.node = node


class AbortedRunError(RuntimeError):
    """Adaptive stepping drove dt under the floor; carries the partial run."""

    def __init__(self, message: str, trajectory: "FlowTrajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass
class MapState:
    """Map into the upper half-plane: fields u, v on a grid at time t."""

    grid: DomainGrid
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u = self.grid.check_field(self.u, "u")
        self.v = self.grid.check_field(self.v, "v")
        if float(self.v.min()) <= 0.0:
            node = np.unravel_index(int(self.v.argmin()), self.v.shape)
            raise ValueError(f"v must be positive everywhere; v{tuple(node)} = {self.v[node]}")
        self.t = float(self.t)

    def copy(self) -> "MapState":
        return MapState(self.grid, self.u.copy(), self.v.copy(), self.t)


@dataclass
class TangentField:
    """Tangent vector along a map: components (tau_u, tau_v) at each node."""

    tau_u: np.ndarray
    tau_v: np.ndarray


def _check_above_floor(state: MapState):
    vmin = float(state.v.min())
    if vmin <= V_FLOOR:
        node = np.unravel_index(int(state.v.argmin()), state.v.shape)
        raise TargetEscapeError(
            f"v at node {tuple(node)} is {vmin}, at or below the floor {V_FLOOR}",
            tuple(int(k) for k in node),
        )


def tension_field(state: MapState) -> TangentField:
    """Exact negative discrete-energy gradient in the hyperbolic inner product.

    For each axis the metric weight sigma = 1/v^2 is averaged onto the
    staggered edge where the forward difference lives; differentiating the
    discrete energy exactly gives

        tau_u = v^2 * div(rho * Du)
        tau_v = v^2 * div(rho * Dv) + S / (2 v)

    where rho is the edge weight, div the matching backward divergence, and
    S collects the squared forward differences on the four edges touching
    the node (the derivative of rho with respect to v).  Constant maps give
    exactly zero.
    """
    _check_above_floor(state)
    grid = state.grid
    u, v = state.u, state.v
    sigma = 1.0 / (v * v)
    div_u = np.zeros(grid.shape)
    div_v = np.zeros(grid.shape)
    edge_sq = np.zeros(grid.shape)
    for axis in (0, 1):
        h = grid.h1 if axis == 0 else grid.h2
        du = (np.roll(u, -1, axis=axis) - u) / h
        dv = (np.roll(v, -1, axis=axis) - v) / h
        rho = 0.5 * (sigma + np.roll(sigma, -1, axis=axis))
        flux_u = rho * du
        flux_v = rho * dv
        div_u += (flux_u - np.roll(flux_u, 1, axis=axis)) / h
        div_v += (flux_v - np.roll(flux_v, 1, axis=axis)) / h
        sq = du * du + dv * dv
        edge_sq += sq + np.roll(sq, 1, axis=axis)
    v2 = v * v
    tau_u = v2 * div_u
    tau_v = v2 * div_v + edge_sq / (2.0 * v)
    return TangentField(tau_u, tau_v)


def energy(state: MapState) -> float:
    """Harmonic-map energy of the state (staggered discretisation)."""
    grid = state.grid
    u, v = state.u, state.v
    sigma = 1.0 / (v * v)
    total = 0.0
    for axis in (0, 1):
        h = grid.h1 if axis == 0 else grid.h2
        du = (np.roll(u, -1, axis=axis) - u) / h
        dv = (np.roll(v, -1, axis=axis) - v) / h
        rho = 0.5 * (sigma + np.roll(sigma, -1, axis=axis))
        total += float(np.sum((du * du + dv * dv) * rho))
    return 0.5 * grid.w * total


def dissipation_rate(state: MapState, tangent: TangentField | None = None) -> float:
    """Squared hyperbolic L^2 norm of the tension field: D = ||tau||^2."""
    if tangent is None:
        tangent = tension_field(state)
    sigma = 1.0 / (state.v * state.v)
    return float(
        state.grid.w
        * np.sum(sigma * (tangent.tau_u**2 + tangent.tau_v**2))
    )


def cfl_dt_max(state: MapState, safety: float = 0.5) -> float:
    """Stability cap for explicit stepping.

    The heat-kernel part of the flow has unit diffusivity, so dt must stay
    under min(h)^2 / 4 regardless of the metric; near the real axis the
    nonlinear terms grow like 1/v, so the cap is sharpened by min(v)^2 when
    that is below 1 (and only then -- letting small-v states loosen the flat
    bound would destabilise the linear part).
    """
    if not 0.0 < safety <= 1.0:
        raise ValueError(f"safety factor must be in (0, 1], got {safety}")
    h = min(state.grid.h1, state.grid.h2)
    vmin = float(state.v.min())
    return safety * h * h * min(1.0, vmin * vmin) / 4.0


def step(state: MapState, dt: float, tangent: TangentField | None = None) -> MapState:
    """One forward-Euler step.  Raises StepRejectedError when the step lands
    at or below the v floor or produces non-finite values."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    cap = cfl_dt_max(state, safety=1.0)
    if dt > cap * (1.0 + 1e-12):
        raise ValueError(f"dt = {dt} exceeds the stability cap {cap}")
    if tangent is None:
        tangent = tension_field(state)
    u_new = state.u + dt * tangent.tau_u
    v_new = state.v + dt * tangent.tau_v
    v_min = float(v_new.min())
    if not np.isfinite(v_min) or v_min <= V_FLOOR or not np.all(np.isfinite(u_new)):
        bad = int(np.argmin(np.where(np.isfinite(v_new), v_new, -np.inf)))
        node = tuple(int(k) for k in np.unravel_index(bad, v_new.shape))
        raise StepRejectedError(
            f"step of dt = {dt} leaves the target at node {node}", node
        )
    return MapState(state.grid, u_new, v_new, state.t + dt)


@dataclass
class FlowParams:
    """Solver controls for run_flow."""

    t_final: float
    snapshot_interval: float = 0.05
    cfl_safety: float = 0.5
    dt_floor: float = 1e-12
    stall_threshold: float = 1e-14
    energy_step_tol: float = 1e-10

    def __post_init__(self):
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if not self.snapshot_interval > 0.0:
            raise ValueError("snapshot_interval must be positive")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError("cfl_safety must be in (0, 1]")
        if not self.dt_floor > 0.0:
            raise ValueError("dt_floor must be positive")
        if self.stall_threshold < 0.0:
            raise ValueError("stall_threshold must be nonnegative")


@dataclass
class FlowTrajectory:
    """Recorded run: per-accepted-step scalars plus snapshot states.

    Row 0 of the scalar series describes the initial state (dt_used = 0).
    snapshot_rows[k] is the row index of snapshot k in the scalar series.
    """

    times: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    cumulative_dissipation: np.ndarray
    dt_used: np.ndarray
    snapshots: list[MapState]
    snapshot_rows: list[int]
    monotonicity_violations: int
    rejected_steps: int
    termination: str
    accepted_steps: int = 0

    @property
    def snapshot_times(self) -> np.ndarray:
        return self.times[self.snapshot_rows]


def _trajectory_from_lists(rows, snapshots, snapshot_rows, violations, rejected,
                           reason, accepted):
    arr = np.array(rows)
    return FlowTrajectory(
        times=arr[:, 0],
        energy=arr[:, 1],
        dissipation=arr[:, 2],
        cumulative_dissipation=arr[:, 3],
        dt_used=arr[:, 4],
        snapshots=snapshots,
        snapshot_rows=snapshot_rows,
        monotonicity_violations=violations,
        rejected_steps=rejected,
        termination=reason,
        accepted_steps=accepted,
    )


def run_flow(initial: MapState, params: FlowParams) -> FlowTrajectory:
    """Integrate the flow to t_final with adaptive explicit stepping.

    dt starts at the stability cap, is halved whenever a step is rejected
    (target escape or an energy increase beyond the per-step tolerance), and
    regrows by 1.2x per step once 10 consecutive steps have been accepted,
    never exceeding the cap.  Steps are clipped so the run lands exactly on
    snapshot times and on the final time.  When the dissipation drops below
    the stall threshold the state is declared numerically harmonic: stepping
    stops and the record is extended to t_final with the frozen state (a
    stationary point does not change, so this continuation is exact rather
    than a giant unstable step).  If dt falls under dt_floor the partial
    trajectory is attached to the raised AbortedRunError.

    t_final is a duration measured from the initial state's time; snapshot
    times are the absolute multiples of snapshot_interval.
    """
    state = initial.copy()
    e_cur = energy(state)
    tangent = tension_field(state)
    d_cur = dissipation_rate(state, tangent)

    rows = [(state.t, e_cur, d_cur, 0.0, 0.0)]
    snapshots = [state.copy()]
    snapshot_rows = [0]
    violations = 0
    rejected = 0
    accepted = 0
    cumulative = 0.0
    streak = 0
    snap_k = int(math.floor(state.t / params.snapshot_interval)) + 1

    t_final = state.t + params.t_final
    dt = cfl_dt_max(state, params.cfl_safety)
    reason = "t_final"
    while True:
        if state.t >= t_final - 1e-14 * max(1.0, t_final):
            break
        if d_cur < params.stall_threshold:
            reason = "stalled"
            break
        cap = cfl_dt_max(state, params.cfl_safety)
        next_snap = snap_k * params.snapshot_interval
        dt_try = min(dt, cap, t_final - state.t)
        if next_snap > state.t:
            dt_try = min(dt_try, next_snap - state.t)
        if dt_try < params.dt_floor:
            raise AbortedRunError(
                f"dt = {dt_try} fell below the floor {params.dt_floor} at t = {state.t}",
                _trajectory_from_lists(
                    rows, snapshots, snapshot_rows, violations, rejected,
                    "aborted", accepted,
                ),
            )
        try:
            new_state = step(state, dt_try, tangent)
            e_new = energy(new_state)
            if e_new - e_cur > params.energy_step_tol:
                raise StepRejectedError(
                    f"energy increased by {e_new - e_cur} at t = {state.t}"
                )
        except StepRejectedError:
            dt = 0.5 * dt_try
            rejected += 1
            streak = 0
            continue
        # Accepted: advance bookkeeping.  The dissipation integral uses the
        # pre-step rate, matching the explicit quadrature of dE/dt = -D.
        cumulative += dt_try * d_cur
        state = new_state
        tangent = tension_field(state)
        d_cur = dissipation_rate(state, tangent)
        if e_new > e_cur + params.energy_step_tol:
            violations += 1  # unreachable under the rejection rule; audited anyway
        e_cur = e_new
        rows.append((state.t, e_cur, d_cur, cumulative, dt_try))
        accepted += 1
        streak += 1
        dt = dt_try
        if streak >= 10:
            dt = min(dt * 1.2, cap)
        while snap_k * params.snapshot_interval <= state.t + 1e-14 * max(1.0, state.t):
            snapshots.append(state.copy())
            snapshot_rows.append(len(rows) - 1)
            snap_k += 1
    if reason == "stalled" and state.t < t_final - 1e-14 * max(1.0, t_final):
        # Numerically harmonic: extend the record to t_final with the frozen
        # state at the snapshot cadence.  The dissipation integral continues
        # with the (sub-threshold) stalled rate, so the energy identity is
        # untouched to well below its tolerance.
        t_prev = state.t
        while snap_k * params.snapshot_interval <= t_prev + 1e-14 * max(1.0, t_prev):
            snap_k += 1
        while True:
            next_snap = snap_k * params.snapshot_interval
            t_here = min(next_snap, t_final)
            cumulative += (t_here - t_prev) * d_cur
            rows.append((t_here, e_cur, d_cur, cumulative, t_here - t_prev))
            snapshots.append(MapState(state.grid, state.u.copy(), state.v.copy(), t_here))
            snapshot_rows.append(len(rows) - 1)
            t_prev = t_here
            if next_snap >= t_final - 1e-14 * max(1.0, t_final):
                break
            snap_k += 1
    if snapshot_rows[-1] != len(rows) - 1:
        snapshots.append(state.copy())
        snapshot_rows.append(len(rows) - 1)
    return _trajectory_from_lists(
        rows, snapshots, snapshot_rows, violations, rejected, reason, accepted
    )


def jacobian_det(state: MapState) -> np.ndarray:
    """Pointwise Jacobian determinant du/dx1 * dv/dx2 - du/dx2 * dv/dx1,
    by central differences."""
    u1, u2 = state.grid.gradient(state.u)
    v1, v2 = state.grid.gradient(state.v)
    return u1 * v2 - u2 * v1


def chain_rule_residual(state: MapState, f) -> float:
    """L^2 norm of the defect of the composition identity

        Lap(f o phi) = df(tau(phi)) + sum_k Hess f(d_k phi, d_k phi),

    where Hess is the hyperbolic Hessian of f (Christoffel terms included)
    and all map derivatives are grid finite differences.  For smooth f and a
    state sampled from a smooth map the residual is O(h^2).

    f must expose value / gradient / hessian taking coordinate arrays.
    """
    grid = state.grid
    u, v = state.u, state.v
    tangent = tension_field(state)
    lhs = grid.laplacian(f.value(u, v))
    fx, fy = f.gradient(u, v)
    fxx, fxy, fyy = f.hessian(u, v)
    # Hyperbolic Hessian: H = D^2 f - Gamma * df with the half-plane symbols
    # Gamma^x_xy = -1/y, Gamma^y_xx = 1/y, Gamma^y_yy = -1/y (y = v here).
    h_xx = fxx - fy / v
    h_xy = fxy + fx / v
    h_yy = fyy + fy / v
    u1, u2 = grid.gradient(u)
    v1, v2 = grid.gradient(v)
    quad = (
        h_xx * (u1 * u1 + u2 * u2)
        + 2.0 * h_xy * (u1 * v1 + u2 * v2)
        + h_yy * (v1 * v1 + v2 * v2)
    )
    residual = lhs - (fx * tangent.tau_u + fy * tangent.tau_v + quad)
    return float(np.sqrt(grid.integrate(residual * residual)))


def write_snapshot(state: MapState, path) -> None:
    """Write a state as CSV: schema line, grid header, then row-major i,j,u,v
    rows with round-trip float formatting."""
    lines = [f"# schema: {SNAPSHOT_SCHEMA}", "n1,n2,t",
             f"{state.grid.n1},{state.grid.n2},{float(state.t)!r}", "i,j,u,v"]
    u, v = state.u.tolist(), state.v.tolist()  # exact Python floats
    for i in range(state.grid.n1):
        u_i, v_i = u[i], v[i]
        for j in range(state.grid.n2):
            lines.append(f"{i},{j},{u_i[j]!r},{v_i[j]!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path) -> MapState:
    """Read a state written by write_snapshot."""
    with open(path) as fh:
        schema = fh.readline().strip()
        if schema != f"# schema: {SNAPSHOT_SCHEMA}":
            raise ValueError(f"unrecognised snapshot schema line: {schema!r}")
        if fh.readline().strip() != "n1,n2,t":
            raise ValueError("malformed snapshot header")
        n1_s, n2_s, t_s = fh.readline().strip().split(",")
        grid = DomainGrid(int(n1_s), int(n2_s))
        if fh.readline().strip() != "i,j,u,v":
            raise ValueError("malformed snapshot column header")
        u = np.empty(grid.shape)
        v = np.empty(grid.shape)
        seen = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            i_s, j_s, u_s, v_s = line.split(",")
            u[int(i_s), int(j_s)] = float(u_s)
            v[int(i_s), int(j_s)] = float(v_s)
            seen += 1
        if seen != grid.n1 * grid.n2:
            raise ValueError(f"snapshot has {seen} rows, expected {grid.n1 * grid.n2}")
    return MapState(grid, u, v, float(t_s))
