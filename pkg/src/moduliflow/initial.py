"""Initial-condition library for map states.

Each builder samples an analytic map on the grid nodes, so the same
condition can be instantiated at several resolutions for convergence
studies.  Kinds:

* constant    -- u = u0, v = v0
* sinusoidal  -- single-mode trigonometric perturbation of a constant
* winding     -- u = amp * sin(2 pi k x1), v = exp(b * cos(2 pi m x2))
* random      -- band-limited random trigonometric fields (seeded)
* file        -- a stored snapshot
"""

from __future__ import annotations

import numpy as np

from .flow import MapState, read_snapshot
from .mesh import DomainGrid

TWO_PI = 2.0 * np.pi

# Allowed fields and defaults per initial-condition kind; shared with the
# config parser so unknown fields are rejected before a run starts.
KIND_DEFAULTS: dict[str, dict] = {
    "constant": {"u0": 0.0, "v0": 1.0},
    "sinusoidal": {"u0": 0.0, "v0": 1.0, "amp_u": 0.15, "amp_v": 0.1,
                   "mode_u": [1, 1], "mode_v": [1, 1]},
    "winding": {"amp": 0.2, "k": 1, "b": 0.3, "m": 1},
    "random": {"u0": 0.0, "v0": 1.0, "amp_u": 0.2, "amp_v": 0.2, "max_mode": 3},
    "file": {"path": None},
}


def smooth_random_field(
    grid: DomainGrid, rng: np.random.Generator, max_mode: int = 3, amplitude: float = 0.1
) -> np.ndarray:
    """Band-limited random field with 1/(1 + |k|^2) coefficient decay,
    rescaled to the requested max-norm amplitude."""
    if max_mode < 1:
        raise ValueError("max_mode must be at least 1")
    x1, x2 = grid.x1, grid.x2
    f = np.zeros(grid.shape)
    for k in range(-max_mode, max_mode + 1):
        for l in range(0, max_mode + 1):
            if l == 0 and k <= 0:
                continue  # one representative per conjugate mode pair
            decay = 1.0 / (1.0 + k * k + l * l)
            phase = TWO_PI * (k * x1 + l * x2)
            f = f + decay * (rng.standard_normal() * np.cos(phase)
                             + rng.standard_normal() * np.sin(phase))
    peak = float(np.abs(f).max())
    if peak == 0.0:
        return f
    return f * (amplitude / peak)


def _require(spec: dict, allowed: dict, kind: str) -> dict:
    out = {}
    for key, value in spec.items():
        if key == "kind":
            continue
        if key not in allowed:
            raise ValueError(f"unknown field {key!r} for initial kind {kind!r}")
        out[key] = value
    for key, default in allowed.items():
        out.setdefault(key, default)
    return out


def build_initial_state(
    grid: DomainGrid, spec: dict, rng: np.random.Generator | None = None
) -> MapState:
    """Build the t = 0 state described by a config dictionary."""
    kind = spec.get("kind")
    x1, x2 = grid.x1, grid.x2
    ones = np.ones(grid.shape)
    if kind == "constant":
        p = _require(spec, KIND_DEFAULTS[kind], kind)
        if not p["v0"] > 0.0:
            raise ValueError(f"constant map needs v0 > 0, got {p['v0']}")
        return MapState(grid, p["u0"] * ones, p["v0"] * ones)
    if kind == "sinusoidal":
        p = _require(spec, KIND_DEFAULTS[kind], kind)
        ku, lu = (int(m) for m in p["mode_u"])
        kv, lv = (int(m) for m in p["mode_v"])
        if abs(p["amp_v"]) >= p["v0"]:
            raise ValueError(
                f"|amp_v| = {abs(p['amp_v'])} must stay below v0 = {p['v0']}"
            )
        u = p["u0"] + p["amp_u"] * np.sin(TWO_PI * ku * x1) * np.cos(TWO_PI * lu * x2)
        v = p["v0"] + p["amp_v"] * np.cos(TWO_PI * kv * x1) * np.sin(TWO_PI * lv * x2)
        return MapState(grid, u * ones, v * ones)
    if kind == "winding":
        p = _require(spec, KIND_DEFAULTS[kind], kind)
        u = p["amp"] * np.sin(TWO_PI * int(p["k"]) * x1) * ones
        v = np.exp(p["b"] * np.cos(TWO_PI * int(p["m"]) * x2)) * ones
        return MapState(grid, u, v)
    if kind == "random":
        p = _require(spec, KIND_DEFAULTS[kind], kind)
        if rng is None:
            raise ValueError("random initial data needs a seeded generator")
        u = p["u0"] + smooth_random_field(grid, rng, int(p["max_mode"]), p["amp_u"])
        # Multiplicative exponential keeps v positive for any draw.
        v = p["v0"] * np.exp(smooth_random_field(grid, rng, int(p["max_mode"]), p["amp_v"]))
        return MapState(grid, u, v)
    if kind == "file":
        p = _require(spec, KIND_DEFAULTS[kind], kind)
        if not p["path"]:
            raise ValueError("file initial data needs a 'path'")
        state = read_snapshot(p["path"])
        if state.grid != grid:
            raise ValueError(
                f"snapshot grid {state.grid.shape} does not match configured "
                f"grid {grid.shape}"
            )
        return MapState(grid, state.u, state.v, 0.0)
    raise ValueError(f"unknown initial kind {kind!r}")
