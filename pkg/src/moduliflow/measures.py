"""Pushforward measures on the modular surface and entropy diagnostics.

A map state pushes the uniform node measure of its grid forward to the
fundamental domain: every node's image is reduced and its weight w = h1*h2
is deposited in the containing histogram bin.  Against those histograms
this module computes the normalised hyperbolic reference measure, densities
(Radon-Nikodym ratios), relative entropy sum(mu log(mu/nu)), weak-* pairings
with smooth observables, trapezoid time averages, equidistribution error
series, and the degenerate-set / tail diagnostics bundled in EntropyReport.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, asdict

import numpy as np

from .flow import MapState, jacobian_det
from .hyperbolic import (
    FundamentalDomainBinning,
    UpperHalfPoint,
    hyperbolic_laplacian_fd,
    reduce_points,
)

MEASURE_SCHEMA = "moduliflow-measure-v1"
ENTROPY_SCHEMA = "moduliflow-entropy-v1"

MASS_TOL = 1e-12


class BinningMismatchError(ValueError):
    """Two measures were combined across incompatible binnings."""


@dataclass
class PushforwardMeasure:
    """Probability histogram over a binning; masses[-1] is the overflow bin."""

    binning: FundamentalDomainBinning
    masses: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.shape != (self.binning.n_bins + 1,):
            raise ValueError(
                f"mass vector has shape {self.masses.shape}, expected "
                f"({self.binning.n_bins + 1},)"
            )
        if np.any(self.masses < 0.0) or not np.all(np.isfinite(self.masses)):
            raise ValueError("masses must be finite and nonnegative")
        total = float(self.masses.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {total} deviates from 1 beyond {MASS_TOL}")

    @property
    def overflow(self) -> float:
        return float(self.masses[-1])


@dataclass
class ReferenceMeasure:
    """Normalised hyperbolic area measure on the binning (full support)."""

    binning: FundamentalDomainBinning
    masses: np.ndarray
    raw_total: float

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if np.any(self.masses <= 0.0):
            raise ValueError("reference measure must have full support")

    @property
    def overflow(self) -> float:
        return float(self.masses[-1])


def reference_measure(binning: FundamentalDomainBinning) -> ReferenceMeasure:
    """Hyperbolic area of each bin, normalised to a probability measure.
    The raw total approximates the fundamental-domain area pi/3."""
    raw = np.concatenate([binning.raw_mass, [binning.overflow_mass]])
    total = float(raw.sum())
    return ReferenceMeasure(binning, raw / total, total)


def _check_match(a, b):
    if not a.binning.matches(b.binning):
        raise BinningMismatchError(
            f"binnings differ: {a.binning.n_x}x{a.binning.n_y}/y_max="
            f"{a.binning.y_max} vs {b.binning.n_x}x{b.binning.n_y}/y_max="
            f"{b.binning.y_max}"
        )


def pushforward(state: MapState, binning: FundamentalDomainBinning) -> PushforwardMeasure:
    """Histogram of the reduced node images, each node carrying weight w."""
    xf, yf = reduce_points(state.u, state.v)
    idx = binning.bin_index_array(xf.ravel(), yf.ravel())
    counts = np.bincount(idx, minlength=binning.n_bins + 1).astype(float)
    return PushforwardMeasure(binning, counts * state.grid.w, state.t)


def radon_nikodym(mu: PushforwardMeasure, nu: ReferenceMeasure) -> np.ndarray:
    """Density of mu against nu, bin by bin (nu has full support)."""
    _check_match(mu, nu)
    return mu.masses / nu.masses


def entropy_from_masses(mu_masses, nu_masses) -> float:
    """sum over bins of mu * log(mu / nu), with 0 log 0 = 0.

    Raw-array core shared by relative_entropy and the analytic test cases;
    requires nu > 0 wherever mu > 0.
    """
    mu = np.asarray(mu_masses, dtype=float)
    nu = np.asarray(nu_masses, dtype=float)
    pos = mu > 0.0
    if np.any(nu[pos] <= 0.0):
        raise ValueError("mu puts mass where nu vanishes; entropy is infinite")
    return float(np.sum(mu[pos] * np.log(mu[pos] / nu[pos])))


def relative_entropy(mu: PushforwardMeasure, nu: ReferenceMeasure) -> float:
    """Relative entropy H(mu | nu) >= 0 (up to rounding of the mass totals)."""
    _check_match(mu, nu)
    return entropy_from_masses(mu.masses, nu.masses)


def weak_star_pairing(mu, f) -> float:
    """Binned pairing: sum of bin masses times f at the bin mass centroids,
    plus the overflow mass times f's declared overflow value (0 for the
    compactly supported observables)."""
    binning = mu.binning
    live = np.asarray(f.value(binning.center_x, binning.center_y), dtype=float)
    total = float(np.dot(mu.masses[:-1], live))
    overflow_value = getattr(f, "overflow_value", 0.0)
    return total + float(mu.masses[-1]) * overflow_value


def weak_star_pairing_exact(state: MapState, f) -> float:
    """Node-exact pairing of the pushforward with f: w * sum f(reduced image).
    Preferred over the binned pairing when the state is available."""
    xf, yf = reduce_points(state.u, state.v)
    return float(state.grid.w * np.sum(f.value(xf, yf)))


def time_average(measures, t_end: float | None = None) -> PushforwardMeasure:
    """Trapezoid-in-time average of a sorted list of measures, renormalised
    to total mass exactly 1.  At least two measures are required; identical
    timestamps degrade gracefully to the plain mean."""
    if len(measures) < 2:
        raise ValueError("time averaging needs at least two measures")
    times = np.array([m.t for m in measures], dtype=float)
    if np.any(np.diff(times) < 0.0):
        raise ValueError("measures must be sorted by time")
    if t_end is not None and times[-1] > t_end + 1e-9 * max(1.0, abs(t_end)):
        raise ValueError(f"measure at t = {times[-1]} lies beyond t_end = {t_end}")
    for m in measures[1:]:
        _check_match(measures[0], m)
    span = times[-1] - times[0]
    if span <= 0.0:
        weights = np.full(len(measures), 1.0 / len(measures))
    else:
        weights = np.empty(len(measures))
        weights[0] = 0.5 * (times[1] - times[0])
        weights[-1] = 0.5 * (times[-1] - times[-2])
        if len(measures) > 2:
            weights[1:-1] = 0.5 * (times[2:] - times[:-2])
        weights /= span
    stacked = np.stack([m.masses for m in measures])
    masses = weights @ stacked
    masses /= masses.sum()  # exact unit mass, absorbing quadrature rounding
    return PushforwardMeasure(measures[0].binning, masses, float(times[-1]))


def ergodic_error(trajectory, f, binning, reference: ReferenceMeasure | None = None):
    """|time-average pairing - reference pairing| per snapshot prefix.

    Entry k compares the trapezoid average of the pushforwards of snapshots
    0..k (entry 0 is the bare initial pushforward) against the hyperbolic
    reference.  Reported as a diagnostic series; no decay is asserted.
    """
    if reference is None:
        reference = reference_measure(binning)
    mus = [pushforward(s, binning) for s in trajectory.snapshots]
    return ergodic_error_from_measures(mus, f, reference)


def ergodic_error_from_measures(mus, f, reference: ReferenceMeasure) -> np.ndarray:
    target = weak_star_pairing(reference, f)
    errs = np.empty(len(mus))
    for k in range(len(mus)):
        mu_bar = mus[0] if k == 0 else time_average(mus[: k + 1])
        errs[k] = abs(weak_star_pairing(mu_bar, f) - target)
    return errs


def laplacian_invariance_diagnostic(mu, f, fd_step: float = 1e-4) -> float:
    """Pairing of mu with the hyperbolic Laplacian of f, the Laplacian taken
    by the pointwise finite-difference stencil at each bin centroid.

    For an exactly invariant measure this vanishes for every smooth f; the
    value is reported, never asserted.  A support box reaching outside the
    truncated fundamental domain triggers a warning since mass near the
    boundary is then attributed incorrectly.
    """
    binning = mu.binning
    box = getattr(f, "support_box", None)
    if box is not None:
        x_lo, x_hi, y_lo, y_hi = box
        inner = min(1.0, binning.y_min + binning.dy)
        if (x_lo <= -0.5 or x_hi >= 0.5 or y_lo <= inner or y_hi >= binning.y_max):
            warnings.warn(
                "observable support touches the fundamental-domain boundary; "
                "the invariance pairing is unreliable there",
                stacklevel=2,
            )
    total = 0.0
    for mass, cx, cy in zip(mu.masses[:-1], binning.center_x, binning.center_y):
        if mass > 0.0:
            point = UpperHalfPoint(float(cx), float(cy))
            total += float(mass) * hyperbolic_laplacian_fd(
                lambda x, y: float(f.value(x, y)), point, fd_step
            )
    return total


@dataclass
class EntropyReport:
    """Snapshot diagnostics: relative entropy, density sup, the mass carried
    by bins with density above the threshold, and the fraction of nodes with
    a numerically degenerate Jacobian."""

    t: float
    entropy: float
    rho_max: float
    tail_mass: float
    degenerate_fraction: float

    def to_json_line(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json_line(cls, line: str) -> "EntropyReport":
        return cls(**json.loads(line))


def entropy_report(
    state: MapState,
    binning: FundamentalDomainBinning,
    nu: ReferenceMeasure,
    density_threshold: float = 10.0,
    jacobian_threshold: float = 1e-6,
) -> EntropyReport:
    """Assemble the entropy/degeneracy diagnostics for one state."""
    if not density_threshold > 1.0:
        raise ValueError(f"density threshold must exceed 1, got {density_threshold}")
    mu = pushforward(state, binning)
    rho = radon_nikodym(mu, nu)
    tail = float(mu.masses[rho > density_threshold].sum())
    jac = jacobian_det(state)
    degenerate = float(np.mean(np.abs(jac) < jacobian_threshold))
    return EntropyReport(
        t=state.t,
        entropy=relative_entropy(mu, nu),
        rho_max=float(rho.max()),
        tail_mass=tail,
        degenerate_fraction=degenerate,
    )


def write_measure(mu, path) -> None:
    """CSV serialisation: schema line, binning header, then bin_ix,bin_iy,mass
    rows in lexicographic bin order with the overflow bin last as (-1,-1)."""
    b = mu.binning
    t = getattr(mu, "t", 0.0)
    lines = [f"# schema: {MEASURE_SCHEMA}", "n_x,n_y,y_max,t",
             f"{b.n_x},{b.n_y},{float(b.y_max)!r},{float(t)!r}", "bin_ix,bin_iy,mass"]
    for ix, iy, mass in zip(b.bin_ix.tolist(), b.bin_iy.tolist(),
                            mu.masses[:-1].tolist()):
        lines.append(f"{ix},{iy},{mass!r}")
    lines.append(f"-1,-1,{float(mu.masses[-1])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_measure(path, binning: FundamentalDomainBinning | None = None) -> PushforwardMeasure:
    """Read a measure written by write_measure.  Rebuilds the binning from
    the header unless a matching one is supplied."""
    with open(path) as fh:
        schema = fh.readline().strip()
        if schema != f"# schema: {MEASURE_SCHEMA}":
            raise ValueError(f"unrecognised measure schema line: {schema!r}")
        if fh.readline().strip() != "n_x,n_y,y_max,t":
            raise ValueError("malformed measure header")
        n_x_s, n_y_s, y_max_s, t_s = fh.readline().strip().split(",")
        header_binning = (int(n_x_s), int(n_y_s), float(y_max_s))
        if binning is None:
            binning = FundamentalDomainBinning(*header_binning)
        elif (binning.n_x, binning.n_y, binning.y_max) != header_binning:
            raise BinningMismatchError(
                f"file binning {header_binning} does not match supplied binning"
            )
        if fh.readline().strip() != "bin_ix,bin_iy,mass":
            raise ValueError("malformed measure column header")
        masses = np.zeros(binning.n_bins + 1)
        row = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ix_s, iy_s, m_s = line.split(",")
            ix, iy = int(ix_s), int(iy_s)
            if (ix, iy) == (-1, -1):
                masses[-1] = float(m_s)
                continue
            if row >= binning.n_bins or (
                binning.bin_ix[row] != ix or binning.bin_iy[row] != iy
            ):
                raise ValueError(f"unexpected bin ({ix}, {iy}) in row {row}")
            masses[row] = float(m_s)
            row += 1
        if row != binning.n_bins:
            raise ValueError(f"measure file has {row} live bins, expected {binning.n_bins}")
    return PushforwardMeasure(binning, masses, float(t_s))
