"""Homodyne measurement statistics: quadrature marginals, binning, plans.

The marginal of x(theta) for a single-mode state rho is

    p(x | theta) = sum_{n,n'} rho_{n n'} e^{i (n'-n) theta} psi_n(x) psi_{n'}(x)

with the harmonic-oscillator eigenfunctions psi_n(x) =
pi^{-1/4} (2^n n!)^{-1/2} H_n(x) e^{-x^2/2}, evaluated by the normalized
three-term recurrence.  The sign convention makes a real-xi squeezed vacuum
have variance e^{-2 xi}/2 at theta = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .fock import DensityMatrix, partial_trace_keep

HIST_BINS = 50
HIST_RANGE = (-8.0, 8.0)
GRID_POINTS = 401
PHASES_PER_MODE = 100

PRETRAIN_STAGES = ("pretrain", "noon", "cat")
FIXED_PHASE_STAGES = {
    "multimode-negativity": (0.0, np.pi / 3, 2 * np.pi / 3),
    "squeezed": (0.0, np.pi / 4, np.pi / 2),
}


def default_grid(points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(HIST_RANGE[0], HIST_RANGE[1], points)


@dataclass(frozen=True)
class HomodyneSetting:
    """One local homodyne measurement: mode index and phase in [0, pi)."""

    mode: int
    phase: float

    def encode(self, num_modes: int) -> np.ndarray:
        """2-vector network encoding (mode/m, phase/pi)."""
        return np.array([self.mode / num_modes, self.phase / np.pi])


@dataclass
class Histogram:
    """50-bin outcome histogram over the fixed range [-8, 8], summing to 1."""

    bins: np.ndarray
    lo: float = HIST_RANGE[0]
    hi: float = HIST_RANGE[1]

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=float)
        if self.bins.shape != (HIST_BINS,):
            raise ValidationError(f"expected {HIST_BINS} bins, got {self.bins.shape}")
        if np.any(self.bins < -1e-12):
            raise ValidationError("negative bin mass")
        if abs(self.bins.sum() - 1.0) > 1e-9:
            raise ValidationError(f"bins sum to {self.bins.sum()}, not 1")

    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, HIST_BINS + 1)


@dataclass
class MeasurementPlan:
    """Context/query split of the available homodyne settings."""

    context: list[HomodyneSetting]
    query: list[HomodyneSetting]
    stage: str = "pretrain"

    def __post_init__(self):
        ctx = {(s.mode, s.phase) for s in self.context}
        qry = {(s.mode, s.phase) for s in self.query}
        if ctx & qry:
            raise ValidationError("context and query overlap")

    @property
    def all_settings(self) -> list[HomodyneSetting]:
        return list(self.context) + list(self.query)


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """psi_n(x) for n = 0..n_max-1, shape (n_max, len(x)).

    Normalized recurrence: psi_n = x sqrt(2/n) psi_{n-1} - sqrt((n-1)/n) psi_{n-2};
    stable for the cutoffs used here (n_max <= a few hundred).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max, x.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, n_max):
        out[n] = x * np.sqrt(2.0 / n) * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out


def fock_marginal(rho: DensityMatrix, setting: HomodyneSetting,
                  grid: np.ndarray | None = None,
                  mass_tol: float = 1e-3) -> np.ndarray:
    """Quadrature density p(x | theta) of one mode, sampled on the grid.

    Multimode inputs are reduced to the requested mode first.  Raises
    NumericalError when the grid misses more than mass_tol of the mass.
    """
    if grid is None:
        grid = default_grid()
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise ValidationError("grid needs at least 2 points")
    if rho.spec.num_modes > 1:
        rho = partial_trace_keep(rho, setting.mode)
    elif setting.mode != 0:
        raise ValidationError(f"mode {setting.mode} out of range for single-mode state")
    d = rho.spec.cutoff
    psi = hermite_functions(d, grid)  # (d, X)
    phases = np.exp(1j * setting.phase * np.arange(d))
    # rotate: rho'_{n n'} = rho_{n n'} e^{i (n'-n) theta}
    rot = (phases.conj()[:, None] * rho.elements) * phases[None, :]
    dens = np.einsum("nm,nx,mx->x", rot, psi, psi).real
    dens = np.maximum(dens, 0.0)
    mass = np.trapezoid(dens, grid)
    if abs(mass - 1.0) > mass_tol:
        raise NumericalError(
            f"marginal mass {mass:.6f} on grid [{grid[0]}, {grid[-1]}]; grid too "
            "narrow or state invalid")
    return dens


def bin_histogram(density: np.ndarray, grid: np.ndarray) -> Histogram:
    """Integrate a sampled density into the 50 fixed bins and renormalize.

    Mass outside [-8, 8] is folded into the corresponding edge bin; the
    fold count is tracked on the returned histogram as .folded_mass.
    """
    density = np.asarray(density, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if density.shape != grid.shape:
        raise ValidationError("density and grid shapes differ")
    if np.all(density == 0.0):
        raise ValidationError("all-zero density cannot be binned")
    lo, hi = HIST_RANGE
    edges = np.linspace(lo, hi, HIST_BINS + 1)
    # trapezoid mass of each grid interval, assigned to bins by midpoint
    mids = 0.5 * (grid[1:] + grid[:-1])
    masses = 0.5 * (density[1:] + density[:-1]) * np.diff(grid)
    idx = np.clip(np.searchsorted(edges, mids, side="right") - 1, 0, HIST_BINS - 1)
    bins = np.bincount(idx, weights=masses, minlength=HIST_BINS)
    folded = masses[(mids < lo) | (mids > hi)].sum()
    total = bins.sum()
    if total <= 0:
        raise ValidationError("no positive mass on the grid")
    hist = Histogram(bins / total)
    hist.folded_mass = float(folded)
    return hist


def phase_grid() -> np.ndarray:
    """The 100 uniformly spaced phases over [0, pi)."""
    return np.arange(PHASES_PER_MODE) * (np.pi / PHASES_PER_MODE)


def all_settings(m: int) -> list[HomodyneSetting]:
    return [HomodyneSetting(i, float(t)) for i in range(m) for t in phase_grid()]


def sample_measurement_plan(m: int, stage: str, rng_seed: int,
                            context_min: int = 10, context_max: int = 15) -> MeasurementPlan:
    """Draw the context/query split used by a pipeline stage.

    pretrain / noon / cat: 10-15 random context phases per mode out of the
    100-phase grid, the rest forming the query.  multimode-negativity and
    squeezed use their fixed three phases per mode as the full context.
    """
    if stage in FIXED_PHASE_STAGES:
        phases = FIXED_PHASE_STAGES[stage]
        ctx = [HomodyneSetting(i, float(t)) for i in range(m) for t in phases]
        return MeasurementPlan(context=ctx, query=[], stage=stage)
    if stage not in PRETRAIN_STAGES:
        raise ValidationError(f"unknown stage {stage!r}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    grid = phase_grid()
    ctx, qry = [], []
    for i in range(m):
        s = int(rng.integers(context_min, context_max + 1))
        chosen = rng.choice(PHASES_PER_MODE, size=s, replace=False)
        mask = np.zeros(PHASES_PER_MODE, dtype=bool)
        mask[chosen] = True
        ctx.extend(HomodyneSetting(i, float(grid[k])) for k in np.flatnonzero(mask))
        qry.extend(HomodyneSetting(i, float(grid[k])) for k in np.flatnonzero(~mask))
    return MeasurementPlan(context=ctx, query=qry, stage=stage)
