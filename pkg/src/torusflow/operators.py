"""Frequency-band operators: mollifier smoothing, three-band blending, regularization.

All three act on spectral coefficients.  Smoothing multiplies by a radial
low-pass symbol in [0, 1]; regularization composes smoothing with the Leray
projection; blending combines a low-band, mid-band and high-band field with
a partition-of-unity weight triple and then applies a spectrum-smearing
step realized as multiplication by a slowly varying window in physical
space (see `spatial_window`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GridMismatch
from .spectral import (
    GridSpec,
    SpectralField,
    TWO_PI,
    _to_physical,
    _to_spectral,
    leray_project,
)

MOLLIFIER_KINDS = ("gaussian", "bump")

# raised-cosine ramp half-width for the band weights, relative to each edge
RAMP_HALF_WIDTH = 0.25

_BUMP_RMAX = 64.0
_BUMP_SAMPLES = 32769


@dataclass(frozen=True)
class MollifierSpec:
    """Scale and shape of the low-pass symbol.

    kind "gaussian": symbol e^{-(eps |k|)^2 / 2}.
    kind "bump": tabulated transform of the compactly supported bump
    c*exp(-1/(1-|x|^2)), clamped to [0, 1] and monotonized so the symbol
    invariants (value 1 at 0, radially non-increasing) hold everywhere.
    """

    eps: float
    kind: str = "gaussian"

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.kind not in MOLLIFIER_KINDS:
            raise ValueError(f"kind must be one of {MOLLIFIER_KINDS}")


@lru_cache(maxsize=1)
def _bump_table() -> tuple[np.ndarray, np.ndarray]:
    """Radial table of the bump transform; computed once, immutable after."""
    nodes, weights = np.polynomial.legendre.leggauss(400)
    s = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    profile = np.exp(-1.0 / (1.0 - s**2))
    mass = np.sum(w * profile * s**2)
    r = np.linspace(0.0, _BUMP_RMAX, _BUMP_SAMPLES)
    vals = (np.sinc(np.outer(r, s) / np.pi) * (profile * s**2 * w)).sum(axis=1) / mass
    # the exact transform oscillates below zero past its first root; the
    # symbol contract wants [0, 1] and radial non-increase, so clamp + cummin
    table = np.minimum.accumulate(np.clip(vals, 0.0, 1.0))
    r.flags.writeable = False
    table.flags.writeable = False
    return r, table


def _profile(spec: MollifierSpec, r: np.ndarray) -> np.ndarray:
    """Symbol as a function of the scaled radius r = eps * |k|."""
    if spec.kind == "gaussian":
        return np.exp(-0.5 * r**2)
    grid_r, table = _bump_table()
    return np.interp(r, grid_r, table, right=0.0)


def mollifier_symbol(spec: MollifierSpec, k) -> float | np.ndarray:
    """Symbol value at wavenumber k (a 3-vector, a magnitude, or an array of magnitudes)."""
    k = np.asarray(k, dtype=np.float64)
    if k.ndim == 1 and k.shape == (3,):
        mag = float(np.sqrt(np.sum(k**2)))
        return float(_profile(spec, np.asarray([spec.eps * mag]))[0])
    out = _profile(spec, spec.eps * np.abs(k))
    return float(out) if out.ndim == 0 else out


def symbol_on_grid(spec: MollifierSpec, grid: GridSpec) -> np.ndarray:
    return _profile(spec, spec.eps * grid.k_magnitude)


def smooth(f: SpectralField, spec: MollifierSpec, project: bool = False) -> SpectralField:
    """Multiply coefficients by the mollifier symbol (a contraction on every H^s).

    The scalar multiplier preserves solenoidality; `project` additionally
    applies the Leray projection for callers that want it fused here.
    """
    out = f.with_coeffs(f.coeffs * symbol_on_grid(spec, f.grid))
    return leray_project(out) if project else out


def regularize(f: SpectralField, spec: MollifierSpec) -> SpectralField:
    """Leray projection of the mollified field; contraction, solenoidal output."""
    return leray_project(smooth(f, spec))


# ----------------------------------------------------------------------
# three-band weights

@dataclass(frozen=True)
class WeightPartition:
    """Radial partition of unity over low / mid / high wavenumber bands.

    The low weight is 1 up to r1*(1-delta) and 0 from r1 on; the high
    weight is 0 up to r2 and 1 from r2*(1+delta) on; the mid weight is
    defined as 1 minus the other two, so the triple sums to 1 exactly.
    """

    r1: float
    r2: float
    ramp: str = "raised-cosine"

    def __post_init__(self):
        if not 0.0 < self.r1 < self.r2:
            raise ValueError("need r2 > r1 > 0")
        if self.ramp != "raised-cosine":
            raise ValueError("only the raised-cosine ramp is implemented")


def default_weights(grid: GridSpec) -> WeightPartition:
    return WeightPartition(r1=grid.n / 8.0, r2=3.0 * grid.n / 8.0)


def _falling_ramp(t: np.ndarray) -> np.ndarray:
    """cos^2 ramp from 1 at t<=0 to 0 at t>=1, with exact endpoint values."""
    t = np.asarray(t, dtype=np.float64)
    mid = np.cos(0.5 * np.pi * np.clip(t, 0.0, 1.0)) ** 2
    return np.where(t <= 0.0, 1.0, np.where(t >= 1.0, 0.0, mid))


def _low_weight(w: WeightPartition, r: np.ndarray) -> np.ndarray:
    lo = w.r1 * (1.0 - RAMP_HALF_WIDTH)
    return _falling_ramp((r - lo) / (w.r1 - lo))


def _high_weight(w: WeightPartition, r: np.ndarray) -> np.ndarray:
    hi = w.r2 * (1.0 + RAMP_HALF_WIDTH)
    return 1.0 - _falling_ramp((r - w.r2) / (hi - w.r2))


def weight_eval(w: WeightPartition, k) -> tuple[float, float, float]:
    """(omega_low, omega_mid, omega_high) at wavenumber k; sums to 1 exactly."""
    k = np.asarray(k, dtype=np.float64)
    r = float(np.sqrt(np.sum(k**2))) if k.shape == (3,) else float(np.abs(k))
    rr = np.asarray([r])
    ww = float(_low_weight(w, rr)[0])
    ws = float(_high_weight(w, rr)[0])
    return ww, 1.0 - ww - ws, ws


def weights_on_grid(w: WeightPartition, grid: GridSpec):
    r = grid.k_magnitude
    ww = _low_weight(w, r)
    ws = _high_weight(w, r)
    return ww, 1.0 - ww - ws, ws


def binary_cutoff(r: np.ndarray) -> np.ndarray:
    """Raised-cosine cutoff: 1 on [0, 1], 0 on [2, inf)."""
    return _falling_ramp(np.asarray(r, dtype=np.float64) - 1.0)


# ----------------------------------------------------------------------
# blending

def _check_same_grid(*fields: SpectralField):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatch("blend inputs must share one grid")


def weighted_blend(
    low: SpectralField, mid: SpectralField, high: SpectralField, w: WeightPartition
) -> SpectralField:
    """Pure three-band combination omega_low*low + omega_mid*mid + omega_high*high."""
    _check_same_grid(low, mid, high)
    ww, wm, ws = weights_on_grid(w, low.grid)
    out = ww * low.coeffs + wm * mid.coeffs + ws * high.coeffs
    sol = low.solenoidal and mid.solenoidal and high.solenoidal
    zm = low.zero_mean and mid.zero_mean and high.zero_mean
    return low.with_coeffs(out, solenoidal=sol, zero_mean=zm)


def spatial_window(spec: MollifierSpec, grid: GridSpec) -> np.ndarray:
    """Slowly varying lattice window realizing the spectrum-smearing step.

    The window is the mollifier profile evaluated at eps times the periodic
    distance to the origin, normalized to unit lattice mean; it tends to 1
    uniformly as eps -> 0, so the blend is recovered unchanged in the limit.
    Multiplying by it in physical space is the O(n^3 log n) realization of a
    unit-mass convolution over the wavenumber lattice.
    """
    x1, x2, x3 = grid.coordinates
    d2 = sum(np.minimum(x, TWO_PI - x) ** 2 for x in (x1, x2, x3))
    win = _profile(spec, spec.eps * np.sqrt(d2))
    return win / win.mean()


def blend(
    low: SpectralField,
    mid: SpectralField,
    high: SpectralField,
    w: WeightPartition,
    spec: MollifierSpec,
    variant: str = "weighted",
) -> SpectralField:
    """Combine three band sources into one field.

    weighted: partition-of-unity blend, spectrum smearing via the spatial
    window, then a Leray projection (the windowing is the only step that
    can break solenoidality).
    binary: eta(eps |k|) * low + (1 - eta(eps |k|)) * high with the
    raised-cosine cutoff eta; mid is unused by construction.
    """
    _check_same_grid(low, mid, high)
    grid = low.grid
    if variant == "binary":
        eta = binary_cutoff(spec.eps * grid.k_magnitude)
        out = eta * low.coeffs + (1.0 - eta) * high.coeffs
        sol = low.solenoidal and high.solenoidal
        zm = low.zero_mean and high.zero_mean
        return low.with_coeffs(out, solenoidal=sol, zero_mean=zm)
    if variant != "weighted":
        raise ValueError("variant must be 'weighted' or 'binary'")
    g = weighted_blend(low, mid, high, w)
    win = spatial_window(spec, grid)
    smeared = _to_spectral(win * _to_physical(g.coeffs, grid.n), grid.n)
    return leray_project(g.with_coeffs(smeared, zero_mean=False))
