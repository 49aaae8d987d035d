"""Spectral substrate on the periodic box [0, 2*pi)^3.

Fields are stored as truncated Fourier series u(x) = sum_k uhat(k) e^{i k.x}
with integer wavenumbers.  The inner product is volume-normalized,
<f, g> = (2*pi)^-3 int f.g dx, so Parseval reads ||u||_L2^2 = sum_k |uhat(k)|^2
with no lattice factors.  Storage order per axis is 0, 1, ..., n/2,
-n/2+1, ..., -1 (the index n/2 is labelled +n/2).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import NotSolenoidal, SymmetryViolation

TWO_PI = 2.0 * np.pi

HERMITIAN_TOL = 1e-9
SOLENOIDAL_TOL = 1e-9


def _read_only(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GridSpec:
    """Cubic collocation grid: n modes per axis, edge length 2*pi.

    Resolved wavenumbers per axis are the integers in [-n/2+1, n/2].
    dealias_fraction is the retained-mode fraction for quadratic products
    (2/3 rule by default).
    """

    n: int
    period: float = TWO_PI
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError("n must be even and >= 4")
        if abs(self.period - TWO_PI) > 1e-12:
            raise ValueError("period is fixed to 2*pi")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        k = np.arange(self.n, dtype=np.int64)
        k[k > self.n // 2] -= self.n
        return _read_only(k.astype(np.float64))

    @cached_property
    def deriv_axis_wavenumbers(self) -> np.ndarray:
        # odd-extension convention: the shared +-n/2 slot differentiates to zero
        # (its cosine's derivative vanishes on the lattice); keeps every
        # direction-sensitive multiplier Hermitian-consistent
        k = self.axis_wavenumbers.copy()
        k[self.n // 2] = 0.0
        return _read_only(k)

    def _axis_grids(self, k: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        return (
            _read_only(np.broadcast_to(k[:, None, None], (n, n, n)).copy()),
            _read_only(np.broadcast_to(k[None, :, None], (n, n, n)).copy()),
            _read_only(np.broadcast_to(k[None, None, :], (n, n, n)).copy()),
        )

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._axis_grids(self.axis_wavenumbers)

    @cached_property
    def deriv_wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self._axis_grids(self.deriv_axis_wavenumbers)

    @cached_property
    def k_squared(self) -> np.ndarray:
        k1, k2, k3 = self.wavenumbers
        return _read_only(k1 * k1 + k2 * k2 + k3 * k3)

    @cached_property
    def k_magnitude(self) -> np.ndarray:
        return _read_only(np.sqrt(self.k_squared))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # keep |k_axis| <= dealias_fraction * n/2 on every axis
        cut = self.dealias_fraction * self.n / 2.0
        k1, k2, k3 = self.wavenumbers
        mask = (np.abs(k1) <= cut) & (np.abs(k2) <= cut) & (np.abs(k3) <= cut)
        return _read_only(mask.astype(np.float64))

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = TWO_PI * np.arange(self.n) / self.n
        g = np.meshgrid(x, x, x, indexing="ij")
        return tuple(_read_only(a) for a in g)


@dataclass(frozen=True)
class SpectralField:
    """Truncated Fourier coefficients of a real 3-vector field.

    coeffs has shape (3, n, n, n), complex128.  The solenoidal and
    zero_mean flags are set by operations that guarantee the property;
    they are trusted, not re-derived.
    """

    grid: GridSpec
    coeffs: np.ndarray
    time: float = 0.0
    label: str = ""
    solenoidal: bool = False
    zero_mean: bool = False

    def __post_init__(self):
        n = self.grid.n
        if self.coeffs.shape != (3, n, n, n):
            raise ValueError(f"coeffs must have shape (3, {n}, {n}, {n})")
        if self.coeffs.dtype != np.complex128:
            object.__setattr__(self, "coeffs", self.coeffs.astype(np.complex128))

    def with_coeffs(self, coeffs: np.ndarray, **flags) -> "SpectralField":
        return replace(self, coeffs=coeffs, **flags)


@dataclass(frozen=True)
class PhysicalField:
    """Collocation-grid samples of a real 3-vector field on x = 2*pi*(i,j,l)/n."""

    grid: GridSpec
    samples: np.ndarray
    time: float = 0.0
    label: str = ""

    def __post_init__(self):
        n = self.grid.n
        if self.samples.shape != (3, n, n, n):
            raise ValueError(f"samples must have shape (3, {n}, {n}, {n})")
        if self.samples.dtype != np.float64:
            object.__setattr__(self, "samples", self.samples.astype(np.float64))


# ----------------------------------------------------------------------
# transforms

def forward_transform(f: PhysicalField) -> SpectralField:
    """Fourier coefficients uhat(k) such that u(x) = sum_k uhat(k) e^{i k.x}."""
    coeffs = np.fft.fftn(f.samples, axes=(1, 2, 3)) / f.grid.n**3
    return SpectralField(f.grid, coeffs, time=f.time, label=f.label)


def hermitian_defect(f: SpectralField) -> float:
    """Relative departure from coeff(-k) == conj(coeff(k))."""
    c = f.coeffs
    mirrored = np.conj(np.roll(c[:, ::-1, ::-1, ::-1], (1, 1, 1), axis=(1, 2, 3)))
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(c - mirrored)) / scale)


def inverse_transform(f: SpectralField, check: bool = True) -> PhysicalField:
    """Synthesize real samples; rejects corrupted (non-Hermitian) spectra."""
    if check:
        defect = hermitian_defect(f)
        if defect > HERMITIAN_TOL:
            raise SymmetryViolation(f"Hermitian defect {defect:.3e} exceeds {HERMITIAN_TOL:.1e}")
    samples = np.fft.ifftn(f.coeffs, axes=(1, 2, 3)).real * f.grid.n**3
    return PhysicalField(f.grid, samples, time=f.time, label=f.label)


def _to_physical(coeffs: np.ndarray, n: int) -> np.ndarray:
    return np.fft.ifftn(coeffs, axes=(1, 2, 3)).real * n**3


def _to_spectral(samples: np.ndarray, n: int) -> np.ndarray:
    return np.fft.fftn(samples, axes=(1, 2, 3)) / n**3


# ----------------------------------------------------------------------
# norms and inner products

def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm: ( sum_k (1+|k|^2)^s |uhat(k)|^2 )^(1/2)."""
    mag2 = (f.coeffs.real**2 + f.coeffs.imag**2).sum(axis=0)
    if s == 0.0:
        return float(np.sqrt(np.sum(mag2)))
    weight = (1.0 + f.grid.k_squared) ** s
    return float(np.sqrt(np.sum(weight * mag2)))


def l2_norm(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0)


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Volume-normalized L2 inner product, evaluated on coefficients."""
    return float(np.sum(f.coeffs * np.conj(g.coeffs)).real)


def physical_l2_norm(f: PhysicalField) -> float:
    """Volume-normalized lattice L2 norm (independent of the spectral path)."""
    return float(np.sqrt(np.sum(f.samples**2) / f.grid.n**3))


# ----------------------------------------------------------------------
# multipliers

def leray_project(f: SpectralField) -> SpectralField:
    """Project each mode k != 0 by (I - k k^T/|k|^2); k = 0 is left unchanged.

    Uses the odd-extension wavenumbers, so modes whose only content sits on
    shared Nyquist slots (already lattice-divergence-free) pass through
    unchanged and realness is preserved.
    """
    k1, k2, k3 = f.grid.deriv_wavenumbers
    kk = k1 * k1 + k2 * k2 + k3 * k3
    safe = np.where(kk > 0.0, kk, 1.0)
    c = f.coeffs
    kdotc = np.where(kk > 0.0, (k1 * c[0] + k2 * c[1] + k3 * c[2]) / safe, 0.0)
    out = np.stack((c[0] - k1 * kdotc, c[1] - k2 * kdotc, c[2] - k3 * kdotc))
    return f.with_coeffs(out, solenoidal=True)


def heat_semigroup(f: SpectralField, nu: float, t: float) -> SpectralField:
    """Multiply by e^{-nu t |k|^2}; contraction on every H^s."""
    if nu <= 0.0:
        raise ValueError("viscosity must be positive")
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    mult = np.exp(-nu * t * f.grid.k_squared)
    return f.with_coeffs(f.coeffs * mult)


def derivative(f: SpectralField, axis: int) -> SpectralField:
    """Componentwise d/dx_axis, axis in {1, 2, 3}: multiplication by i k_axis."""
    if axis not in (1, 2, 3):
        raise ValueError("axis must be 1, 2 or 3")
    k = f.grid.deriv_wavenumbers[axis - 1]
    return f.with_coeffs(f.coeffs * (1j * k), zero_mean=True)


def divergence(f: SpectralField) -> SpectralField:
    """div u as a scalar field stored in component 1 (index 0)."""
    k1, k2, k3 = f.grid.deriv_wavenumbers
    c = f.coeffs
    d = 1j * (k1 * c[0] + k2 * c[1] + k3 * c[2])
    out = np.zeros_like(c)
    out[0] = d
    return f.with_coeffs(out, solenoidal=False, zero_mean=True)


def gradient(f: SpectralField) -> SpectralField:
    """Gradient of the scalar stored in component 1 (index 0)."""
    k1, k2, k3 = f.grid.deriv_wavenumbers
    s = f.coeffs[0]
    out = np.stack((1j * k1 * s, 1j * k2 * s, 1j * k3 * s))
    return f.with_coeffs(out, solenoidal=False, zero_mean=True)


def curl(f: SpectralField) -> SpectralField:
    k1, k2, k3 = f.grid.deriv_wavenumbers
    c = f.coeffs
    out = np.stack((
        1j * (k2 * c[2] - k3 * c[1]),
        1j * (k3 * c[0] - k1 * c[2]),
        1j * (k1 * c[1] - k2 * c[0]),
    ))
    # curl of anything is divergence-free
    return f.with_coeffs(out, solenoidal=True, zero_mean=True)


def dealias(f: SpectralField) -> SpectralField:
    """Zero all modes with any |k_axis| beyond the grid's retained fraction."""
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


def zero_mean(f: SpectralField) -> SpectralField:
    out = f.coeffs.copy()
    out[:, 0, 0, 0] = 0.0
    return f.with_coeffs(out, zero_mean=True)


def divergence_defect(f: SpectralField) -> float:
    """Relative solenoidality defect: ||k.uhat||_l2 / ||  |k| |uhat| ||_l2."""
    k1, k2, k3 = f.grid.deriv_wavenumbers
    c = f.coeffs
    num = np.abs(k1 * c[0] + k2 * c[1] + k3 * c[2]) ** 2
    den = (k1 * k1 + k2 * k2 + k3 * k3) * (np.abs(c) ** 2).sum(axis=0)
    total = np.sum(den)
    if total == 0.0:
        return 0.0
    return float(np.sqrt(np.sum(num) / total))


# ----------------------------------------------------------------------
# nonlinearity

def _advect_arrays(fc: np.ndarray, gc: np.ndarray, grid: GridSpec):
    """Dealiased spectral coefficients of (f . grad) g, plus max |f| on the lattice."""
    n = grid.n
    scale = float(n**3)
    kk = grid.deriv_wavenumbers
    fp = _to_physical(fc, n)
    fmax = float(np.sqrt((fp**2).sum(axis=0)).max())
    out_phys = np.empty_like(fp)
    for i in range(3):
        gi = gc[i]
        acc = np.zeros((n, n, n))
        for j in range(3):
            dj_gi = np.fft.ifftn(1j * kk[j] * gi).real * scale
            acc += fp[j] * dj_gi
        out_phys[i] = acc
    out = _to_spectral(out_phys, n) * grid.dealias_mask
    return out, fmax


def _require_solenoidal(u: SpectralField, what: str):
    if not u.solenoidal and divergence_defect(u) > SOLENOIDAL_TOL:
        raise NotSolenoidal(f"{what} requires a divergence-free field")


def advect(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pseudospectral (f . grad) g with 2/3-rule dealiasing; no projection."""
    out, _ = _advect_arrays(f.coeffs, g.coeffs, f.grid)
    return f.with_coeffs(out, solenoidal=False, zero_mean=False)


def advective_term(u: SpectralField) -> SpectralField:
    """(u . grad) u, dealiased, unprojected."""
    _require_solenoidal(u, "advective_term")
    return advect(u, u)


def nonlinear_term(u: SpectralField) -> SpectralField:
    """P[(u . grad) u]: pseudospectral product, dealiased, then Leray-projected."""
    _require_solenoidal(u, "nonlinear_term")
    return leray_project(advect(u, u))
