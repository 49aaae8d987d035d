"""Dyadic frequency calculus: blocks, low-pass sums, Bernstein ratios, paraproducts.

The radial block profile chi is a raised cosine in log2 radius: 1 on
[2^-1/4, 2^1/4], supported in (2^-3/4, 2^3/4) (inside the dyadic annulus
[1/2, 2]), with sin^2 / cos^2 ramps arranged so that sum_j chi(2^-j r) = 1
for every r >= 1.  The k = 0 mode sits in a separate low block with index -1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import IndexOutOfRange, SupportViolation, ZeroField
from .spectral import (
    GridSpec,
    SpectralField,
    _advect_arrays,
    _require_solenoidal,
    advect,
    inverse_transform,
    l2_norm,
    sobolev_norm,
)

_PLATEAU = 0.25  # log2 half-width of the chi plateau
_SUPPORT = 0.75  # log2 half-width of the chi support


def chi(r) -> np.ndarray:
    """Radial block profile evaluated at r = |k| / 2^j."""
    r = np.asarray(r, dtype=np.float64)
    t = np.where(r > 0.0, np.log2(np.where(r > 0.0, r, 1.0)), -4.0 * _SUPPORT)
    out = np.zeros_like(r)
    out = np.where(np.abs(t) <= _PLATEAU, 1.0, out)
    rising = (t > -_SUPPORT) & (t < -_PLATEAU)
    out = np.where(rising, np.sin(np.pi * (t + _SUPPORT)) ** 2, out)
    falling = (t > _PLATEAU) & (t < _SUPPORT)
    out = np.where(falling, np.cos(np.pi * (t - _PLATEAU)) ** 2, out)
    return out


@dataclass(frozen=True)
class DyadicPartition:
    """Block index range [jmin, jmax] covering the resolved wavenumbers."""

    grid: GridSpec
    jmin: int
    jmax: int

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "DyadicPartition":
        kmax = np.sqrt(3.0) * (grid.n / 2.0)
        jmax = int(np.floor(np.log2(kmax) + _SUPPORT))
        return cls(grid=grid, jmin=0, jmax=jmax)

    @property
    def indices(self) -> range:
        """Annulus block indices; the low block -1 is carried separately."""
        return range(self.jmin, self.jmax + 1)

    @cached_property
    def block_weights(self) -> list[np.ndarray]:
        r = self.grid.k_magnitude
        return [chi(r / 2.0**j) for j in self.indices]

    @cached_property
    def low_mask(self) -> np.ndarray:
        mask = np.zeros((self.grid.n,) * 3)
        mask[0, 0, 0] = 1.0
        return mask

    def weight(self, j: int) -> np.ndarray:
        if j == -1:
            return self.low_mask
        if j < self.jmin or j > self.jmax:
            raise IndexOutOfRange(f"block index {j} outside [-1, {self.jmax}]")
        return self.block_weights[j - self.jmin]


def dyadic_block(u: SpectralField, j: int, part: DyadicPartition | None = None) -> SpectralField:
    """Frequency restriction to the dyadic annulus |k| ~ 2^j (j = -1: the mean mode)."""
    part = part or DyadicPartition.for_grid(u.grid)
    return u.with_coeffs(u.coeffs * part.weight(j))


def low_pass(u: SpectralField, j: int, part: DyadicPartition | None = None) -> SpectralField:
    """S_{j-1} u: the mean block plus all annulus blocks with index < j - 1."""
    part = part or DyadicPartition.for_grid(u.grid)
    w = part.low_mask.copy()
    for jp in part.indices:
        if jp < j - 1:
            w += part.weight(jp)
    return u.with_coeffs(u.coeffs * w)


def reassemble(u: SpectralField, part: DyadicPartition | None = None) -> SpectralField:
    """Sum of the mean block and every annulus block (partition-of-unity check)."""
    part = part or DyadicPartition.for_grid(u.grid)
    total = part.low_mask.copy()
    for j in part.indices:
        total += part.weight(j)
    return u.with_coeffs(u.coeffs * total)


def almost_orthogonality_ratio(u: SpectralField, part: DyadicPartition | None = None) -> float:
    """sum_j ||Delta_j u||_L2^2 / ||u||_L2^2, guaranteed in [1/2, 1] for this chi."""
    part = part or DyadicPartition.for_grid(u.grid)
    total = l2_norm(u) ** 2
    if total == 0.0:
        raise ZeroField("almost-orthogonality ratio of a zero field")
    mag2 = (np.abs(u.coeffs) ** 2).sum(axis=0)
    acc = float(np.sum(part.low_mask**2 * mag2))
    for j in part.indices:
        acc += float(np.sum(part.weight(j) ** 2 * mag2))
    return acc / total


def lattice_lp_norm(f: SpectralField, p) -> float:
    """Volume-normalized lattice L^p norm of the pointwise Euclidean magnitude."""
    phys = inverse_transform(f, check=False).samples
    mag = np.sqrt((phys**2).sum(axis=0))
    if p == np.inf or p == "inf":
        return float(mag.max())
    if p == 1:
        return float(mag.mean())
    if p == 2:
        return float(np.sqrt((mag**2).mean()))
    raise ValueError("p must be 1, 2 or inf (lattice quadrature norms)")


# per-(alpha, p, q) constants: |alpha| = 1, p = q = 2 carries the annulus
# top-edge bound 2; the rest were calibrated at n = 32 over 150 seeded
# annulus-supported random blocks (empirical maxima 0.63, 1.03, 0.39) and
# frozen with a 25% margin
BERNSTEIN_CONSTANTS = {
    ((1, 0, 0), 2, 2): 2.0,
    ((0, 1, 0), 2, 2): 2.0,
    ((0, 0, 1), 2, 2): 2.0,
    ((0, 1, 0), 2, np.inf): 0.8,
    ((0, 0, 0), 2, np.inf): 1.3,
    ((0, 0, 0), 1, 2): 0.5,
}


def bernstein_check(
    u: SpectralField,
    j: int,
    alpha: tuple[int, int, int],
    p,
    q,
    part: DyadicPartition | None = None,
) -> tuple[float, float]:
    """(lhs, rhs_scale) for the annulus derivative/integrability inequality.

    lhs = ||d^alpha Delta_j u||_Lq and rhs_scale = 2^{j(|alpha| + 3(1/p - 1/q))}
    ||Delta_j u||_Lp; the caller asserts lhs <= C_B * rhs_scale against the
    calibrated constant.
    """
    part = part or DyadicPartition.for_grid(u.grid)
    pv = np.inf if p in (np.inf, "inf") else float(p)
    qv = np.inf if q in (np.inf, "inf") else float(q)
    if pv > qv:
        raise ValueError("need p <= q")
    mag2 = (np.abs(u.coeffs) ** 2).sum(axis=0)
    total = float(np.sum(mag2))
    if total > 0.0:
        r = u.grid.k_magnitude
        annulus = (r >= 2.0 ** (j - 1)) & (r <= 2.0 ** (j + 1))
        outside = float(np.sum(mag2[~annulus]))
        if np.sqrt(outside / total) > 1e-10:
            raise SupportViolation(f"spectrum leaks outside the 2^{j} annulus")
    block = dyadic_block(u, j, part)
    k1, k2, k3 = u.grid.wavenumbers
    mult = (1j * k1) ** alpha[0] * (1j * k2) ** alpha[1] * (1j * k3) ** alpha[2]
    deriv = block.with_coeffs(block.coeffs * mult)
    lhs = lattice_lp_norm(deriv, qv)
    inv_p = 0.0 if pv == np.inf else 1.0 / pv
    inv_q = 0.0 if qv == np.inf else 1.0 / qv
    scale = 2.0 ** (j * (sum(alpha) + 3.0 * (inv_p - inv_q)))
    rhs_scale = scale * lattice_lp_norm(block, pv)
    return lhs, rhs_scale


def paraproduct_decompose(
    u: SpectralField, part: DyadicPartition | None = None
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Split (u.grad)u into low-high, high-low, and comparable-frequency sums.

    Each pairwise advection is evaluated pseudospectrally with the grid's
    dealiasing, so the three pieces reassemble the dealiased (u.grad)u
    exactly up to roundoff.
    """
    _require_solenoidal(u, "paraproduct_decompose")
    part = part or DyadicPartition.for_grid(u.grid)
    zero = np.zeros_like(u.coeffs)
    if not np.any(u.coeffs):
        z = u.with_coeffs(zero.copy())
        return z, z.with_coeffs(zero.copy()), z.with_coeffs(zero.copy())

    indices = [-1] + list(part.indices)
    blocks = {j: u.coeffs * part.weight(j) for j in indices}

    pi1 = zero.copy()
    pi2 = zero.copy()
    pi3 = zero.copy()
    # running low-pass sum S_{j-1} = mean block + annulus blocks below j-1
    s_coeffs = part.low_mask * u.coeffs
    for j in part.indices:
        if j - 2 >= part.jmin:
            s_coeffs = s_coeffs + blocks[j - 2]
        pi1 += _advect_arrays(s_coeffs, blocks[j], u.grid)[0]
        pi2 += _advect_arrays(blocks[j], s_coeffs, u.grid)[0]
    for a in indices:
        for b in indices:
            if abs(a - b) <= 1:
                pi3 += _advect_arrays(blocks[a], blocks[b], u.grid)[0]

    def mk(c):
        return u.with_coeffs(c, solenoidal=False, zero_mean=False)

    return mk(pi1), mk(pi2), mk(pi3)


def midband_pair_sum(u: SpectralField, p=2, part: DyadicPartition | None = None) -> float:
    """Diagnostic sum over all annulus block pairs of ||(Delta_j u . grad) Delta_j' u||_Lp.

    Reported as a finite number over the resolved blocks; no a-priori bound
    is asserted.
    """
    part = part or DyadicPartition.for_grid(u.grid)
    total = 0.0
    blocks = {j: u.coeffs * part.weight(j) for j in part.indices}
    for a in part.indices:
        for b in part.indices:
            adv = _advect_arrays(blocks[a], blocks[b], u.grid)[0]
            total += lattice_lp_norm(u.with_coeffs(adv), p)
    return total


def commutator_bound_ratio(u: SpectralField, s: float) -> float:
    """||(u.grad)u||_{H^{s-1}} / ||u||_{H^s}^2 for solenoidal u, s > 3/2."""
    if s <= 1.5:
        raise ValueError("commutator ratio needs s > 3/2")
    _require_solenoidal(u, "commutator_bound_ratio")
    denom = sobolev_norm(u, s)
    if denom == 0.0:
        raise ZeroField("commutator ratio of a zero field")
    return sobolev_norm(advect(u, u), s - 1.0) / denom**2


def commutator_constant(fields, s: float) -> float:
    """Empirical advection constant: max commutator ratio over a field battery."""
    return max(commutator_bound_ratio(f, s) for f in fields)


def block_energies(u: SpectralField, part: DyadicPartition | None = None) -> list[tuple[int, float]]:
    """(j, ||Delta_j u||_L2^2) rows, mean block first."""
    part = part or DyadicPartition.for_grid(u.grid)
    rows = [(-1, l2_norm(dyadic_block(u, -1, part)) ** 2)]
    for j in part.indices:
        rows.append((j, l2_norm(dyadic_block(u, j, part)) ** 2))
    return rows
