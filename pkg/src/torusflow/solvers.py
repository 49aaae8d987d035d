"""Three time-discretizations of the incompressible flow on the torus.

strong-imex : exact integrating factor for the viscous term, Heun (RK2)
              for the projected advection and forcing.
mild-duhamel: exponential integrator discretizing the Duhamel integral
              with phi-function (exponential-trapezoidal) weights; exact
              on linear flow for any step size.
weak-galerkin: the strong step followed by a sharp spectral cutoff
              |k|^2 <= lambda_N after every update (torus Stokes
              eigenfunctions are the Fourier modes).

All schemes advance mean-free solenoidal fields and re-project each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadCutoff, BlowUpDetected, CflViolation
from .spectral import (
    GridSpec,
    PhysicalField,
    SpectralField,
    _advect_arrays,
    _require_solenoidal,
    advect,
    curl,
    forward_transform,
    inverse_transform,
    leray_project,
    sobolev_norm,
    zero_mean,
)

SCHEMES = ("weak-galerkin", "mild-duhamel", "strong-imex")

CFL_SAFETY = 0.5
BLOWUP_NORM_FACTOR = 1e3
BLOWUP_BKM_LIMIT = 1e6
GUARD_NORM_INDEX = 2.0


@dataclass(frozen=True)
class SolverParams:
    """Time-stepping parameters shared by the three schemes."""

    nu: float
    dt: float
    t_end: float
    scheme: str = "strong-imex"
    galerkin_modes: float | None = None  # squared-wavenumber cutoff; None = full resolution
    forcing: SpectralField | None = None  # steady solenoidal forcing
    seed: int = 0

    def __post_init__(self):
        if self.nu < 0.0:
            raise ValueError("viscosity must be nonnegative")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered snapshots produced by one scheme."""

    params: SolverParams
    snapshots: list[SpectralField] = field(default_factory=list)
    scheme: str = ""

    def __post_init__(self):
        if not self.scheme:
            object.__setattr__(self, "scheme", self.params.scheme)
        times = [s.time for s in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.asarray([s.time for s in self.snapshots])

    @property
    def grid(self) -> GridSpec:
        return self.snapshots[0].grid


# ----------------------------------------------------------------------
# canonical initial data

def taylor_green_init(grid: GridSpec) -> SpectralField:
    """u = (sin x1 cos x2 cos x3, -cos x1 sin x2 cos x3, 0); eight active modes."""
    x1, x2, x3 = grid.coordinates
    samples = np.stack((
        np.sin(x1) * np.cos(x2) * np.cos(x3),
        -np.cos(x1) * np.sin(x2) * np.cos(x3),
        np.zeros_like(x1),
    ))
    f = forward_transform(PhysicalField(grid, samples, label="taylor-green"))
    return replace(f, solenoidal=True, zero_mean=True)


def shear_init(grid: GridSpec) -> SpectralField:
    """u = (0, sin x1, 0): unidirectional shear whose advection term vanishes.

    Under viscosity nu with no forcing the exact solution is e^{-nu t} times
    the datum, which makes it the closed-form benchmark for every scheme
    and residual.
    """
    x1, _, _ = grid.coordinates
    samples = np.stack((np.zeros_like(x1), np.sin(x1), np.zeros_like(x1)))
    f = forward_transform(PhysicalField(grid, samples, label="shear"))
    return replace(f, solenoidal=True, zero_mean=True)


def random_solenoidal_init(grid: GridSpec, s: float, seed: int) -> SpectralField:
    """Seeded random field with |uhat(k)| ~ (1+|k|^2)^-(s+1), unit H^s norm."""
    rng = np.random.default_rng(seed)
    white = rng.standard_normal((3, grid.n, grid.n, grid.n))
    c = np.fft.fftn(white, axes=(1, 2, 3)) / grid.n**3
    c *= (1.0 + grid.k_squared) ** (-(s + 1.0))
    f = leray_project(SpectralField(grid, c, label=f"random-{seed}"))
    f = zero_mean(f)
    norm = sobolev_norm(f, s)
    return f.with_coeffs(f.coeffs / norm)


# ----------------------------------------------------------------------
# single steps

def _phi1(z: np.ndarray) -> np.ndarray:
    out = np.ones_like(z)
    nz = z != 0.0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    out = np.full_like(z, 0.5)
    nz = z != 0.0
    out[nz] = (np.expm1(z[nz]) - z[nz]) / z[nz] ** 2
    return out


def _rhs(u: SpectralField, p: SolverParams):
    """Projected tendency -P[(u.grad)u] + P f and the lattice max |u|."""
    adv, umax = _advect_arrays(u.coeffs, u.coeffs, u.grid)
    rhs = -leray_project(u.with_coeffs(adv)).coeffs
    if p.forcing is not None:
        fterm = p.forcing if p.forcing.solenoidal else leray_project(p.forcing)
        rhs = rhs + fterm.coeffs
    return rhs, umax


def cfl_limit(umax: float, grid: GridSpec) -> float:
    """Largest advectively stable dt: CFL_SAFETY / (n * max |u|)."""
    if umax == 0.0:
        return math.inf
    return CFL_SAFETY / (grid.n * umax)


def _gate_cfl(dt: float, umax: float, grid: GridSpec):
    limit = cfl_limit(umax, grid)
    if dt > limit:
        raise CflViolation(f"dt = {dt:g} exceeds advective limit {limit:g}")


def step_strong(u: SpectralField, p: SolverParams) -> SpectralField:
    """One integrating-factor Heun step."""
    _require_solenoidal(u, "step_strong")
    n0, umax = _rhs(u, p)
    _gate_cfl(p.dt, umax, u.grid)
    decay = np.exp(-p.nu * p.dt * u.grid.k_squared)
    pred = u.with_coeffs(decay * (u.coeffs + p.dt * n0), solenoidal=True)
    n1, _ = _rhs(pred, p)
    out = decay * u.coeffs + 0.5 * p.dt * (decay * n0 + n1)
    return u.with_coeffs(out, solenoidal=True, time=u.time + p.dt)


def step_mild(u: SpectralField, p: SolverParams) -> SpectralField:
    """One exponential-trapezoidal step of the Duhamel integral."""
    _require_solenoidal(u, "step_mild")
    n0, umax = _rhs(u, p)
    _gate_cfl(p.dt, umax, u.grid)
    z = -p.nu * p.dt * u.grid.k_squared
    decay = np.exp(z)
    phi1 = _phi1(z)
    predictor = decay * u.coeffs + p.dt * phi1 * n0
    n1, _ = _rhs(u.with_coeffs(predictor, solenoidal=True), p)
    out = predictor + p.dt * _phi2(z) * (n1 - n0)
    return u.with_coeffs(out, solenoidal=True, time=u.time + p.dt)


def galerkin_mask(grid: GridSpec, lam: float) -> np.ndarray:
    """Sharp cutoff retaining modes with |k|^2 <= lam."""
    if lam < 1.0:
        raise BadCutoff("galerkin cutoff below the first nonzero mode")
    return (grid.k_squared <= lam).astype(np.float64)


def _step_for(scheme: str):
    return step_mild if scheme == "mild-duhamel" else step_strong


# ----------------------------------------------------------------------
# drivers

def run(u0: SpectralField, p: SolverParams, cadence: int = 1) -> Trajectory:
    """Evolve u0 to t_end, recording every `cadence`-th step (plus endpoints).

    Every step re-projects onto mean-free solenoidal fields.  A blow-up
    guard raises BlowUpDetected (carrying the partial trajectory) when the
    H^2 norm exceeds 1e3 times its initial value or the vorticity maximum
    passes 1e6.
    """
    if cadence < 1:
        raise ValueError("cadence must be >= 1")
    steps = int(round(p.t_end / p.dt))
    if abs(steps * p.dt - p.t_end) > 1e-9 * max(p.dt, p.t_end):
        raise ValueError("t_end must be an integer multiple of dt")

    mask = None
    if p.scheme == "weak-galerkin" and p.galerkin_modes is not None:
        mask = galerkin_mask(u0.grid, p.galerkin_modes)

    u = zero_mean(leray_project(u0))
    if mask is not None:
        u = u.with_coeffs(u.coeffs * mask)
    t0 = u.time
    guard_norm0 = sobolev_norm(u, GUARD_NORM_INDEX)
    step = _step_for(p.scheme)

    snapshots = [u]
    for m in range(1, steps + 1):
        u = step(u, p)
        u = zero_mean(leray_project(u))
        if mask is not None:
            u = u.with_coeffs(u.coeffs * mask)
        u = replace(u, time=t0 + m * p.dt)
        recorded = m % cadence == 0 or m == steps
        if recorded:
            snapshots.append(u)
        if guard_norm0 > 0.0:
            hs = sobolev_norm(u, GUARD_NORM_INDEX)
            if hs > BLOWUP_NORM_FACTOR * guard_norm0 or not math.isfinite(hs):
                raise BlowUpDetected(
                    f"H^{GUARD_NORM_INDEX:g} norm {hs:.3e} exceeds guard at t = {u.time:g}",
                    Trajectory(p, snapshots),
                )
            if recorded:
                # vorticity maximum needs physical samples; check at snapshot cadence
                wmax = float(
                    np.sqrt(
                        (inverse_transform(curl(u), check=False).samples ** 2).sum(axis=0)
                    ).max()
                )
                if wmax > BLOWUP_BKM_LIMIT:
                    raise BlowUpDetected(
                        f"vorticity maximum {wmax:.3e} exceeds guard at t = {u.time:g}",
                        Trajectory(p, snapshots),
                    )
    return Trajectory(p, snapshots)


def run_weak_galerkin(u0: SpectralField, p: SolverParams, cadence: int = 1) -> Trajectory:
    """Galerkin-truncated run; p.galerkin_modes is the squared-|k| cutoff."""
    return run(u0, replace(p, scheme="weak-galerkin"), cadence=cadence)


# ----------------------------------------------------------------------
# pressure and lifespan

def pressure_solve(u: SpectralField) -> SpectralField:
    """Zero-mean pressure from -lap p = div[(u.grad)u], scalar in component 1.

    phat(k) = i k.Ghat(k) / |k|^2 with G the dealiased advection transform;
    the gradient-level multiplier bound ||grad p|| <= ||(u.grad)u|| holds
    mode by mode.
    """
    _require_solenoidal(u, "pressure_solve")
    conv = advect(u, u)
    k1, k2, k3 = u.grid.deriv_wavenumbers
    kk = k1 * k1 + k2 * k2 + k3 * k3
    safe = np.where(kk > 0.0, kk, 1.0)
    c = conv.coeffs
    phat = np.where(kk > 0.0, 1j * (k1 * c[0] + k2 * c[1] + k3 * c[2]) / safe, 0.0)
    out = np.zeros_like(c)
    out[0] = phat
    return u.with_coeffs(out, solenoidal=False, zero_mean=True)


def lifespan_lower_bound(u0_norm: float, f_norm: float, nu: float, c_s: float) -> float:
    """Guaranteed existence time nu / (4 C^2 (||u0||_{H^s}^2 + ||f||^2)).

    On the mean-free torus the first Stokes eigenvalue is 1, so the
    constant C equals the advection (commutator) constant c_s.  Returns
    +inf when the data vanish (the bound degenerates).
    """
    if min(u0_norm, f_norm, nu, c_s) < 0.0:
        raise ValueError("lifespan inputs must be nonnegative")
    denom = 4.0 * c_s**2 * (u0_norm**2 + f_norm**2)
    if denom == 0.0:
        return math.inf
    return nu / denom
