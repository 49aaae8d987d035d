"""Observables, residual functionals for the three solution formulations,
and the band-blending reconstruction pipeline with its convergence studies.

Residual conventions
--------------------
weak    : space-time integral against divergence-free test functions built
          from a cubic B-spline time bump and the twelve lowest solenoidal
          Fourier modes, plus the initial-datum term.
mild    : defect of the Duhamel integral identity at the final time, with
          a semigroup-stable trapezoidal recurrence for the integral.
strong  : pointwise momentum-equation residual at interior snapshot times,
          with centered differences in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateSequence,
    GridMismatch,
    NonSolenoidalTest,
    TimeGridMismatch,
    TooFewSnapshots,
)
from .operators import MollifierSpec, WeightPartition, blend, regularize, smooth
from .solvers import SolverParams, Trajectory
from .spectral import (
    GridSpec,
    PhysicalField,
    SpectralField,
    _advect_arrays,
    advect,
    curl,
    divergence,
    divergence_defect,
    forward_transform,
    inner_product,
    inverse_transform,
    l2_norm,
    leray_project,
    sobolev_norm,
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Per-snapshot scalar observables.

    res_weak is the trailing-interval energy-identity defect, res_mild the
    running Duhamel defect up to this time, res_strong the centered-difference
    momentum residual (0.0 at the endpoints where no stencil exists).
    """

    t: float
    energy: float
    enstrophy: float
    bkm: float
    div_defect: float
    res_weak: float
    res_mild: float
    res_strong: float
    hs_norms: dict[float, float]

    def validate(self):
        vals = [self.t, self.energy, self.enstrophy, self.bkm, self.div_defect,
                self.res_weak, self.res_mild, self.res_strong, *self.hs_norms.values()]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("diagnostics entries must be finite")
        if min(self.energy, self.enstrophy, self.bkm, self.div_defect) < 0.0:
            raise ValueError("energy, enstrophy, bkm and div_defect must be nonnegative")


# ----------------------------------------------------------------------
# observables

def kinetic_energy(u: SpectralField) -> float:
    """E = (1/2) sum_k |uhat(k)|^2 (volume-normalized)."""
    return 0.5 * l2_norm(u) ** 2


def enstrophy(u: SpectralField) -> float:
    """||grad u||_L2^2 = sum_k |k|^2 |uhat(k)|^2."""
    mag2 = (np.abs(u.coeffs) ** 2).sum(axis=0)
    return float(np.sum(u.grid.k_squared * mag2))


def bkm_monitor(u: SpectralField) -> float:
    """Lattice maximum of |curl u|."""
    w = inverse_transform(curl(u), check=False).samples
    return float(np.sqrt((w**2).sum(axis=0)).max())


# ----------------------------------------------------------------------
# energy identity

def energy_identity_residual(traj: Trajectory, p: SolverParams) -> np.ndarray:
    """Per-interval defect |dE + nu int ||grad u||^2 dt - int <f,u> dt| (trapezoidal)."""
    if len(traj.snapshots) < 2:
        raise TooFewSnapshots("energy identity needs at least two snapshots")
    snaps = traj.snapshots
    energies = [kinetic_energy(s) for s in snaps]
    dissip = [enstrophy(s) for s in snaps]
    power = [0.0] * len(snaps)
    if p.forcing is not None:
        power = [inner_product(p.forcing, s) for s in snaps]
    out = []
    for m in range(len(snaps) - 1):
        dt = snaps[m + 1].time - snaps[m].time
        visc = 0.5 * dt * (dissip[m] + dissip[m + 1])
        work = 0.5 * dt * (power[m] + power[m + 1])
        out.append(abs(energies[m + 1] - energies[m] + p.nu * visc - work))
    return np.asarray(out)


# ----------------------------------------------------------------------
# weak-form residual

@dataclass(frozen=True)
class SpaceTimeTestFunction:
    """Separable test function v(x, t) = b(t) * mode(x) with b compactly supported."""

    mode: SpectralField
    bump: Callable[[float], float]
    bump_dt: Callable[[float], float]
    support: tuple[float, float]


def _cubic_bspline(s: float) -> float:
    """Cubic B-spline on [0, 4], maximum 2/3 at s = 2."""
    if s <= 0.0 or s >= 4.0:
        return 0.0
    if s < 1.0:
        return s**3 / 6.0
    if s < 2.0:
        t = s - 1.0
        return (-3.0 * t**3 + 3.0 * t**2 + 3.0 * t + 1.0) / 6.0
    if s < 3.0:
        t = 3.0 - s
        return (-3.0 * t**3 + 3.0 * t**2 + 3.0 * t + 1.0) / 6.0
    return (4.0 - s) ** 3 / 6.0


def _cubic_bspline_dt(s: float) -> float:
    if s <= 0.0 or s >= 4.0:
        return 0.0
    if s < 1.0:
        return 0.5 * s**2
    if s < 2.0:
        t = s - 1.0
        return (-9.0 * t**2 + 6.0 * t + 3.0) / 6.0
    if s < 3.0:
        t = 3.0 - s
        return -(-9.0 * t**2 + 6.0 * t + 3.0) / 6.0
    return -0.5 * (4.0 - s) ** 2


def weak_test_battery(
    grid: GridSpec, t0: float, t1: float, times: np.ndarray | None = None
) -> list[SpaceTimeTestFunction]:
    """Twelve lowest solenoidal Fourier modes times a cubic B-spline bump.

    The bump is supported strictly inside (t0, t1), so the initial-datum
    term vanishes for these test functions.  When the snapshot times are
    supplied (uniform grid), the spline knots snap to even snapshot indices;
    the B-spline's third derivative jumps then sit on quadrature panel
    boundaries instead of inside panels, and the same bump is reused across
    nested dt refinements.
    """
    if t1 <= t0:
        raise ValueError("need t1 > t0")
    span = t1 - t0
    lo = t0 + span / 8.0
    h = 3.0 * span / 16.0
    if times is not None and len(times) >= 13:
        dts = np.diff(np.asarray(times, dtype=float))
        if np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
            panel = 2.0 * float(dts[0])
            h = panel * max(1, round(h / panel))
            while 4.0 * h >= span - 2.0 * panel and h > panel:
                h -= panel
            lo = t0 + panel * max(1, round((span - 4.0 * h) / (2.0 * panel)))

    def bump(t, lo=lo, h=h):
        return _cubic_bspline((t - lo) / h)

    def bump_dt(t, lo=lo, h=h):
        return _cubic_bspline_dt((t - lo) / h) / h

    x = grid.coordinates
    tests = []
    for axis in range(3):
        for pol in range(3):
            if pol == axis:
                continue
            for phase, fn in (("cos", np.cos), ("sin", np.sin)):
                samples = np.zeros((3, grid.n, grid.n, grid.n))
                samples[pol] = fn(x[axis])
                mode = forward_transform(
                    PhysicalField(grid, samples, label=f"{phase}(x{axis + 1})e{pol + 1}")
                )
                mode = replace(mode, solenoidal=True, zero_mean=True)
                tests.append(SpaceTimeTestFunction(mode, bump, bump_dt, (lo, lo + 4.0 * h)))
    return tests


def _time_quadrature_weights(times: np.ndarray) -> np.ndarray:
    """Composite Simpson weights on a uniform grid (trapezoid fallback)."""
    m = len(times)
    dt = np.diff(times)
    uniform = m >= 3 and np.allclose(dt, dt[0], rtol=1e-9, atol=0.0)
    w = np.zeros(m)
    if uniform and m % 2 == 1:
        h = float(dt[0])
        w[0] = w[-1] = h / 3.0
        w[1:-1:2] = 4.0 * h / 3.0
        w[2:-1:2] = 2.0 * h / 3.0
        return w
    if uniform and m >= 4:
        # even count: Simpson on the first m-1 points, trapezoid on the last gap
        h = float(dt[0])
        w[: m - 1] = _time_quadrature_weights(times[: m - 1])
        w[m - 2] += 0.5 * h
        w[m - 1] += 0.5 * h
        return w
    w[0] = 0.5 * dt[0]
    w[-1] = 0.5 * dt[-1]
    for i in range(1, m - 1):
        w[i] = 0.5 * (dt[i - 1] + dt[i])
    return w


def weak_form_residual(
    traj: Trajectory,
    pressures: Sequence[SpectralField] | None,
    tests: Sequence[SpaceTimeTestFunction],
    p: SolverParams,
) -> float:
    """Max normalized weak-form defect over the test battery.

    For each test v the defect is the space-time quadrature of
    <u, dt v> - <(u.grad)u, v> - nu <grad u, grad v> + <p, div v> + <f, v>
    plus the initial-datum term <u0, v(0)>.
    """
    snaps = traj.snapshots
    if len(snaps) < 2:
        raise TooFewSnapshots("weak residual needs at least two snapshots")
    for v in tests:
        if divergence_defect(v.mode) > 1e-12:
            raise NonSolenoidalTest(f"test mode {v.mode.label!r} is not divergence-free")
    times = traj.times
    qw = _time_quadrature_weights(times)

    conv = [advect(s, s) for s in snaps]
    worst = 0.0
    for v in tests:
        mode = v.mode
        k2 = mode.grid.k_squared
        total = 0.0
        for m, s in enumerate(snaps):
            b = v.bump(s.time)
            bdot = v.bump_dt(s.time)
            term = bdot * inner_product(s, mode)
            if b != 0.0:
                term -= b * inner_product(conv[m], mode)
                # <grad u, grad v> = sum_k |k|^2 uhat . conj(vhat)
                term -= p.nu * b * float(
                    np.sum(k2 * (s.coeffs * np.conj(mode.coeffs)).sum(axis=0)).real
                )
                if pressures is not None:
                    term += b * inner_product(pressures[m], divergence(mode))
                if p.forcing is not None:
                    term += b * inner_product(p.forcing, mode)
            total += qw[m] * term
        total += v.bump(snaps[0].time) * inner_product(snaps[0], mode)
        span = float(times[-1] - times[0])
        bump_scale = math.sqrt(
            sum(qw[m] * (v.bump(t) ** 2 + v.bump_dt(t) ** 2) for m, t in enumerate(times))
        )
        norm = bump_scale * sobolev_norm(mode, 1.0) * max(span, 1.0)
        worst = max(worst, abs(total) / norm)
    return worst


# ----------------------------------------------------------------------
# mild (Duhamel) residual

def _duhamel_defects(traj: Trajectory, p: SolverParams, s: float) -> list[float]:
    """Normalized Duhamel-identity defect at every snapshot time.

    Uses the recurrence I_m = e^{nu dt lap}(I_{m-1} + dt/2 N_{m-1}) + dt/2 N_m,
    which reproduces the trapezoidal rule with only decaying propagator
    factors.
    """
    snaps = traj.snapshots
    grid = traj.grid
    k2 = grid.k_squared
    u0 = snaps[0]
    norm0 = sobolev_norm(u0, s)
    scale = norm0 if norm0 > 0.0 else 1.0

    forcing = None
    if p.forcing is not None:
        f = p.forcing if p.forcing.solenoidal else leray_project(p.forcing)
        forcing = f.coeffs

    def proj_nl(u: SpectralField) -> np.ndarray:
        return leray_project(u.with_coeffs(_advect_arrays(u.coeffs, u.coeffs, grid)[0])).coeffs

    defects = [0.0]
    integral = np.zeros_like(u0.coeffs)
    propagated = u0.coeffs.copy()
    n_prev = proj_nl(u0)
    for m in range(1, len(snaps)):
        dt = snaps[m].time - snaps[m - 1].time
        decay = np.exp(-p.nu * dt * k2)
        n_curr = proj_nl(snaps[m])
        integral = decay * (integral + 0.5 * dt * n_prev) + 0.5 * dt * n_curr
        propagated = decay * propagated
        expected = propagated - integral
        if forcing is not None:
            # steady forcing integrates exactly: int_0^t e^{nu (t-tau) lap} d tau
            t = snaps[m].time - snaps[0].time
            z = -p.nu * t * k2
            denom = p.nu * k2
            safe = np.where(denom > 0.0, denom, 1.0)
            phi = np.where(denom > 0.0, -np.expm1(z) / safe, t)
            expected = expected + phi * forcing
        diff = snaps[m].with_coeffs(snaps[m].coeffs - expected)
        defects.append(sobolev_norm(diff, s) / scale)
        n_prev = n_curr
    return defects


def mild_residual(traj: Trajectory, p: SolverParams, s: float = 1.0) -> float:
    """Duhamel-identity defect at the final time, normalized by ||u0||_{H^s}.

    A single-snapshot trajectory (zero horizon) has defect 0 by definition.
    """
    if len(traj.snapshots) < 2:
        return 0.0
    return _duhamel_defects(traj, p, s)[-1]


# ----------------------------------------------------------------------
# strong residual

def strong_residual(traj: Trajectory, p: SolverParams) -> float:
    """Max over interior snapshots of ||dt u + P[(u.grad)u] - nu lap u - P f||_L2."""
    snaps = traj.snapshots
    if len(snaps) < 3:
        raise TooFewSnapshots("strong residual needs at least three snapshots")
    grid = traj.grid
    k2 = grid.k_squared
    forcing = None
    if p.forcing is not None:
        f = p.forcing if p.forcing.solenoidal else leray_project(p.forcing)
        forcing = f.coeffs
    worst = 0.0
    for m in range(1, len(snaps) - 1):
        dt_left = snaps[m].time - snaps[m - 1].time
        dt_right = snaps[m + 1].time - snaps[m].time
        dudt = (snaps[m + 1].coeffs - snaps[m - 1].coeffs) / (dt_left + dt_right)
        u = snaps[m]
        nl = leray_project(u.with_coeffs(_advect_arrays(u.coeffs, u.coeffs, grid)[0])).coeffs
        res = dudt + nl + p.nu * k2 * u.coeffs
        if forcing is not None:
            res = res - forcing
        worst = max(worst, l2_norm(u.with_coeffs(res)))
    return worst


def vorticity_residual(traj: Trajectory, p: SolverParams) -> float:
    """Max interior L2 defect of the curl of the momentum equation.

    dt w + (u.grad)w - (w.grad)u - nu lap w - curl f, with dt by centered
    differences on the trajectory.
    """
    snaps = traj.snapshots
    if len(snaps) < 3:
        raise TooFewSnapshots("vorticity residual needs at least three snapshots")
    grid = traj.grid
    k2 = grid.k_squared
    curl_f = None
    if p.forcing is not None:
        curl_f = curl(p.forcing).coeffs
    vort = [curl(s) for s in snaps]
    worst = 0.0
    for m in range(1, len(snaps) - 1):
        dt_left = snaps[m].time - snaps[m - 1].time
        dt_right = snaps[m + 1].time - snaps[m].time
        dwdt = (vort[m + 1].coeffs - vort[m - 1].coeffs) / (dt_left + dt_right)
        u, w = snaps[m], vort[m]
        stretch = _advect_arrays(w.coeffs, u.coeffs, grid)[0]
        transport = _advect_arrays(u.coeffs, w.coeffs, grid)[0]
        res = dwdt + transport - stretch + p.nu * k2 * w.coeffs
        if curl_f is not None:
            res = res - curl_f
        worst = max(worst, l2_norm(u.with_coeffs(res)))
    return worst


# ----------------------------------------------------------------------
# per-trajectory records and CSV

def records_for_trajectory(
    traj: Trajectory, p: SolverParams, s_list: Sequence[float] = (1.0, 2.0, 3.0)
) -> list[DiagnosticsRecord]:
    snaps = traj.snapshots
    mild = _duhamel_defects(traj, p, 1.0) if len(snaps) >= 2 else [0.0] * len(snaps)
    energy_defects = (
        energy_identity_residual(traj, p) if len(snaps) >= 2 else np.zeros(0)
    )
    grid = traj.grid
    k2 = grid.k_squared
    records = []
    for m, s in enumerate(snaps):
        if 0 < m < len(snaps) - 1:
            dt_left = s.time - snaps[m - 1].time
            dt_right = snaps[m + 1].time - s.time
            dudt = (snaps[m + 1].coeffs - snaps[m - 1].coeffs) / (dt_left + dt_right)
            nl = leray_project(s.with_coeffs(_advect_arrays(s.coeffs, s.coeffs, grid)[0])).coeffs
            res = dudt + nl + p.nu * k2 * s.coeffs
            if p.forcing is not None:
                f = p.forcing if p.forcing.solenoidal else leray_project(p.forcing)
                res = res - f.coeffs
            res_strong = l2_norm(s.with_coeffs(res))
        else:
            res_strong = 0.0
        rec = DiagnosticsRecord(
            t=s.time,
            energy=kinetic_energy(s),
            enstrophy=enstrophy(s),
            bkm=bkm_monitor(s),
            div_defect=divergence_defect(s),
            res_weak=float(energy_defects[m - 1]) if m > 0 and len(energy_defects) else 0.0,
            res_mild=float(mild[m]),
            res_strong=float(res_strong),
            hs_norms={float(sv): sobolev_norm(s, float(sv)) for sv in s_list},
        )
        rec.validate()
        records.append(rec)
    return records


CSV_HEADER = "t,energy,enstrophy,bkm,div_defect,res_weak,res_mild,res_strong,h1,h2,h3"


def diagnostics_csv(records: Sequence[DiagnosticsRecord]) -> str:
    """Render records with shortest round-trip decimals, one row per snapshot."""
    lines = [CSV_HEADER]
    for r in records:
        vals = [r.t, r.energy, r.enstrophy, r.bkm, r.div_defect,
                r.res_weak, r.res_mild, r.res_strong,
                r.hs_norms.get(1.0, 0.0), r.hs_norms.get(2.0, 0.0), r.hs_norms.get(3.0, 0.0)]
        lines.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# unified reconstruction pipeline

def unified_reconstruction(
    weak_traj: Trajectory,
    mild_traj: Trajectory,
    strong_traj: Trajectory,
    w: WeightPartition,
    spec: MollifierSpec,
    variant: str = "weighted",
) -> Trajectory:
    """Per snapshot: regularize each scheme's field, blend the three bands,
    then apply the low-pass smoothing; returns the blended trajectory."""
    trajs = (weak_traj, mild_traj, strong_traj)
    grid = trajs[0].grid
    for t in trajs[1:]:
        if t.grid != grid:
            raise GridMismatch("trajectories live on different grids")
    times = [t.times for t in trajs]
    if any(len(tv) != len(times[0]) for tv in times) or any(
        np.max(np.abs(tv - times[0])) > 1e-12 for tv in times[1:]
    ):
        raise TimeGridMismatch("trajectories must share the snapshot time grid")

    out = []
    for sw, sm, ss in zip(*[t.snapshots for t in trajs]):
        rw, rm, rs = (regularize(f, spec) for f in (sw, sm, ss))
        merged = blend(rw, rm, rs, w, spec, variant=variant)
        merged = smooth(merged, spec)
        out.append(replace(merged, time=sm.time))
    return Trajectory(weak_traj.params, out, scheme="unified")


@dataclass(frozen=True)
class ConvergenceStudy:
    eps: np.ndarray
    errors: np.ndarray
    slope: float | None
    monotone: bool
    exact: bool


def convergence_study(
    builder: Callable[[float], SpectralField],
    eps_seq: Sequence[float],
    s: float,
    reference: SpectralField | None = None,
) -> ConvergenceStudy:
    """Errors of builder(eps) against a reference, with a log-log slope fit.

    With no explicit reference the finest-eps member serves as one and is
    excluded from the fit.  All-zero errors are reported as exact.
    """
    eps = [float(e) for e in eps_seq]
    if len(eps) < 4 or any(e <= 0 for e in eps) or any(
        b >= a for a, b in zip(eps, eps[1:])
    ):
        raise DegenerateSequence("need >= 4 strictly decreasing positive scales")
    fields = [builder(e) for e in eps]
    ref = reference if reference is not None else fields[-1]
    errs = [sobolev_norm(f.with_coeffs(f.coeffs - ref.coeffs), s) for f in fields]
    if reference is None:
        fit_eps, fit_errs = eps[:-1], errs[:-1]
    else:
        fit_eps, fit_errs = eps, errs
    scale = max(sobolev_norm(ref, s), 1.0)
    exact = all(e <= 1e-14 * scale for e in fit_errs)
    slope = None
    if not exact and all(e > 0 for e in fit_errs):
        slope = float(np.polyfit(np.log(fit_eps), np.log(fit_errs), 1)[0])
    monotone = all(b <= a * (1.0 + 1e-12) for a, b in zip(errs, errs[1:]))
    return ConvergenceStudy(np.asarray(eps), np.asarray(errs), slope, monotone, exact)
