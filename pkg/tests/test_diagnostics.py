import math

import numpy as np
import pytest

from torusflow import (
    GridSpec,
    MollifierSpec,
    SolverParams,
    SpectralField,
    Trajectory,
    bkm_monitor,
    convergence_study,
    default_weights,
    diagnostics_csv,
    energy_identity_residual,
    enstrophy,
    kinetic_energy,
    l2_norm,
    mild_residual,
    physical_l2_norm,
    inverse_transform,
    records_for_trajectory,
    run,
    shear_init,
    smooth,
    sobolev_norm,
    strong_residual,
    taylor_green_init,
    unified_reconstruction,
    vorticity_residual,
    weak_form_residual,
    weak_test_battery,
)
from torusflow.diagnostics import CSV_HEADER
from torusflow.errors import (
    DegenerateSequence,
    NonSolenoidalTest,
    TimeGridMismatch,
    TooFewSnapshots,
)


@pytest.fixture(scope="module")
def shear_traj_fine():
    grid = GridSpec(4)
    p = SolverParams(nu=1.0, dt=5e-4, t_end=0.2, scheme="mild-duhamel")
    return run(shear_init(grid), p), p


def test_kinetic_energy_values(grid16):
    assert kinetic_energy(taylor_green_init(grid16)) == pytest.approx(0.125, abs=1e-14)
    assert kinetic_energy(shear_init(grid16)) == pytest.approx(0.25, abs=1e-14)
    zero = SpectralField(grid16, np.zeros((3, 16, 16, 16), dtype=complex))
    assert kinetic_energy(zero) == 0.0


def test_enstrophy_shear(grid16):
    # grad of sin(x1) e2 has L2 norm squared 1/2
    assert enstrophy(shear_init(grid16)) == pytest.approx(0.5, abs=1e-14)


def test_bkm_monitor_values(grid16):
    sh = shear_init(grid16)
    assert bkm_monitor(sh) == pytest.approx(1.0, abs=1e-12)
    doubled = sh.with_coeffs(2.0 * sh.coeffs)
    assert bkm_monitor(doubled) == pytest.approx(2.0, abs=1e-12)
    zero = SpectralField(grid16, np.zeros((3, 16, 16, 16), dtype=complex))
    assert bkm_monitor(zero) == 0.0


def test_bkm_decays_along_shear_trajectory(shear_traj_fine):
    traj, p = shear_traj_fine
    for snap in traj.snapshots[:: len(traj.snapshots) // 4]:
        assert bkm_monitor(snap) == pytest.approx(math.exp(-snap.time), rel=1e-10)


def test_energy_identity_shear_per_interval(shear_traj_fine):
    traj, p = shear_traj_fine
    defects = energy_identity_residual(traj, p)
    assert defects.max() <= 1e-10


def test_energy_identity_zero_trajectory(grid8):
    zero = SpectralField(
        grid8, np.zeros((3, 8, 8, 8), dtype=complex), solenoidal=True, zero_mean=True
    )
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.05)
    traj = run(zero, p)
    assert energy_identity_residual(traj, p).max() == 0.0


def test_energy_identity_needs_two_snapshots(grid8):
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.0)
    traj = run(shear_init(grid8), p)
    with pytest.raises(TooFewSnapshots):
        energy_identity_residual(traj, p)


def test_energy_identity_richardson_ratio(grid16):
    tg = taylor_green_init(grid16)
    sums = []
    for dt in (2e-3, 1e-3):
        p = SolverParams(nu=0.1, dt=dt, t_end=0.04, scheme="strong-imex")
        traj = run(tg, p)
        sums.append(float(np.sum(energy_identity_residual(traj, p))))
    assert sums[0] / sums[1] == pytest.approx(4.0, abs=0.5)


def test_weak_residual_shear_quadrature_level(shear_traj_fine):
    traj, p = shear_traj_fine
    tests = weak_test_battery(traj.grid, 0.0, 0.2, times=traj.times)
    assert len(tests) == 12
    assert weak_form_residual(traj, None, tests, p) <= 1e-10


def test_weak_residual_orthogonal_mode_vanishes(shear_traj_fine):
    traj, p = shear_traj_fine
    tests = weak_test_battery(traj.grid, 0.0, 0.2, times=traj.times)
    # modes polarized off e2 or varying off x1 never see the shear flow
    orthogonal = [v for v in tests if "e2" not in v.mode.label]
    assert orthogonal, "battery should contain modes orthogonal to the shear"
    assert weak_form_residual(traj, None, orthogonal, p) <= 1e-14


def test_weak_residual_taylor_green_orthogonal_battery(grid8):
    # the Taylor-Green cascade never populates |k| = 1 modes, so the whole
    # battery is spectrally orthogonal to the trajectory
    tg = taylor_green_init(grid8)
    p = SolverParams(nu=0.1, dt=2e-3, t_end=0.08, scheme="strong-imex")
    traj = run(tg, p)
    tests = weak_test_battery(grid8, 0.0, 0.08, times=traj.times)
    assert weak_form_residual(traj, None, tests, p) <= 1e-15


def test_weak_residual_pressure_term_inert_for_solenoidal_tests(shear_traj_fine):
    # divergence-free test modes never see the pressure; supplying the
    # per-snapshot pressure fields must not move the residual
    traj, p = shear_traj_fine
    from torusflow import pressure_solve

    short = Trajectory(p, traj.snapshots[:41])
    tests = weak_test_battery(short.grid, 0.0, short.snapshots[-1].time, times=short.times)
    pressures = [pressure_solve(s) for s in short.snapshots]
    with_p = weak_form_residual(short, pressures, tests, p)
    without = weak_form_residual(short, None, tests, p)
    assert with_p == without


def test_weak_residual_rejects_divergent_test(shear_traj_fine, grid8):
    traj, p = shear_traj_fine
    tests = weak_test_battery(traj.grid, 0.0, 0.2)
    bad_coeffs = np.zeros_like(tests[0].mode.coeffs)
    bad_coeffs[0, 1, 0, 0] = 1.0j
    bad_coeffs[0, -1, 0, 0] = -1.0j
    bad = tests[0].__class__(
        mode=tests[0].mode.with_coeffs(bad_coeffs, solenoidal=False),
        bump=tests[0].bump,
        bump_dt=tests[0].bump_dt,
        support=tests[0].support,
    )
    with pytest.raises(NonSolenoidalTest):
        weak_form_residual(traj, None, [bad], p)


def test_weak_residual_second_order(grid8):
    # datum with strong low-mode nonlinearity so the scheme error registers
    # against the |k| = 1 battery
    from torusflow import random_solenoidal_init

    u0 = random_solenoidal_init(grid8, 1.5, 3)
    u0 = u0.with_coeffs(u0.coeffs * 4.0)
    residuals = []
    for dt in (4e-3, 2e-3, 1e-3):
        p = SolverParams(nu=0.1, dt=dt, t_end=0.08, scheme="strong-imex")
        traj = run(u0, p)
        tests = weak_test_battery(grid8, 0.0, 0.08, times=traj.times)
        residuals.append(weak_form_residual(traj, None, tests, p))
    assert residuals[0] > residuals[1] > residuals[2]
    assert residuals[1] / residuals[2] == pytest.approx(4.0, abs=1.2)


def test_mild_residual_shear(shear_traj_fine):
    traj, p = shear_traj_fine
    assert mild_residual(traj, p) <= 1e-10


def test_shear_strong_residual_second_order():
    # on the closed-form trajectory the only error is the centered stencil
    grid = GridSpec(4)
    values = []
    for dt in (1e-3, 5e-4):
        p = SolverParams(nu=1.0, dt=dt, t_end=0.1, scheme="mild-duhamel")
        traj = run(shear_init(grid), p)
        values.append(strong_residual(traj, p))
    assert values[0] / values[1] == pytest.approx(4.0, abs=0.5)


def test_mild_residual_zero_horizon(grid8):
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.0)
    traj = run(shear_init(grid8), p)
    assert mild_residual(traj, p) == 0.0


def test_mild_residual_second_order_on_taylor_green(grid8):
    tg = taylor_green_init(grid8)
    residuals = []
    for dt in (2e-3, 1e-3):
        p = SolverParams(nu=0.1, dt=dt, t_end=0.08, scheme="strong-imex")
        traj = run(tg, p)
        residuals.append(mild_residual(traj, p))
    assert residuals[0] / residuals[1] == pytest.approx(4.0, abs=1.2)


def test_strong_residual_shear_centered_difference_level(shear_traj_fine):
    traj, p = shear_traj_fine
    # third time derivative of e^{-t} is O(1): centered error ~ dt^2 / 6
    assert strong_residual(traj, p) <= 1e-6


def test_residuals_on_manufactured_steady_state(grid8):
    # u = shear with f = nu * u balances viscosity exactly: the constant
    # trajectory must satisfy the pointwise equation and the Duhamel
    # identity (whose forcing integral is evaluated in closed form)
    nu = 1.0
    sh = shear_init(grid8)
    forcing = sh.with_coeffs(nu * sh.coeffs)
    p = SolverParams(nu=nu, dt=1e-2, t_end=0.03, scheme="mild-duhamel", forcing=forcing)
    snaps = [sh.with_coeffs(sh.coeffs, time=t) for t in (0.0, 0.01, 0.02, 0.03)]
    traj = Trajectory(p, snaps)
    assert strong_residual(traj, p) <= 1e-10
    assert mild_residual(traj, p) <= 1e-10


def test_strong_residual_zero_trajectory(grid8):
    zero = SpectralField(
        grid8, np.zeros((3, 8, 8, 8), dtype=complex), solenoidal=True, zero_mean=True
    )
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.05)
    traj = run(zero, p)
    assert strong_residual(traj, p) == 0.0
    with pytest.raises(TooFewSnapshots):
        strong_residual(Trajectory(p, traj.snapshots[:2]), p)


def test_vorticity_residual_second_order(grid8):
    tg = taylor_green_init(grid8)
    values = []
    for dt in (2e-3, 1e-3):
        p = SolverParams(nu=0.1, dt=dt, t_end=0.08, scheme="strong-imex")
        traj = run(tg, p)
        values.append(vorticity_residual(traj, p))
    assert values[0] / values[1] == pytest.approx(4.0, abs=1.2)


def test_unified_reconstruction_identical_triple(grid32):
    tg = taylor_green_init(grid32)
    p = SolverParams(nu=0.1, dt=2e-3, t_end=0.008, scheme="strong-imex")
    traj = run(tg, p)
    w = default_weights(grid32)
    errors = []
    for eps in [2.0**-k for k in range(2, 9)]:
        merged = unified_reconstruction(traj, traj, traj, w, MollifierSpec(eps, "gaussian"))
        err = max(
            sobolev_norm(a.with_coeffs(a.coeffs - b.coeffs), 1.0)
            / sobolev_norm(b, 1.0)
            for a, b in zip(merged.snapshots, traj.snapshots)
        )
        errors.append(err)
    assert all(b <= a for a, b in zip(errors, errors[1:]))
    assert errors[-1] <= 1e-3


def test_unified_reconstruction_zero_trajectories(grid8):
    zero = SpectralField(
        grid8, np.zeros((3, 8, 8, 8), dtype=complex), solenoidal=True, zero_mean=True
    )
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.03)
    traj = run(zero, p)
    merged = unified_reconstruction(
        traj, traj, traj, default_weights(grid8), MollifierSpec(0.1, "gaussian")
    )
    assert all(l2_norm(s) == 0.0 for s in merged.snapshots)


def test_unified_reconstruction_shear_closed_form(grid8):
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.05, scheme="mild-duhamel")
    traj = run(shear_init(grid8), p)
    w = default_weights(grid8)
    merged = unified_reconstruction(
        traj, traj, traj, w, MollifierSpec(2.0**-8, "gaussian")
    )
    sh = shear_init(grid8)
    worst = 0.0
    for snap in merged.snapshots:
        exact = sh.with_coeffs(math.exp(-snap.time) * sh.coeffs)
        worst = max(
            worst,
            sobolev_norm(snap.with_coeffs(snap.coeffs - exact.coeffs), 1.0)
            / sobolev_norm(exact, 1.0),
        )
    # operator-eps error dominates; quadrature/time-scheme error is 1e-10 level
    assert worst <= 1e-3


def test_unified_reconstruction_parseval(grid8):
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.03, scheme="mild-duhamel")
    traj = run(shear_init(grid8), p)
    merged = unified_reconstruction(
        traj, traj, traj, default_weights(grid8), MollifierSpec(0.05, "gaussian")
    )
    for snap in merged.snapshots:
        lattice = physical_l2_norm(inverse_transform(snap)) ** 2
        assert abs(lattice - l2_norm(snap) ** 2) <= 1e-12 * l2_norm(snap) ** 2


def test_unified_reconstruction_time_mismatch(grid8):
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.03, scheme="mild-duhamel")
    a = run(shear_init(grid8), p)
    p2 = SolverParams(nu=1.0, dt=1.5e-2, t_end=0.045, scheme="mild-duhamel")
    b = run(shear_init(grid8), p2)
    with pytest.raises(TimeGridMismatch):
        unified_reconstruction(a, b, a, default_weights(grid8), MollifierSpec(0.1))


def test_convergence_study_gaussian_slope(grid16):
    f = smooth_target(grid16)
    study = convergence_study(
        lambda e: smooth(f, MollifierSpec(e, "gaussian")),
        [2.0**-k for k in range(1, 7)],
        1.0,
        reference=f,
    )
    assert study.slope == pytest.approx(2.0, abs=0.2)
    assert study.monotone
    assert not study.exact


def test_convergence_study_bump_slope(grid16):
    f = smooth_target(grid16)
    study = convergence_study(
        lambda e: smooth(f, MollifierSpec(e, "bump")),
        [2.0**-k for k in range(1, 7)],
        1.0,
        reference=f,
    )
    assert study.slope is not None and study.slope >= 1.8


def test_convergence_study_constant_field_exact(grid8):
    c = np.zeros((3, 8, 8, 8), dtype=complex)
    c[0, 0, 0, 0] = 1.0
    f = SpectralField(grid8, c)
    study = convergence_study(
        lambda e: smooth(f, MollifierSpec(e, "gaussian")),
        [0.5, 0.25, 0.125, 0.0625],
        1.0,
        reference=f,
    )
    assert study.exact
    assert study.slope is None


def test_convergence_study_degenerate_sequences(grid8):
    f = shear_init(grid8)
    build = lambda e: smooth(f, MollifierSpec(e, "gaussian"))
    with pytest.raises(DegenerateSequence):
        convergence_study(build, [0.5, 0.25, 0.125], 1.0)
    with pytest.raises(DegenerateSequence):
        convergence_study(build, [0.5, 0.25, 0.25, 0.125], 1.0)


def smooth_target(grid):
    c = np.repeat(((1.0 + grid.k_squared) ** -3.0)[None], 3, axis=0).astype(complex)
    return SpectralField(grid, c)


def test_records_and_csv(shear_traj_fine):
    traj, p = shear_traj_fine
    short = Trajectory(p, traj.snapshots[:5])
    records = records_for_trajectory(short, p)
    text = diagnostics_csv(records)
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 6
    for rec in records:
        rec.validate()
        assert set(rec.hs_norms) == {1.0, 2.0, 3.0}
    # shortest round-trip decimals: parsing back reproduces the floats
    first = lines[1].split(",")
    assert float(first[1]) == records[0].energy
    # determinism
    assert diagnostics_csv(records) == text
