import math

import numpy as np
import pytest

from torusflow import (
    SolverParams,
    SpectralField,
    advect,
    cfl_limit,
    kinetic_energy,
    l2_norm,
    lifespan_lower_bound,
    pressure_solve,
    random_solenoidal_init,
    run,
    run_weak_galerkin,
    shear_init,
    sobolev_norm,
    step_mild,
    step_strong,
    taylor_green_init,
)
from torusflow.errors import BadCutoff, BlowUpDetected, CflViolation
from torusflow.oracles import convolution_nonlinear_term
from torusflow.spectral import divergence_defect, gradient


def diff_norm(a, b, s=0.0):
    return sobolev_norm(a.with_coeffs(a.coeffs - b.coeffs), s)


def test_solver_params_validation():
    with pytest.raises(ValueError):
        SolverParams(nu=-1.0, dt=1e-3, t_end=1.0)
    with pytest.raises(ValueError):
        SolverParams(nu=1.0, dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        SolverParams(nu=1.0, dt=1e-3, t_end=1.0, scheme="leapfrog")


def test_random_init_contract(grid16):
    u = random_solenoidal_init(grid16, 2.0, 42)
    assert sobolev_norm(u, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert divergence_defect(u) <= 1e-12
    again = random_solenoidal_init(grid16, 2.0, 42)
    assert np.array_equal(u.coeffs, again.coeffs)
    other = random_solenoidal_init(grid16, 2.0, 43)
    assert not np.array_equal(u.coeffs, other.coeffs)


def test_taylor_green_energy(grid16):
    assert kinetic_energy(taylor_green_init(grid16)) == pytest.approx(0.125, abs=1e-14)


def test_step_strong_shear_exact_decay(grid8):
    p = SolverParams(nu=1.0, dt=1e-2, t_end=1.0, scheme="strong-imex")
    u = shear_init(grid8)
    for _ in range(10):
        u = step_strong(u, p)
    expected = np.exp(-10 * p.dt)
    assert u.coeffs[1, 1, 0, 0] == pytest.approx(
        expected * shear_init(grid8).coeffs[1, 1, 0, 0], rel=1e-12
    )


def test_step_zero_field_stays_zero(grid8):
    zero = SpectralField(
        grid8, np.zeros((3, 8, 8, 8), dtype=complex), solenoidal=True, zero_mean=True
    )
    p = SolverParams(nu=1.0, dt=1e-2, t_end=1.0)
    assert l2_norm(step_strong(zero, p)) == 0.0
    assert l2_norm(step_mild(zero, p)) == 0.0


def test_step_strong_matches_convolution_oracle(grid16):
    """One Heun step with the FFT nonlinearity against the same scheme driven
    by the O(n^6) convolution sum."""
    tg = taylor_green_init(grid16)
    nu, dt = 0.1, 1e-3
    p = SolverParams(nu=nu, dt=dt, t_end=dt, scheme="strong-imex")

    def oracle_rhs(u):
        nl = convolution_nonlinear_term(u)
        return -nl.coeffs

    decay = np.exp(-nu * dt * grid16.k_squared)
    n0 = oracle_rhs(tg)
    pred = tg.with_coeffs(decay * (tg.coeffs + dt * n0), solenoidal=True)
    n1 = oracle_rhs(pred)
    oracle = decay * tg.coeffs + 0.5 * dt * (decay * n0 + n1)

    ours = step_strong(tg, p)
    rel = np.linalg.norm(ours.coeffs - oracle) / np.linalg.norm(oracle)
    assert rel <= 1e-9


def test_step_mild_exact_linear_flow_any_dt(grid8):
    # any CFL-admissible dt: the exponential integrator is exact on the
    # linear (zero-advection) flow regardless of step size
    sh = shear_init(grid8)
    for dt in (0.05, 0.01, 1e-3):
        p = SolverParams(nu=1.0, dt=dt, t_end=dt, scheme="mild-duhamel")
        out = step_mild(sh, p)
        expected = np.exp(-dt)
        assert out.coeffs[1, 1, 0, 0] == pytest.approx(
            expected * sh.coeffs[1, 1, 0, 0], rel=1e-13
        )


def test_mild_strong_gap_second_order(grid16):
    tg = taylor_green_init(grid16)
    gaps = []
    dts = (4e-3, 2e-3, 1e-3)
    for dt in dts:
        tm = run(tg, SolverParams(nu=0.1, dt=dt, t_end=0.048, scheme="mild-duhamel"))
        ts = run(tg, SolverParams(nu=0.1, dt=dt, t_end=0.048, scheme="strong-imex"))
        gaps.append(
            max(diff_norm(a, b, 1.0) for a, b in zip(tm.snapshots, ts.snapshots))
        )
    slope = np.polyfit(np.log(dts), np.log(gaps), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.3)


def test_run_t_end_zero_single_snapshot(grid8):
    p = SolverParams(nu=1.0, dt=1e-2, t_end=0.0)
    traj = run(shear_init(grid8), p)
    assert len(traj.snapshots) == 1
    assert traj.snapshots[0].time == 0.0


def test_run_determinism_bitwise(grid16):
    u0 = random_solenoidal_init(grid16, 2.0, 5)
    p = SolverParams(nu=0.5, dt=1e-2, t_end=0.05, scheme="strong-imex")
    one = run(u0, p)
    two = run(u0, p)
    assert all(
        np.array_equal(a.coeffs, b.coeffs) for a, b in zip(one.snapshots, two.snapshots)
    )


def test_run_shear_energy_ratio(grid8):
    p = SolverParams(nu=1.0, dt=1e-3, t_end=1.0, scheme="mild-duhamel")
    traj = run(shear_init(grid8), p)
    ratio = kinetic_energy(traj.snapshots[-1]) / kinetic_energy(traj.snapshots[0])
    assert ratio == pytest.approx(math.exp(-2.0), abs=1e-6)


@pytest.mark.parametrize("scheme", ["strong-imex", "mild-duhamel", "weak-galerkin"])
def test_run_preserves_constraints(grid16, scheme):
    u0 = random_solenoidal_init(grid16, 2.0, 8)
    p = SolverParams(
        nu=0.2, dt=2e-3, t_end=0.02, scheme=scheme,
        galerkin_modes=36.0 if scheme == "weak-galerkin" else None,
    )
    traj = run(u0, p)
    for snap in traj.snapshots:
        assert divergence_defect(snap) <= 1e-12
        assert np.max(np.abs(snap.coeffs[:, 0, 0, 0])) == 0.0
    assert np.all(np.diff(traj.times) > 0)


def test_weak_galerkin_discrete_energy_inequality(grid16):
    # truncation only removes energy: the signed per-interval defect
    # E_{m+1} - E_m + nu int ||grad u||^2 stays below the O(dt^2) slack
    from torusflow import enstrophy, kinetic_energy

    tg = taylor_green_init(grid16)
    dt = 2e-3
    p = SolverParams(nu=0.1, dt=dt, t_end=0.04, scheme="weak-galerkin", galerkin_modes=16.0)
    traj = run(tg, p)
    energies = [kinetic_energy(s) for s in traj.snapshots]
    dissip = [enstrophy(s) for s in traj.snapshots]
    for m in range(len(energies) - 1):
        visc = 0.5 * dt * (dissip[m] + dissip[m + 1])
        assert energies[m + 1] - energies[m] + p.nu * visc <= dt**2


def test_cfl_gate(grid8):
    sh = shear_init(grid8)
    limit = cfl_limit(1.0, grid8)
    assert limit == pytest.approx(0.5 / 8.0)
    p = SolverParams(nu=1.0, dt=0.2, t_end=0.2, scheme="strong-imex")
    with pytest.raises(CflViolation):
        step_strong(sh, p)


def test_inviscid_energy_conservation(grid32):
    # nu = 0, f = 0: advection alone must conserve energy under exact
    # dealiasing; T = 0.1, dt = 1e-4, n = 32
    tg = taylor_green_init(grid32)
    p = SolverParams(nu=0.0, dt=1e-4, t_end=0.1, scheme="strong-imex")
    traj = run(tg, p, cadence=1000)
    e0 = kinetic_energy(traj.snapshots[0])
    eT = kinetic_energy(traj.snapshots[-1])
    assert abs(eT - e0) / e0 <= 1e-6


def test_weak_galerkin_full_resolution_bitwise(grid16):
    tg = taylor_green_init(grid16)
    pw = SolverParams(nu=0.1, dt=2e-3, t_end=0.02, scheme="weak-galerkin")
    ps = SolverParams(nu=0.1, dt=2e-3, t_end=0.02, scheme="strong-imex")
    tw = run_weak_galerkin(tg, pw)
    ts = run(tg, ps)
    assert all(
        np.array_equal(a.coeffs, b.coeffs) for a, b in zip(tw.snapshots, ts.snapshots)
    )
    assert tw.scheme == "weak-galerkin"


def test_weak_galerkin_shear_any_cutoff(grid8):
    sh = shear_init(grid8)
    for lam in (1.0, 4.0):
        p = SolverParams(
            nu=1.0, dt=1e-3, t_end=0.1, scheme="weak-galerkin", galerkin_modes=lam
        )
        traj = run_weak_galerkin(sh, p)
        ratio = kinetic_energy(traj.snapshots[-1]) / kinetic_energy(traj.snapshots[0])
        assert ratio == pytest.approx(math.exp(-0.2), rel=1e-10)


def test_weak_galerkin_gap_monotone_in_cutoff(grid16):
    tg = taylor_green_init(grid16)
    full = run(tg, SolverParams(nu=0.1, dt=2e-3, t_end=0.048, scheme="strong-imex"))
    gaps = []
    for lam in (4.0, 16.0, 36.0):
        p = SolverParams(
            nu=0.1, dt=2e-3, t_end=0.048, scheme="weak-galerkin", galerkin_modes=lam
        )
        tw = run_weak_galerkin(tg, p)
        gaps.append(diff_norm(tw.snapshots[-1], full.snapshots[-1]))
    assert gaps[0] > gaps[1] > gaps[2]


def test_weak_galerkin_bad_cutoff(grid8):
    p = SolverParams(
        nu=1.0, dt=1e-3, t_end=0.01, scheme="weak-galerkin", galerkin_modes=0.5
    )
    with pytest.raises(BadCutoff):
        run_weak_galerkin(shear_init(grid8), p)


def test_blowup_guard_reports_with_partial_trajectory(grid8):
    # microscopic datum driven by order-one forcing: the guard norm grows
    # past 1e3 x initial within a few steps
    tiny = shear_init(grid8)
    tiny = tiny.with_coeffs(1e-9 * tiny.coeffs)
    forcing = shear_init(grid8)
    p = SolverParams(
        nu=1e-6, dt=1e-3, t_end=0.1, scheme="strong-imex", forcing=forcing
    )
    with pytest.raises(BlowUpDetected) as excinfo:
        run(tiny, p)
    assert excinfo.value.trajectory is not None
    assert len(excinfo.value.trajectory.snapshots) >= 1


def test_pressure_shear_zero(grid16):
    assert l2_norm(pressure_solve(shear_init(grid16))) <= 1e-15


def test_pressure_synthetic_rhs_zero(grid8):
    # -lap p = div F with F = sin(x2) e1: div F = d1 sin(x2) = 0, so p = 0
    x2 = grid8.coordinates[1]
    from torusflow import PhysicalField, forward_transform
    from torusflow.spectral import divergence

    f = forward_transform(
        PhysicalField(grid8, np.stack([np.sin(x2), np.zeros_like(x2), np.zeros_like(x2)]))
    )
    assert l2_norm(divergence(f)) <= 1e-15


def test_pressure_closed_form_on_vortex(grid16):
    # the classic vortex datum has initial pressure
    # (1/16) (2 + cos 2x3)(cos 2x1 + cos 2x2); pins the sign of the solve,
    # which the zero-cases and the gradient bound cannot see
    from torusflow import inverse_transform

    tg = taylor_green_init(grid16)
    p_phys = inverse_transform(pressure_solve(tg), check=False).samples[0]
    x1, x2, x3 = grid16.coordinates
    closed = (2.0 + np.cos(2 * x3)) * (np.cos(2 * x1) + np.cos(2 * x2)) / 16.0
    assert np.max(np.abs(p_phys - closed)) <= 1e-13


def test_pressure_gradient_bound_100_fields(grid16):
    for seed in range(100):
        u = random_solenoidal_init(grid16, 2.0, seed)
        pr = pressure_solve(u)
        conv = advect(u, u)
        assert l2_norm(gradient(pr)) <= (1.0 + 1e-12) * l2_norm(conv)


def test_lifespan_formula_values():
    assert lifespan_lower_bound(1.0, 0.0, 1.0, 1.0) == 0.25
    assert lifespan_lower_bound(2.0, 0.0, 1.0, 1.0) == 0.0625
    assert lifespan_lower_bound(0.0, 0.0, 1.0, 1.0) == math.inf
    with pytest.raises(ValueError):
        lifespan_lower_bound(-1.0, 0.0, 1.0, 1.0)


def test_lifespan_run_stays_bounded(grid32, advection_constant_16):
    tg = taylor_green_init(grid32)
    t0 = lifespan_lower_bound(sobolev_norm(tg, 2.0), 0.0, 0.1, advection_constant_16)
    steps = max(2, int(math.ceil(t0 / 2e-3)))
    dt = t0 / steps
    p = SolverParams(nu=0.1, dt=dt, t_end=steps * dt, scheme="strong-imex")
    traj = run(tg, p, cadence=max(1, steps // 4))
    h2 = [sobolev_norm(s, 2.0) for s in traj.snapshots]
    assert max(h2) <= 2.0 * h2[0]


def test_forcing_steady_state(grid8):
    # f = nu * u for |k| = 1 shear balances the viscous decay exactly in the
    # continuum; the discrete trajectory must stay within O(dt^2) of it
    nu = 1.0
    sh = shear_init(grid8)
    forcing = sh.with_coeffs(nu * sh.coeffs)
    p = SolverParams(nu=nu, dt=1e-3, t_end=0.1, scheme="mild-duhamel", forcing=forcing)
    traj = run(sh, p)
    drift = diff_norm(traj.snapshots[-1], sh) / l2_norm(sh)
    assert drift <= 1e-5
