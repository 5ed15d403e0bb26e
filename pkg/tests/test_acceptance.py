"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through the ``criterion`` fixture; the
lines are repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from sync_arena.diagnostics import check_well_ordering, circular_diameter, detect_sync, phase_diameters
from sync_arena.experiments import catalog, compare_models, run_scenario, state_at
from sync_arena.integrator import IntegratorConfig, integrate_adaptive, integrate_euler_oracle
from sync_arena.model import CouplingKind, CouplingSpec
from sync_arena.theory import check_hypotheses, predicted_sync_frequency, trapping_time, well_ordering_time

SC = CouplingKind.STRONG_COMPETITION
CL = CouplingKind.CLASSICAL
DELTA = math.pi / 6
N_RANDOM = 50


def _random_instance(seed, strict):
    """Random (k, Θ0, Ω) meeting the sector hypotheses at DELTA with T0 ≤ ~10."""
    gen = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(42,)))
    n = int(gen.integers(2, 13))
    d_omega = float(gen.uniform(0.05, 1.5))
    omega = gen.uniform(0, 1, n)
    omega = (omega - omega.min()) / np.ptp(omega) * d_omega - float(gen.uniform(0, 1))
    rate = float(gen.uniform(0.2, 3.0))
    k = (d_omega + rate) / math.sin(DELTA)
    d0 = math.pi - DELTA
    theta0 = gen.uniform(0, 1, n)
    theta0 = (theta0 - theta0.min()) / np.ptp(theta0)
    if strict or seed % 5:
        theta0 = theta0 * d0 * float(gen.uniform(0.3, 0.999)) + float(gen.uniform(-3, 3))
    else:
        # every fifth instance sits exactly on the boundary D(Θ0) = π − δ
        theta0 = theta0 * d0
        theta0[np.argmax(theta0)] = d0
    return k, theta0, omega


def test_criterion_01_identical_phase_sync(criterion):
    sc = catalog()["identical"]
    start = time.perf_counter()
    run = run_scenario(sc)
    elapsed = time.perf_counter() - start
    cd = run.report.final_circular_diameter
    ok = sc.t_end == 500 and cd < 1e-3 and elapsed < 1.0
    criterion(1, ok, f"circular diameter {cd:.2e} at t=500 (< 1e-3), runtime {elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_02_nonidentical_frequency(criterion):
    sc = catalog()["nonidentical"]
    run = run_scenario(sc)
    dv = run.report.final_velocity_diameter
    freq = run.report.sync_frequency
    ok = (sc.t_end == 200 and sc.k == 1.967 and dv < 1e-3
          and freq is not None and abs(freq - 0.0) <= 1e-3)
    criterion(2, ok, f"D(velocity) {dv:.2e} (< 1e-3), sync frequency {freq!r} (0 ± 1e-3)")
    assert ok


def test_criterion_03_sector_trapping(criterion):
    violations, worst_margin = [], -math.inf
    for seed in range(N_RANDOM):
        k, theta0, omega = _random_instance(seed, strict=False)
        verdict = check_hypotheses("trapping", k, DELTA, omega, theta0)
        assert verdict.holds, seed
        t0 = trapping_time(k, DELTA, np.ptp(omega))
        tr = integrate_adaptive(theta0, omega, CouplingSpec(SC, k), IntegratorConfig(t_end=t0 + 20))
        d = phase_diameters(tr)[tr.times >= t0]
        worst_margin = max(worst_margin, float(d.max() - DELTA))
        if np.any(d > DELTA + 1e-4):
            violations.append(seed)
    ok = not violations
    criterion(3, ok, f"{N_RANDOM} instances, violations {violations}, max D - delta after T0 = {worst_margin:.2e}")
    assert ok


def test_criterion_04_well_ordering(criterion):
    failures = []
    for seed in range(N_RANDOM):
        k, theta0, omega = _random_instance(seed + 1000, strict=True)
        assert check_hypotheses("thm2", k, DELTA, omega, theta0).holds, seed
        coupling = CouplingSpec(SC, k)
        t0 = trapping_time(k, DELTA, np.ptp(omega))
        # the solver error must sit well below the 1e-6 ordering tolerance
        config = IntegratorConfig(t_end=t0, relative_tolerance=1e-10, absolute_tolerance=1e-12)
        t_star = well_ordering_time(k, DELTA, omega, state_at(theta0, omega, coupling, config, t0))
        tr = integrate_adaptive(theta0, omega, coupling, config.replace(t_end=t_star + 20))
        res = check_well_ordering(tr, omega, t_star, tol=1e-6)
        if not res.holds:
            failures.append((seed, res.violation))
    ok = not failures
    criterion(4, ok, f"{N_RANDOM} instances, well-ordering from T* violated in {len(failures)}")
    assert ok


def test_criterion_05_uniform_circle(criterion):
    run = run_scenario(catalog()["uniform-circle"])
    vel = run.trajectory.velocities[-1]
    err = float(np.abs(vel - 0.17321).max())
    ok = vel.size == 6 and err <= 1e-3 and vel.min() > 0.0
    criterion(5, ok, f"max |velocity - 0.17321| = {err:.2e} (<= 1e-3), above max omega = 0")
    assert ok


def test_criterion_06_wrap(criterion):
    run = run_scenario(catalog()["wrap-2pi"])
    final = run.trajectory.states[-1]
    d = float(np.ptp(final))
    cd = circular_diameter(final)
    ok = abs(d - 2 * math.pi) <= 1e-2 and cd < 1e-2
    criterion(6, ok, f"final diameter {d:.6f} (2pi ± 1e-2), circular {cd:.2e} (< 1e-2)")
    assert ok


def test_criterion_07_divergence(criterion):
    sc = catalog()["diverge"]
    res = compare_models(sc)
    cl, scr = res.runs[CL], res.runs[SC]
    same = np.array_equal(cl.trajectory.states[0], scr.trajectory.states[0])
    ok = same and cl.report.freq_synced and not scr.report.freq_synced
    criterion(7, ok, f"seed {sc.seed}: classical freq sync at {cl.report.freq_sync_time}, "
                     f"strong-competition {scr.report.freq_sync_time}")
    assert ok


def test_criterion_08_classical_mean_frequency(criterion):
    worst_sum, worst_freq, runs = 0.0, 0.0, 0
    for sc in catalog().values():
        for seed in (sc.seed, sc.seed + 1):
            theta0, omega = sc.with_updates(seed=seed).initial_conditions()
            tr = integrate_adaptive(theta0, omega, CouplingSpec(CL, sc.k), IntegratorConfig(t_end=sc.t_end))
            runs += 1
            worst_sum = max(worst_sum, float(np.abs(tr.velocities.sum(axis=1) - omega.sum()).max()))
            rep = detect_sync(tr)
            if rep.freq_synced:
                worst_freq = max(worst_freq, abs(rep.sync_frequency - predicted_sync_frequency(CL, omega)))
    ok = worst_sum <= 1e-8 and worst_freq <= 1e-3
    criterion(8, ok, f"{runs} classical runs: max |sum drift| {worst_sum:.1e} (<= 1e-8), "
                     f"max |freq - mean| {worst_freq:.1e} (<= 1e-3)")
    assert ok


def test_criterion_09_integrator_oracles(criterion):
    worst_closed = 0.0
    t = np.linspace(0, 10, 1001)
    for k in (0.5, 1.0, 2.0):
        for phi0 in (math.pi / 4, math.pi / 2, 3 * math.pi / 4):
            tr = integrate_adaptive([0.0, phi0], [0.0, 0.0], CouplingSpec(SC, k),
                                    IntegratorConfig(t_end=10.0, sample_interval=0.01))
            phi = tr.states[:, 1] - tr.states[:, 0]
            exact = 2 * np.arctan(np.tan(phi0 / 2) * np.exp(-k * tr.times))
            assert np.allclose(tr.times, t)
            worst_closed = max(worst_closed, float(np.abs(phi - exact).max()))
    worst_euler, runs, seen = 0.0, 0, set()
    for sc in catalog().values():
        theta0, omega = sc.initial_conditions()
        for kind in sc.models:
            # comparison scenarios repeat their single-model twins exactly
            key = (kind, sc.k, sc.t_end, theta0.tobytes(), omega.tobytes())
            if key in seen:
                continue
            seen.add(key)
            coupling = CouplingSpec(kind, sc.k)
            ad = integrate_adaptive(theta0, omega, coupling, IntegratorConfig(t_end=sc.t_end))
            eu = integrate_euler_oracle(theta0, omega, coupling, 1e-4, sc.t_end, sample_interval=0.1)
            assert ad.states.shape == eu.states.shape
            worst_euler = max(worst_euler, float(np.abs(ad.states - eu.states).max()))
            runs += 1
    ok = worst_closed <= 1e-4 and worst_euler <= 1e-2
    criterion(9, ok, f"closed form sup error {worst_closed:.1e} (<= 1e-4); "
                     f"adaptive vs Euler(1e-4) over {runs} distinct full catalog runs {worst_euler:.1e} (<= 1e-2)")
    assert ok


def test_criterion_10_property_suite(criterion):
    import test_diagnostics
    import test_model
    import test_theory

    trajectories = [test_diagnostics._small_trajectory(seed=s, k=k)
                    for s, k in [(1, 0.2), (2, 0.8), (5, 0.05), (8, 1.5)]]
    props = {
        "SC velocity lower bound": (test_model.test_sc_velocity_bounded_below_by_omega, {}),
        "translation equivariance": (test_model.test_translation_equivariance, {}),
        "permutation equivariance": (test_model.test_permutation_equivariance, {}),
        "2pi-shift invariance": (test_model.test_two_pi_shift_of_one_oscillator, {}),
        "T0 decreasing in k": (test_theory.test_trapping_time_decreasing_in_k, {}),
        "detect_sync threshold monotonicity": (test_diagnostics.test_detect_sync_threshold_monotone,
                                               {"trajectories": trajectories}),
    }
    start = time.perf_counter()
    counts, failed = {}, []
    for name, (test, kwargs) in props.items():
        inner = test.hypothesis.inner_test
        calls = [0]

        def counted(*args, _inner=inner, _calls=calls, **kw):
            _calls[0] += 1
            return _inner(*args, **kw)

        test.hypothesis.inner_test = counted
        try:
            test(**kwargs)
        except Exception as exc:  # recorded, then re-raised below
            failed.append((name, repr(exc)))
        finally:
            test.hypothesis.inner_test = inner
        counts[name] = calls[0]
    elapsed = time.perf_counter() - start
    few = {n: c for n, c in counts.items() if c < 100}
    ok = not failed and not few
    criterion(10, ok, f"{len(props)} properties, min cases {min(counts.values())} (>= 100), "
                      f"failures {failed}, {elapsed:.1f} s")
    assert ok
