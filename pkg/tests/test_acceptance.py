"""Acceptance criteria, one summary line each (see the terminal summary).

Desk-scale variants run by default.  Full-scale variants are marked
fullscale and run with GLIDEPATH_FULLSCALE=1.
"""
from pathlib import Path
import subprocess
import sys
import time

import numpy as np
import pytest

from glidepath import (HISTORICAL, MortalityDistribution, OptimizerConfig, gradient_random, optimize,
                       scenario, starting_glidepaths, success_probability_random)
from glidepath.cli import main
from glidepath.exceptions import BoundaryError
from glidepath.files import write_glidepath
from glidepath.quasiconcavity import verify_counterexample

DATA = Path(__file__).parent / "data"
STARTS = list(starting_glidepaths())


def _close(check, number, name, value, target, tol):
    ok = abs(value - target) <= tol
    return check(number, name, ok, f"{value:.10f} vs {target:.10f} +- {tol:g}")


def _optimize_scenario(number, start, precision, epsilon, method=None):
    sc = scenario(number)
    cfg = OptimizerConfig(method=method or sc.method, epsilon=epsilon, dp_precision=precision,
                          dp_rf_max=sc.dp_rf_max)
    return optimize(sc.params, starting_glidepaths()[start], sc.withdrawal_rate, cfg)


def _scenario_one(check, precision, epsilon, p_tol, end_tol):
    results = []
    for start in STARTS:
        res = _optimize_scenario(1, start, precision, epsilon)
        _close(check, 1, f"P* from {start}", res.probability, 0.9196892347, p_tol)
        _close(check, 1, f"alpha_1 from {start}", res.glidepath[0], 0.36848, end_tol)
        _close(check, 1, f"alpha_30 from {start}", res.glidepath[-1], 0.77657, end_tol)
        check(1, f"negative definite from {start}", res.max_eigenvalue < 0, f"{res.max_eigenvalue:.3e}")
        results.append(res)
    spread = max(np.max(np.abs(r.glidepath - results[0].glidepath)) for r in results)
    check(1, "starts agree", spread < end_tol, f"max spread {spread:.2e}")
    return results


def test_criterion_1_scenario_one_desk(criterion):
    _scenario_one(criterion, precision=1000, epsilon=1e-6, p_tol=1e-4, end_tol=5e-3)
    assert not criterion.failures(), criterion.failures()


@pytest.mark.fullscale
def test_criterion_1_scenario_one_fullscale(criterion):
    _scenario_one(criterion, precision=5000, epsilon=1e-11, p_tol=1e-6, end_tol=5e-4)
    assert not criterion.failures(), criterion.failures()


def _scenario_four(check, starts, precision, epsilon, p_tol):
    for start in starts:
        res = _optimize_scenario(4, start, precision, epsilon)
        _close(check, 2, f"P* from {start}", res.probability, 0.5998654133, p_tol)
        peak = int(np.argmax(res.glidepath)) + 1
        check(2, f"peak year from {start}", abs(peak - 9) <= 1, f"year {peak}")


def test_criterion_2_scenario_four_desk(criterion):
    _scenario_four(criterion, ["constant", "random1"], precision=1000, epsilon=1e-6, p_tol=1e-3)
    assert not criterion.failures(), criterion.failures()


@pytest.mark.fullscale
def test_criterion_2_scenario_four_fullscale(criterion):
    _scenario_four(criterion, STARTS, precision=5000, epsilon=1e-11, p_tol=1e-4)
    assert not criterion.failures(), criterion.failures()


def _scenario_eight_checks(check, res):
    a = res.glidepath
    check(3, "first 11 ratios at 1.0", bool(np.all(a[:11] == 1.0)),
          "ratios 1-11: " + " ".join(f"{x:.6f}" for x in a[:11]))
    # the reported 30 ratios have ten leading ones (see tests/test_ruin.py)
    check(3, "first 10 ratios at 1.0", bool(np.all(a[:10] == 1.0)))
    _close(check, 3, "final ratio", a[-1], 0.4961, 5e-3)
    check(3, "negative definite", res.max_eigenvalue < 0, f"{res.max_eigenvalue:.3e}")


def _newton_refuses(check, start, precision):
    sc = scenario(8)
    # the scenario's own epsilon, so Newton has to iterate from a converged start
    cfg = OptimizerConfig(method="nr", epsilon=sc.epsilon, dp_precision=precision)
    try:
        optimize(sc.params, start, sc.withdrawal_rate, cfg)
    except BoundaryError as exc:
        check(3, "Newton refuses at the boundary", "gradient ascent" in str(exc), str(exc)[:60])
    else:
        check(3, "Newton refuses at the boundary", False, "no BoundaryError")


def test_criterion_3_scenario_eight_desk(criterion):
    # warm start: gradient ascent at precision 1000 from the constant start, epsilon 1e-6
    stage1 = np.loadtxt(DATA / "s8_stage1.txt")
    sc = scenario(8)
    cfg = OptimizerConfig(method="ga", epsilon=1e-6, dp_precision=2000)
    res = optimize(sc.params, stage1, sc.withdrawal_rate, cfg)
    _scenario_eight_checks(criterion, res)
    _newton_refuses(criterion, stage1, 1000)
    assert not criterion.failures(), criterion.failures()


@pytest.mark.fullscale
def test_criterion_3_scenario_eight_fullscale(criterion):
    sc = scenario(8)
    for start in STARTS:
        stage1 = _optimize_scenario(8, start, 1000, 1e-5)
        cfg = OptimizerConfig(method="ga", epsilon=1e-7, dp_precision=2000)
        res = optimize(sc.params, stage1.glidepath, sc.withdrawal_rate, cfg)
        _scenario_eight_checks(criterion, res)
    _newton_refuses(criterion, res.glidepath, 2000)
    assert not criterion.failures(), criterion.failures()


GP_1 = (0.439547, 0.137059)
GP_2 = (0.140591, 0.999999)
LAM, WR = 0.688882, 0.586352


def test_criterion_4_counterexample(criterion):
    t0 = time.perf_counter()
    mc = verify_counterexample(HISTORICAL, GP_1, GP_2, LAM, WR, method="mc", budget=10 ** 7, seed=0)
    criterion(4, "MC counterexample", mc.is_counterexample,
              f"P_c {mc.p_c:.6f} vs {mc.p_1:.6f}, {mc.p_2:.6f}")
    for name, p, ref, se in zip(("P_1", "P_2", "P_c"), (mc.p_1, mc.p_2, mc.p_c),
                                (0.158522, 0.190762, 0.148574), mc.standard_errors()):
        _close(criterion, 4, f"MC {name} within 4 SE", p, ref, 4 * se)
    grid = verify_counterexample(HISTORICAL, GP_1, GP_2, LAM, WR, method="grid", budget=263_460)
    _close(criterion, 4, "grid P_c - P_2", grid.diff_c2, -0.042246, 2e-4)
    _close(criterion, 4, "grid P_1 - P_c", grid.diff_1c, 0.010014, 2e-4)
    elapsed = time.perf_counter() - t0
    criterion(4, "runtime under 10 minutes", elapsed < 600, f"{elapsed:.0f} s")
    assert not criterion.failures(), criterion.failures()


def _synthetic_mortality():
    """Bell-shaped P(T_D = t), t = 0..48, peaking in the mid-twenties."""
    t = np.arange(49)
    w = np.exp(-0.5 * ((t - 24.0) / 8.0) ** 2)
    return w / w.sum()


def test_criterion_5_random_horizon(criterion):
    full = MortalityDistribution.normalized(_synthetic_mortality())
    criterion(5, "synthetic table has 48 withdrawal times", full.max_horizon == 48, str(full.max_horizon))
    cfg = OptimizerConfig(dp_precision=1000, dp_rf_max=4.0)
    h = 1e-4

    def fd(mort, gp, t, wr):
        e = np.zeros(gp.size)
        e[t] = h
        return (success_probability_random(HISTORICAL, gp + e, wr, mort, cfg)
                - success_probability_random(HISTORICAL, gp - e, wr, mort, cfg)) / (2 * h)

    # desk scale: the first six probabilities, S_max = 5, every element
    mort5 = MortalityDistribution.normalized(_synthetic_mortality()[:6] + 0.01)
    gp5 = np.array([0.45, 0.55, 0.6, 0.65, 0.7])
    g5 = gradient_random(HISTORICAL, gp5, 0.15, mort5, cfg).elements
    err5 = max(abs(g5[t] - fd(mort5, gp5, t, 0.15)) for t in range(5))
    criterion(5, "gradient vs finite differences, S_max=5", err5 < 1e-4, f"max error {err5:.2e}")

    # the full 48-point table, a few elements
    gp48 = np.linspace(0.4, 0.8, 48)
    g48 = gradient_random(HISTORICAL, gp48, 0.04, full, cfg).elements
    err48 = max(abs(g48[t] - fd(full, gp48, t, 0.04)) for t in (0, 23, 47))
    criterion(5, "gradient vs finite differences, S_max=48", err48 < 1e-4, f"max error {err48:.2e}")

    ocfg = OptimizerConfig(dp_precision=800, dp_rf_max=4.0, epsilon=1e-8)
    start = [0.5] * 5
    fixed = optimize(HISTORICAL, start, 0.15, ocfg)
    rand = optimize(HISTORICAL, start, 0.15, ocfg, MortalityDistribution.point_mass(5))
    same = np.array_equal(fixed.glidepath, rand.glidepath) and fixed.probability == rand.probability
    criterion(5, "point mass recovers fixed horizon", same,
              f"{fixed.probability!r} vs {rand.probability!r}")
    assert not criterion.failures(), criterion.failures()


PROPERTY_TESTS = [
    "tests/test_densities.py::test_density_integrates_to_one",
    "tests/test_densities.py::test_cdf_matches_integrated_pdf",
    "tests/test_densities.py::test_gradient_density_identity",
    "tests/test_densities.py::test_hessian_density_identity",
    "tests/test_optimizer.py::test_gradient_matches_finite_differences",
    "tests/test_optimizer.py::test_hessian_two_period_matches_finite_differences",
    "tests/test_optimizer.py::test_hessian_matches_gradient_differences",
    "tests/test_ruin.py::test_dp_agrees_with_monte_carlo",
    "tests/test_ruin.py::test_single_period_closed_form",
    "tests/test_ruin.py::test_single_period_grid_rounding_bound",
    "tests/test_ruin.py::test_success_set_is_convex",
    "tests/test_ruin.py::test_sequence_of_returns_asymmetry_witness",
    "tests/test_stats_tests.py::test_equality_test_calibration",
]


def test_criterion_6_property_suites(criterion):
    root = Path(__file__).parent.parent
    for node in PROPERTY_TESTS:
        proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", node],
                              cwd=root, capture_output=True, text=True)
        last = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
        criterion(6, node.split("::")[1], proc.returncode == 0, last)
    assert not criterion.failures(), criterion.failures()


def test_criterion_7_simulation_determinism(criterion, tmp_path):
    outputs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir()
        (d / "control.txt").write_text(
            "0.082509 0.0402696529 0.021409 0.0069605649 0.000734418 0.0\n"
            "3 0.2 0.01\nga sim 50000 0.05 0.5\n")
        write_glidepath(d / "gp.txt", [0.5, 0.5, 0.5])
        rc = main(["run", str(d), "--seed", "11", "--workers", "3", "-q"])
        criterion(7, f"run {name} exits 0", rc == 0, f"exit {rc}")
        outputs.append((d / "output.txt").read_bytes())
    criterion(7, "byte-identical output.txt", outputs[0] == outputs[1])
    assert not criterion.failures(), criterion.failures()

