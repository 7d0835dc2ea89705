"""Acceptance criteria, one test each, at the stated tolerances and time limits.

Every test prints a single ``PASS``/``FAIL`` line (visible with ``-s`` or in
the captured report) before asserting.
"""
import json
import time

import numpy as np
import pytest

from cocyclelab import CircleCocycle, CocycleField
from cocyclelab.cli import main
from cocyclelab.config import DEFAULT_ROTATION, ExperimentConfig
from cocyclelab.experiments import conjugate, run_experiment
from cocyclelab.invariance import sample_leaf_pairs, su_defect
from cocyclelab.lyapunov import full_spectrum, integrated_exponent, periodic_exponents, top_exponent
from cocyclelab.symplectic import (
    diagonal_block,
    random_symplectic_near_identity,
    rotation_block,
    symplectic_defect,
    symplectify,
)


def verdict(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"\ncriterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


# 1 -------------------------------------------------------------------------------------


def _random_word_defect(d: int, n: int, seed: int) -> float:
    # generator sizes keep |B| representable over 1e4 steps without rescaling
    rng = np.random.default_rng(seed)
    M = np.eye(2 * d)
    worst = 0.0
    for _ in range(n):
        u = rng.integers(3)
        if u == 0:
            G = rotation_block(rng.uniform(-np.pi, np.pi), d)
        elif u == 1:
            G = diagonal_block(rng.uniform(-0.05, 0.05), d)
        else:
            G = random_symplectic_near_identity(0.05, int(rng.integers(2**31)), d).entries
        M = symplectify(G @ M).entries
        worst = max(worst, float(symplectic_defect(M)))
    return worst


def test_criterion_01_symplectic_closure(capsys):
    worst, dt = _timed(lambda: max(_random_word_defect(1, 10_000, 1), _random_word_defect(2, 10_000, 2)))
    verdict(capsys, 1, worst < 1e-9 and dt < 5, f"max defect {worst:.2e} (< 1e-9), {dt:.2f}s (< 5s)")


# 2 -------------------------------------------------------------------------------------


def test_criterion_02_constant_spectrum(model, capsys):
    def run():
        A = CocycleField.constant(model, np.diag([2.0, 0.5]))
        spec = full_spectrum(A, model.volume_sample(1, 0)[0], 10_000)
        err = float(np.max(np.abs(spec.exponents - [np.log(2), -np.log(2)])))
        oracle_err = 0.0
        for k in (1, 2, 3, 4, 5):
            leaf = model.leaf_with_period(k)
            exact = periodic_exponents(A, leaf, 0.5)
            it = top_exponent(CircleCocycle(A, leaf), 0.5, 10_000)
            oracle_err = max(oracle_err, abs(it.value - exact.top), abs(exact.top - np.log(2)))
        return err, oracle_err

    (err, oracle_err), dt = _timed(run)
    ok = err < 1e-3 and oracle_err < 1e-6 and dt < 10
    verdict(capsys, 2, ok, f"spectrum error {err:.1e} (< 1e-3), periodic oracle {oracle_err:.1e} (< 1e-6), {dt:.1f}s")


# 3 -------------------------------------------------------------------------------------

# symplectic shear coupling the two planes of R^4; without it d = 2 blocks act diagonally
SHEAR = "constant 1.0 0.0 0.0 0.5 0.0 1.0 0.5 0.0 0.0 0.0 1.0 0.0 0.0 0.0 0.0 1.0"

# (config block, also run the conjugated theta-perturbed copy)
SPECTRUM_CASES = {
    "rotation": ({"d": "1", "term0": DEFAULT_ROTATION}, True),
    "diag-rotation": ({"d": "1", "term0": "diagonal 0.3 + 0.4*cos(1,0,0)", "term1": "rotation 0.7*sin(0,1,0)"}, False),
    "constant-hyperbolic": ({"d": "1", "term0": "constant 2.0 1.0 1.0 1.0"}, False),
    "sp4-coupled": (
        {"d": "2", "term0": "rotation 0.3*sin(1,0,0) + 0.2*cos(0,1,1)", "term1": "diagonal 0.2 + 0.2*cos(1,1,0)",
         "term2": SHEAR},
        True,
    ),
    "sp4-rotation": ({"d": "2", "term0": "rotation 0.5*sin(1,0,0) + 0.4*cos(0,1,0)", "term1": SHEAR}, False),
}


def test_criterion_03_pairing_symmetry(model, capsys):
    def run():
        worst_pair, worst_sum, count = 0.0, 0.0, 0
        P = model.volume_sample(1, 3)[0]
        for block, with_copy in SPECTRUM_CASES.values():
            A = CocycleField.from_config(model, {"alpha": "1.0", **block})
            variants = [A, conjugate(A.perturb_global_rotation(0.3), 0.2)] if with_copy else [A]
            for B in variants:
                spec = full_spectrum(B, P, 10_000)
                worst_pair = max(worst_pair, spec.pairing_residual)
                worst_sum = max(worst_sum, abs(spec.exponent_sum))
                count += 1
        return worst_pair, worst_sum, count

    (pair, total, count), dt = _timed(run)
    ok = pair < 1e-3 and total < 1e-6 and dt < 30
    verdict(capsys, 3, ok, f"{count} spectra: pairing {pair:.1e} (< 1e-3), sum {total:.1e} (< 1e-6), {dt:.1f}s")


# 4 -------------------------------------------------------------------------------------


def test_criterion_04_bunching_boundary(capsys):
    rep, dt = _timed(lambda: run_experiment(ExperimentConfig().with_experiment(name="E2")))
    emp, closed = rep.results["empirical_boundary"], rep.results["closed_form_boundary"]
    ok = rep.verdicts["boundary_within_grid_step"] and abs(closed - 0.4812) < 1e-4 and dt < 30
    verdict(capsys, 4, ok, f"empirical {emp:.3f} vs closed form {closed:.4f} (grid 0.02), {dt:.1f}s")


# 5 -------------------------------------------------------------------------------------


def test_criterion_05_holonomy_properties(capsys):
    rep, dt = _timed(lambda: run_experiment(ExperimentConfig().with_experiment(name="E3")))
    props = rep.results["properties"]
    detail = (
        f"equiv {max(p['equivariance_residual'] for p in props.values()):.1e}, "
        f"comp {max(p['composition_residual'] for p in props.values()):.1e}, "
        f"slope {rep.results['holder_regression']['slope']:.2f}, "
        f"bridge {rep.results['bridge_independence']:.1e}, "
        f"rate {max(p['max_increment_ratio'] for p in props.values()):.2f} "
        f"(theta {rep.results['certificate']['fitted_theta']:.2f}), {dt:.1f}s"
    )
    verdict(capsys, 5, rep.passed and dt < 60, detail)


# 6 -------------------------------------------------------------------------------------


def test_criterion_06_zero_exponent_baseline(model, capsys):
    ex = ExperimentConfig().experiment

    def run():
        A = CocycleField.from_config(model, {"d": "1", "alpha": "1.0", "term0": DEFAULT_ROTATION})
        lam = integrated_exponent(A, model.volume_sample(ex.n_samples, 11), ex.n_iter)
        pairs = [
            sample_leaf_pairs(model, ex.n_pairs, ex.max_offset, 12, "s"),
            sample_leaf_pairs(model, ex.n_pairs, ex.max_offset, 13, "u"),
        ]
        su = su_defect(A, pairs, ex.n_transient, ex.n_atoms, 14)
        return lam, su

    (lam, su), dt = _timed(run)
    ok = abs(lam.value) < 1e-3 and su.below(2.0) and dt < 60
    verdict(
        capsys, 6, ok,
        f"|lambda+| {abs(lam.value):.1e} (< 1e-3), su-defect {su.mean_defect:.2e} vs 2 SE {2 * su.bootstrap_se:.2e}, {dt:.1f}s",
    )


# 7 -------------------------------------------------------------------------------------


def test_criterion_07_theta_scan(capsys):
    rep, dt = _timed(lambda: run_experiment(ExperimentConfig().with_experiment(name="E4")))
    best = max(rep.results["scan"], key=lambda r: r["value"] - 3 * r["std_error"])
    T = rep.results["leaf"]["T"]
    ok = (
        T >= 5
        and rep.verdicts["grid_spacing_at_most_1_over_4T"]
        and rep.verdicts["positive_theta_exists"]
        and dt < 120
    )
    verdict(
        capsys, 7, ok,
        f"T={T:g}, spacing {rep.results['grid_spacing']:.4f}, theta={best['theta']:+.3f}: "
        f"{best['value']:.4f} +- {best['std_error']:.4f}, {dt:.1f}s",
    )


# 8 -------------------------------------------------------------------------------------


def test_criterion_08_su_breaking(capsys):
    rep, dt = _timed(lambda: run_experiment(ExperimentConfig().with_experiment(name="E5")))
    t = rep.results["table"]
    v = rep.verdicts
    ok = (
        v["after_su_defect_exceeds_5x_baseline"]
        and v["after_exponent_positive"]
        and v["control_su_unchanged_within_2se"]
        and v["control_exponent_unchanged_within_2se"]
        and dt < 300
    )
    base = t["baseline"]["su_defect"]
    verdict(
        capsys, 8, ok,
        f"su-defect {t['after']['su_defect']['mean_defect']:.3f} vs 5 x max(mean, SE) of baseline "
        f"{5 * max(base['mean_defect'], base['bootstrap_se']):.4f}; lambda+ "
        f"{t['after']['lambda_plus']['value']:.4f} +- {t['after']['lambda_plus']['std_error']:.4f}; "
        f"control {'unchanged' if v['control_su_unchanged_within_2se'] else 'changed'}, {dt:.1f}s",
    )


# 9 -------------------------------------------------------------------------------------


def test_criterion_09_openness(capsys):
    rep, dt = _timed(lambda: run_experiment(ExperimentConfig().with_experiment(name="E6")))
    worst = min(p["value"] / p["std_error"] for p in rep.results["perturbations"])
    ok = rep.verdicts["all_perturbations_positive"] and len(rep.results["perturbations"]) == 20 and dt < 300
    verdict(
        capsys, 9, ok,
        f"20 perturbations at delta {rep.results['delta']:.2e}, smallest lambda+/SE {worst:.1f} (> 3), {dt:.1f}s",
    )


# 10 ------------------------------------------------------------------------------------

LIGHT_OPENNESS = "[experiment]\nn_perturbations = 3\nn_sweep = 1\ndelta_grid = 10\n"


COMMANDS = ("spectrum", "bunching", "holonomy", "theta-scan", "su-breaking", "openness")


def test_criterion_10_determinism(tmp_path, capsys):
    light = tmp_path / "light.ini"
    light.write_text(LIGHT_OPENNESS)
    differ = []
    for command in COMMANDS:
        args = ["--config", str(light)] if command == "openness" else []
        texts = []
        for run in ("a", "b"):
            out = tmp_path / command / run
            assert main([command, "--out", str(out), "--seed", "7", *args]) in (0, 1)
            texts.append((out / "report.json").read_bytes())
        json.loads(texts[0])
        if texts[0] != texts[1]:
            differ.append(command)
    detail = "report.json identical across reruns for all six experiments" if not differ else f"differs: {differ}"
    verdict(capsys, 10, not differ, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
