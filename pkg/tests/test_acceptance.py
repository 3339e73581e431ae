"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (the lines are printed
even when output capture is on), or as ``python tests/test_acceptance.py``.
"""
import csv
import time
import warnings

import numpy as np
import pytest
import yaml

from oracles import sweep_oracle
from paramchar import cli
from paramchar.calibration import run_calibration
from paramchar.metrics import resource_counts
from paramchar.ppc import characterize, model_distribution
from paramchar.qcore import chi_from_unitary, random_unitary
from paramchar.qpt import run_qpt
from paramchar.simulator import Gate, NoiseProfile, local_transition, readout_matrix

H_GATE = (Gate("H", (0,)),)
CX_GATE = (Gate("CX", (0, 1)),)
TARGETS = (("H", H_GATE, 1), ("CX", CX_GATE, 2))
N_THETA, SHOTS = 51, 5000


@pytest.fixture
def report(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print("\n" + line)
        else:
            print(line)
        assert ok, line

    return emit


def test_criterion_1_noiseless_table(report):
    start = time.perf_counter()
    f = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, target, n in TARGETS:
            noise = NoiseProfile.ideal(n)
            f[name, "ppc"] = characterize(target, noise, n, N_THETA, SHOTS, seed=2024).metrics["process_fidelity"]
            f[name, "qpt"] = run_qpt(target, noise, n, SHOTS, seed=2024).metrics["process_fidelity"]
    elapsed = time.perf_counter() - start
    ok = (f["H", "ppc"] >= 0.999 and 0.97 <= f["H", "qpt"] <= 1.0
          and f["CX", "ppc"] >= 0.995 and 0.96 <= f["CX", "qpt"] <= 1.0 and elapsed <= 60)
    detail = ", ".join(f"{k[0]}/{k[1]}={v:.4f}" for k, v in f.items())
    report(1, ok, f"{detail}, {elapsed:.1f}s")


def test_criterion_2_imaginary_floor(report):
    worst = {"Y": 0.0, "Y+X": 0.0}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for seed in range(20):
            for _, target, n in TARGETS:
                for label, axes in (("Y", ("Y",)), ("Y+X", ("Y", "X"))):
                    r = characterize(target, NoiseProfile.ideal(n), n, N_THETA, SHOTS, axes=axes, seed=seed)
                    worst[label] = max(worst[label], r.metrics["max_abs_imag_chi"])
    ok = max(worst.values()) <= 0.021
    report(2, ok, f"max |Im chi| over 20 seeds: Y-only {worst['Y']:.2e}, Y+X {worst['Y+X']:.2e} (bound 0.021)")


def test_criterion_3_resource_crossover(report):
    ok = True
    for nt in (31, 51, 71):
        for n in range(1, 7):
            rc = resource_counts(n, nt)
            ok &= (rc.n_ppc_total > rc.n_qpt) if n <= 2 else (rc.n_ppc_total < rc.n_qpt)
    exact = resource_counts(3, 51)
    ok &= exact.n_ppc_total == 1020 and exact.n_qpt == 1728
    report(3, ok, f"crossover at n=3 for n_theta in 31/51/71; N_PPC(3,51)={exact.n_ppc_total}, N_QPT(3)={exact.n_qpt}")


def test_criterion_4_spam_isolation(report):
    wins = {"H": 0, "CX": 0}
    margins = {"H": [], "CX": []}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for seed in range(20):
            rng = np.random.default_rng(7000 + seed)
            for name, target, n in TARGETS:
                T = local_transition([readout_matrix(*rng.uniform(0.90, 0.95, 2)) for _ in range(n)])
                noise = NoiseProfile.uniform(n, T, 0.05)
                ppc = characterize(target, noise, n, N_THETA, SHOTS, seed=seed).metrics["gauge_aligned_fidelity"]
                qpt = run_qpt(target, noise, n, SHOTS, seed=seed).metrics["process_fidelity"]
                wins[name] += ppc > qpt
                margins[name].append(ppc - qpt)
    ok = wins["H"] >= 18 and wins["CX"] >= 18
    report(4, ok, f"PPC beats QPT: H {wins['H']}/20, CX {wins['CX']}/20; "
                  f"median margin H {np.median(margins['H']):.3f}, CX {np.median(margins['CX']):.3f}")


def test_criterion_5_oracle_equivalence(report):
    rng = np.random.default_rng(55)
    model_dev = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        U = random_unitary(2**n, rng)
        k, s = int(rng.integers(2 ** (n - 1))), int(rng.integers(n))
        axis = str(rng.choice(["Y", "X"]))
        theta = float(rng.uniform(-np.pi, np.pi))
        dev = np.max(np.abs(model_distribution(U, k, s, axis, n, theta) - sweep_oracle(U, k, s, axis, theta, n)))
        model_dev = max(model_dev, dev)

    qpt_dev = 0.0
    for i in range(20):
        n = 1 + i % 2
        U = random_unitary(2**n, rng)
        chi = run_qpt(U, NoiseProfile.ideal(n), n, exact=True).chi.chi
        qpt_dev = max(qpt_dev, np.max(np.abs(chi - chi_from_unitary(U).chi)))

    ppc_worst = 1.0
    for i in range(10):
        n = 1 + i % 2
        U = random_unitary(2**n, rng)
        T = local_transition([readout_matrix(*rng.uniform(0.85, 0.97, 2)) for _ in range(n)])
        noise = NoiseProfile.uniform(n, T, float(rng.uniform(-0.1, 0.1)))
        r = characterize(U, noise, n, 20, exact=True, axes=("Y", "X"))
        ppc_worst = min(ppc_worst, r.metrics["gauge_aligned_fidelity"])

    ok = model_dev < 1e-12 and qpt_dev < 1e-9 and ppc_worst >= 1 - 1e-8
    report(5, ok, f"model vs oracle {model_dev:.1e}, QPT exact {qpt_dev:.1e}, PPC exact+SPAM F_min={ppc_worst:.12f}")


def test_criterion_6_calibration_recovery(report):
    rates = {}
    for n in (1, 2):
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(9000 + 100 * n + seed)
            T = local_transition([readout_matrix(*rng.uniform(0.90, 0.95, 2)) for _ in range(n)])
            theta0 = 0.05
            noise = NoiseProfile.uniform(n, T, theta0)
            cal, _ = run_calibration(n, N_THETA, noise, SHOTS, seed=seed)
            t_err = np.max(np.abs(cal.transition - T))
            p_err = max(abs(v - theta0) for v in cal.prep_phase.values())
            hits += t_err <= 0.01 and p_err <= 0.02
        rates[n] = hits / 100
    ok = all(r >= 0.95 for r in rates.values())
    report(6, ok, f"recovered within 0.01/0.02: n=1 {rates[1]:.0%}, n=2 {rates[2]:.0%}")


def test_criterion_7_stderr_scaling(report, tmp_path):
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text(yaml.safe_dump({
        "schema_version": 1, "kind": "calibration", "n": 1, "seed": 77,
        "n_theta_grid": list(range(11, 72, 10)), "shots_grid": [1000, 5000], "repeats": 4,
        "axes": ["Y"], "noise": {"preset": "paper_like"}, "output_dir": str(tmp_path), "output": "sweep.csv",
    }))
    assert cli.main(["sweep", str(cfg)]) == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    slopes = {}
    for shots in ("1000", "5000"):
        for name in sorted({r["parameter"] for r in rows}):
            sel = [r for r in rows if r["parameter"] == name and r["shots"] == shots]
            x = np.log([float(r["n_theta"]) for r in sel])
            y = np.log([float(r["std_error"]) for r in sel])
            slopes[name, shots] = float(np.polyfit(x, y, 1)[0])
    ok = all(-0.6 <= s <= -0.4 for s in slopes.values())
    lo, hi = min(slopes.values()), max(slopes.values())
    report(7, ok, f"log-log slope of std error vs n_theta over {len(slopes)} (parameter, shots) series: "
                  f"{lo:.3f} .. {hi:.3f}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
