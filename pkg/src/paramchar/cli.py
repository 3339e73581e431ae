"""
Command line front end.

    paramchar run CONFIG            # protocol taken from the config
    paramchar characterize CONFIG   # rotational sweeps only
    paramchar qpt CONFIG            # tomography only
    paramchar calibrate CONFIG      # calibration.json + calibration sweeps
    paramchar compare A.json B.json
    paramchar sweep SWEEP_CONFIG
    paramchar resources --n-theta 31 51 71

Exit status: 0 on success, 2 for invalid input (nothing is written), 3 when a
fit or reconstruction fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
import warnings

import numpy as np

from . import config as cfgmod
from . import metrics
from .calibration import cached_calibration, calibration_hyperparameter_sweep, parameter_table, run_calibration
from .errors import (
    ConfigError,
    DegenerateRowError,
    FitFailureError,
    IllConditionedError,
    IncompleteCalibrationError,
    InvalidArgumentError,
    RankDeficiencyError,
)
from .ppc import characterize
from .qpt import run_qpt, write_lambda_csv
from .report import ProcessReport, ProtocolResult, write_chi_csv
from .simulator import Gate, target_circuit
from .sweeps import write_sweeps_csv

EXIT_OK, EXIT_INVALID, EXIT_FIT = 0, 2, 3
FIT_ERRORS = (FitFailureError, IllConditionedError, DegenerateRowError, RankDeficiencyError,
              IncompleteCalibrationError)
SWEEP_CSV_HEADER = ("n_theta", "shots", "parameter", "estimate", "std_error")


def _overrides(args):
    out = {}
    for key in ("seed", "shots", "n_theta", "output_dir"):
        out[key] = getattr(args, key, None)
    if getattr(args, "exact", False):
        out["exact"] = True
    return out


def _echo(cfg):
    data = cfg.as_dict()
    data.pop("output_dir")  # where a report lands is not part of what it reports
    return data


def _calibrate(cfg, noise, workers):
    """Returns ``(calibration, records, note)``."""
    kwargs = dict(exact=cfg.exact, seed=cfg.seed, axes=tuple(cfg.calibration_axes),
                  qubits=tuple(cfg.calibration_qubits), max_workers=workers)
    cache_dir = cfg.calibration.get("cache_dir")
    if cache_dir:
        cal, records, hit = cached_calibration(cache_dir, cfg.n, cfg.n_theta, noise, cfg.shots, **kwargs)
        return cal, records, ("calibration loaded from cache" if hit else None)
    cal, records = run_calibration(cfg.n, cfg.n_theta, noise, cfg.shots, **kwargs)
    return cal, records, None


def execute(cfg, protocol=None, workers=None):
    """Run the configured protocol(s). Returns ``(report, files)`` where
    ``files`` maps relative output paths to writer callables; nothing touches
    the disk here."""
    if protocol:
        cfg.protocol = protocol
    protocol = cfg.protocol
    noise = cfg.noise_profile()
    target = cfg.target_gates()
    protocols, files, timing, notes = {}, {}, {}, []
    cal_summary = recon_residual = cycle = None

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if protocol in ("ppc", "both"):
            t0 = time.perf_counter()
            cal = None
            cal_records = []
            if cfg.calibration.get("enabled", True):
                cal, cal_records, note = _calibrate(cfg, noise, workers)
                if note:
                    notes.append(note)
            res = characterize(
                target, noise, cfg.n, cfg.n_theta, cfg.shots, axes=tuple(cfg.axes), seed=cfg.seed,
                exact=cfg.exact, calibration=cal, calibrate=False, mitigate=cfg.mitigate, weighted=cfg.weighted,
                normalization=cfg.normalization, max_workers=workers,
            )
            timing["ppc_seconds"] = time.perf_counter() - t0
            chi = res.chi(cfg.normalization)
            protocols["ppc"] = ProtocolResult.build(chi, res.metrics, res.aligned_unitary)
            cal_summary = res.calibration.to_dict()
            recon_residual = res.reconstruction.unitarity_residual
            cycle = res.reconstruction.cycle_inconsistency
            notes.extend(res.reconstruction.warnings)
            records = res.records
            files["chi_ppc.csv"] = lambda p, m=chi.chi: write_chi_csv(p, m, cfg.n)
            files[os.path.join("sweeps", "characterization.csv")] = lambda p, r=records: write_sweeps_csv(p, r)
            if cal_records:
                files[os.path.join("sweeps", "calibration.csv")] = lambda p, r=cal_records: write_sweeps_csv(p, r)
            files["calibration.json"] = lambda p, c=res.calibration: _write_json(p, c.to_dict())

        if protocol in ("qpt", "both"):
            t0 = time.perf_counter()
            qcfg = cfg.qpt
            mitigation = None
            if qcfg.get("mitigate_readout", False):
                mitigation = noise.transition
            q = run_qpt(target, noise, cfg.n, cfg.shots, seed=cfg.seed, exact=cfg.exact,
                        psd_projection=qcfg.get("psd_projection", True), mitigate_readout=mitigation,
                        normalization=cfg.normalization, max_workers=workers)
            timing["qpt_seconds"] = time.perf_counter() - t0
            protocols["qpt"] = ProtocolResult.build(q.chi, q.metrics)
            files["chi_qpt.csv"] = lambda p, m=q.chi.chi: write_chi_csv(p, m, cfg.n)
            files[os.path.join("sweeps", "qpt_lambda.csv")] = lambda p, r=q: write_lambda_csv(p, r)
    notes.extend(str(w.message) for w in caught)

    comparison = None
    if "ppc" in protocols and "qpt" in protocols:
        comparison = compare_protocols(protocols["ppc"], protocols["qpt"], cfg.d_inf_mode)
    rc = metrics.resource_counts(cfg.n, cfg.n_theta).as_dict()
    report = ProcessReport(_echo(cfg), protocols, rc, cal_summary, comparison, recon_residual, cycle,
                           notes, timing)
    return report, files


def compare_protocols(a, b, mode="entrywise"):
    if a.n != b.n:
        raise InvalidArgumentError(f"reports describe different qubit counts ({a.n} vs {b.n})")
    if a.normalization != b.normalization:
        raise InvalidArgumentError(f"normalization mismatch: {a.normalization} vs {b.normalization}")
    ca, cb = a.process_matrix(), b.process_matrix()
    return {
        "d_inf": metrics.d_inf(ca, cb, mode),
        "d_inf_mode": mode,
        "d_inf_entrywise": metrics.d_inf(ca, cb, "entrywise"),
        "d_inf_operator": metrics.d_inf(ca, cb, "operator"),
        "process_fidelity": metrics.process_fidelity(ca, cb),
    }


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_outputs(out_dir, report, files):
    os.makedirs(os.path.join(out_dir, "sweeps"), exist_ok=True)
    for rel, writer in sorted(files.items()):
        writer(os.path.join(out_dir, rel))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report.dumps())


def _print_summary(report, out_dir):
    for name, proto in report.protocols.items():
        m = proto.metrics
        line = f"{name}: F={m['process_fidelity']:.6f}"
        if "gauge_aligned_fidelity" in m:
            line += f"  F_gauge={m['gauge_aligned_fidelity']:.6f}"
        line += f"  d_inf={m['d_inf_entrywise']:.4g}"
        print(line)
    if report.comparison:
        print(f"ppc vs qpt: d_inf={report.comparison['d_inf']:.4g} ({report.comparison['d_inf_mode']})")
    for note in report.warnings:
        print(f"note: {note}", file=sys.stderr)
    print(f"wrote {os.path.join(out_dir, 'report.json')}")


def cmd_run(args, protocol=None):
    cfg = cfgmod.load(args.config, _overrides(args))
    report, files = execute(cfg, protocol, args.workers)
    write_outputs(cfg.output_dir, report, files)
    _print_summary(report, cfg.output_dir)
    return EXIT_OK


def cmd_calibrate(args):
    cfg = cfgmod.load(args.config, _overrides(args))
    cal, records, note = _calibrate(cfg, cfg.noise_profile(), args.workers)
    os.makedirs(os.path.join(cfg.output_dir, "sweeps"), exist_ok=True)
    if records:
        write_sweeps_csv(os.path.join(cfg.output_dir, "sweeps", "calibration.csv"), records)
    _write_json(os.path.join(cfg.output_dir, "calibration.json"), cal.to_dict())
    if note:
        print(f"note: {note}", file=sys.stderr)
    for name, est, se in parameter_table(cal):
        print(f"{name:16s} {est: .6f} +- {se:.2g}")
    return EXIT_OK


def _pick_protocols(a, b, pa, pb):
    """Default to a protocol both reports share, else each report's first."""
    common = [p for p in ("ppc", "qpt") if p in a.protocols and p in b.protocols]
    pa = pa or (common[0] if common else next(iter(a.protocols), None))
    pb = pb or (common[0] if common else next(iter(b.protocols), None))
    return pa, pb


def cmd_compare(args):
    a, b = ProcessReport.load(args.report_a), ProcessReport.load(args.report_b)
    pa, pb = _pick_protocols(a, b, args.protocol_a, args.protocol_b)
    for rep, name, path in ((a, pa, args.report_a), (b, pb, args.report_b)):
        if name not in rep.protocols:
            raise InvalidArgumentError(f"{path} has no {name!r} result")
    A, B = a.protocols[pa], b.protocols[pb]
    doc = {"a": {"path": args.report_a, "protocol": pa}, "b": {"path": args.report_b, "protocol": pb}}
    doc.update(compare_protocols(A, B, args.d_inf_mode))
    doc["fidelity_table"] = {
        "a_process_fidelity": A.metrics.get("process_fidelity"),
        "b_process_fidelity": B.metrics.get("process_fidelity"),
        "a_vs_b_process_fidelity": doc["process_fidelity"],
    }
    diff = A.process_matrix().chi - B.process_matrix().chi
    if args.output:
        os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
        _write_json(args.output, doc)
    if args.diff_csv:
        write_chi_csv(args.diff_csv, diff, A.n)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def sweep_rows(cfg):
    noise = cfgmod.build_noise(cfg.noise, cfg.n, cfg.seed)
    if cfg.kind == "calibration":
        return calibration_hyperparameter_sweep(
            cfg.n, cfg.n_theta_grid, cfg.shots_grid, noise, seed=cfg.seed, axes=tuple(cfg.axes),
            repeats=cfg.repeats, exact=cfg.exact,
        )
    target = target_circuit((Gate(cfg.target["gate"], tuple(cfg.target["qubits"])),), cfg.n)
    rows = []
    for n_theta in cfg.n_theta_grid:
        for shots in cfg.shots_grid:
            values = {}
            for rep in range(cfg.repeats):
                ss = np.random.SeedSequence(int(cfg.seed), spawn_key=(int(n_theta), int(shots), rep))
                sub = int(ss.generate_state(1, dtype=np.uint64)[0])
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    res = characterize(target, noise, cfg.n, n_theta, shots, axes=tuple(cfg.axes), seed=sub,
                                       exact=cfg.exact)
                for key in ("process_fidelity", "gauge_aligned_fidelity", "d_inf_entrywise"):
                    values.setdefault(key, []).append(res.metrics[key])
            for key, vals in values.items():
                vals = np.asarray(vals)
                if cfg.exact:
                    se = 0.0
                elif vals.size > 1:
                    se = float(np.std(vals, ddof=1) / np.sqrt(vals.size))
                else:
                    se = float("nan")
                rows.append({"n_theta": int(n_theta), "shots": int(shots), "parameter": key,
                             "estimate": float(np.mean(vals)), "std_error": se})
    return rows


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_CSV_HEADER)
        for r in rows:
            w.writerow((r["n_theta"], r["shots"], r["parameter"], repr(r["estimate"]), repr(r["std_error"])))


def cmd_sweep(args):
    cfg = cfgmod.load_sweep(args.config, {"seed": args.seed, "output_dir": args.output_dir})
    rows = sweep_rows(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, cfg.output)
    write_sweep_csv(path, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def resource_table(n_thetas, max_n=6):
    rows = []
    for n_theta in n_thetas:
        for n in range(1, max_n + 1):
            rc = metrics.resource_counts(n, n_theta)
            rows.append((n, n_theta, rc.n_ppc_total, rc.n_qpt))
    return rows


def cmd_resources(args):
    rows = resource_table(args.n_theta, args.max_n)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("n", "n_theta", "n_ppc", "n_qpt"))
            w.writerows(rows)
    print(f"{'n':>3} {'n_theta':>8} {'PPC':>10} {'QPT':>10}  cheaper")
    for n, n_theta, ppc, qpt in rows:
        print(f"{n:>3} {n_theta:>8} {ppc:>10} {qpt:>10}  {'PPC' if ppc < qpt else 'QPT'}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="paramchar", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--seed", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--exact", action="store_true", help="use exact probabilities instead of sampling")
        p.add_argument("--n-theta", dest="n_theta", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--workers", type=int, default=None, help="threads for circuit execution")
        return p

    experiment("run", "run the protocol(s) named in the config")
    experiment("characterize", "rotational-sweep characterization only")
    experiment("qpt", "process tomography only")
    experiment("calibrate", "calibrate readout and rotation offset only")

    p = sub.add_parser("compare", help="compare chi matrices of two reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--protocol-a", choices=("ppc", "qpt"))
    p.add_argument("--protocol-b", choices=("ppc", "qpt"))
    p.add_argument("--d-inf-mode", choices=("entrywise", "operator"), default="entrywise")
    p.add_argument("-o", "--output", help="write the comparison JSON here")
    p.add_argument("--diff-csv", help="write per-entry chi differences as CSV")

    p = sub.add_parser("sweep", help="hyperparameter sweep over (n_theta, shots)")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", dest="output_dir")

    p = sub.add_parser("resources", help="circuit counts of both protocols")
    p.add_argument("--n-theta", type=int, nargs="+", default=[31, 51, 71])
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--csv", help="also write the table as CSV")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "run": cmd_run,
        "characterize": lambda a: cmd_run(a, "ppc"),
        "qpt": lambda a: cmd_run(a, "qpt"),
        "calibrate": cmd_calibrate,
        "compare": cmd_compare,
        "sweep": cmd_sweep,
        "resources": cmd_resources,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FIT_ERRORS as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        diagnostics = getattr(exc, "diagnostics", None)
        if diagnostics:
            print(f"diagnostics: {diagnostics}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
