"""Command-line frontend: tilt scans with CSV + figure output, the GHZ
example constants, the verification suites, ad-hoc bipartite queries, and
separable-map feasibility checks on operator bundles from JSON.

Exit codes: 0 success, 1 verification failure, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, bounds, verify
from .bipartite import (SchmidtVector, nielsen_convertible,
                        optimal_faithful_fidelity, pmax_bipartite)
from .figures import render_scan_figure
from .optimize import DEFAULT_SEED, OptimizerConfig
from .scan import CSV_COLUMNS, RowCache, ScanConfig, run_scan, write_csv
from .slocc import AnnihilatorSet, SymmetrySet, sep1_feasibility_solve, \
    sep_ensemble_residual
from .states import LocalOperatorBundle, QuantumState, apply_local


def _optimizer_from(ns, file_cfg: dict) -> OptimizerConfig:
    def pick(flag, key, default):
        v = getattr(ns, flag, None)
        if v is not None:
            return v
        return file_cfg.get(key, default)

    return OptimizerConfig(
        restarts=int(pick("restarts", "restarts", 30)),
        max_iters=int(pick("max_iters", "max_iters", 4000)),
        seed=int(pick("seed", "seed", DEFAULT_SEED)),
    )


def _load_config(ns) -> dict:
    if getattr(ns, "config", None):
        try:
            return json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SystemExit(f"error: cannot read config {ns.config}: {exc}")
    return {}


def _emit(obj: dict, out: Optional[str]):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def cmd_scan_lambda(ns) -> int:
    file_cfg = _load_config(ns)
    ocfg = _optimizer_from(ns, file_cfg)

    def pick(flag, key, default):
        v = getattr(ns, flag, None)
        return v if v is not None else file_cfg.get(key, default)

    out = pick("out", "out", "scan.csv")
    cache_dir = pick("cache_dir", "cache_dir", None)
    try:
        cfg = ScanConfig(
            lam_min=float(pick("lam_min", "lam_min", 0.01)),
            lam_max=float(pick("lam_max", "lam_max", 0.49)),
            step=float(pick("step", "step", 0.01)),
            optimizer=ocfg,
            out=Path(out),
            cache_dir=Path(cache_dir) if cache_dir else None,
            workers=int(pick("workers", "workers", 1)),
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = run_scan(cfg)
    write_csv(rows, cfg.out)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    if not ns.no_plot:
        png = Path(cfg.out).with_suffix(".png")
        render_scan_figure(rows, png)
        print(f"wrote figure to {png}")
    return 0


def cmd_ghz_example(ns) -> int:
    checks = verify.check_ghz_constants()
    ghz_vals = {c.name.split(".", 1)[1]: c.measured for c in checks}
    report = {
        "bisep_max": float(f"{ghz_vals['bisep_max']:.12f}"),
        "lu_upper": float(f"{ghz_vals['lu_upper']:.12f}"),
        "eps_threshold": float(f"{ghz_vals['eps_threshold']:.12f}"),
    }
    _emit(report, ns.out)
    return 0


def cmd_verify(ns) -> int:
    file_cfg = _load_config(ns)
    ocfg = _optimizer_from(ns, file_cfg)
    checks = verify.run_suite(ns.suite, ocfg)
    for c in checks:
        print(c.line())
    summary = verify.summary_json(checks)
    if ns.suite == "full":
        summary["lambda0_crossing"] = next(
            (c.measured for c in checks if c.name == "lambda0.window"), None)
    if ns.out:
        Path(ns.out).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{summary['n_checks'] - summary['n_failed']}/{summary['n_checks']} "
          f"checks passed")
    return 0 if summary["passed"] else 1


def _parse_vector(text: str) -> SchmidtVector:
    vals = [float(t) for t in text.replace(",", " ").split()]
    return SchmidtVector(np.array(vals))


def cmd_bipartite(ns) -> int:
    try:
        with open(ns.infile, newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or \
                    not {"psi", "phi"} <= set(reader.fieldnames):
                print("error: input CSV needs 'psi' and 'phi' columns",
                      file=sys.stderr)
                return 2
            rows = list(reader)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_rows = []
    for row in rows:
        try:
            psi = _parse_vector(row["psi"])
            phi = _parse_vector(row["phi"])
        except ValueError as exc:
            print(f"error: bad Schmidt vector in row {row}: {exc}",
                  file=sys.stderr)
            return 2
        f_star, vec = optimal_faithful_fidelity(psi, phi)
        out_rows.append({
            "psi": row["psi"],
            "phi": row["phi"],
            "nielsen_convertible": int(nielsen_convertible(psi, phi)),
            "pmax": f"{pmax_bipartite(psi, phi):.15g}",
            "f_star": f"{f_star:.15g}",
            "f_star_vector": " ".join(f"{c:.15g}" for c in vec.coeffs),
        })
    cols = ["psi", "phi", "nielsen_convertible", "pmax", "f_star",
            "f_star_vector"]
    target = open(ns.out, "w", newline="") if ns.out else sys.stdout
    try:
        w = csv.DictWriter(target, fieldnames=cols)
        w.writeheader()
        w.writerows(out_rows)
    finally:
        if ns.out:
            target.close()
    return 0


def cmd_sep_check(ns) -> int:
    try:
        spec = json.loads(Path(ns.infile).read_text())
        seed = QuantumState.from_json(spec["seed"])
        g = LocalOperatorBundle.from_json(spec["g"])
        targets = []
        for t in spec["targets"]:
            h = LocalOperatorBundle.from_json(t["h"])
            nh2 = apply_local(h, seed.unit()).norm_sq
            ng2 = apply_local(g, seed.unit()).norm_sq
            targets.append((float(t["p"]),
                            LocalOperatorBundle([h.gram(i) for i in range(h.n_sites)]),
                            nh2 / ng2))
        syms = SymmetrySet(seed, [LocalOperatorBundle.from_json(s)
                                  for s in spec.get("symmetries", [])]) \
            if spec.get("symmetries") else SymmetrySet.trivial(seed)
    except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: bad sep-check input: {exc}", file=sys.stderr)
        return 2
    gram_g = LocalOperatorBundle([g.gram(i) for i in range(g.n_sites)])
    feasible, weights = sep1_feasibility_solve(gram_g, targets, syms)
    state = apply_local(g, seed.unit()).unit()
    annis = AnnihilatorSet(state, [])
    resid = sep_ensemble_residual(gram_g, targets, weights, syms, annis, g)
    _emit({"feasible": bool(feasible), "residual": resid,
           "weights": weights.tolist()}, ns.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="locckit",
        description="Exact and approximate local-transformation toolkit for "
                    "small multipartite systems.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)

    sc = sub.add_parser("scan-lambda",
                        help="scan the tilt family, emit CSV (+ figure)")
    sc.add_argument("--min", dest="lam_min", type=float)
    sc.add_argument("--max", dest="lam_max", type=float)
    sc.add_argument("--step", type=float)
    sc.add_argument("--out", type=str)
    sc.add_argument("--config", type=str, help="JSON config; flags override")
    sc.add_argument("--seed", type=int)
    sc.add_argument("--restarts", type=int)
    sc.add_argument("--max-iters", dest="max_iters", type=int)
    sc.add_argument("--cache-dir", dest="cache_dir", type=str)
    sc.add_argument("--workers", type=int)
    sc.add_argument("--no-plot", action="store_true",
                    help="skip the PNG next to the CSV")
    sc.set_defaults(func=cmd_scan_lambda)

    ge = sub.add_parser("ghz-example",
                        help="five-qubit GHZ example constants as JSON")
    ge.add_argument("--out", type=str)
    ge.set_defaults(func=cmd_ghz_example)

    vf = sub.add_parser("verify", help="run the verification suite")
    vf.add_argument("--suite", choices=("fast", "full"), default="fast")
    vf.add_argument("--out", type=str, help="write the JSON summary here")
    vf.add_argument("--config", type=str)
    vf.add_argument("--seed", type=int)
    vf.add_argument("--restarts", type=int)
    vf.add_argument("--max-iters", dest="max_iters", type=int)
    vf.add_argument("--cache-dir", dest="cache_dir", type=str)
    vf.set_defaults(func=cmd_verify)

    bp = sub.add_parser("bipartite",
                        help="Schmidt-vector queries from a CSV file")
    bp.add_argument("--in", dest="infile", required=True, type=str,
                    help="CSV with 'psi' and 'phi' columns of coefficients")
    bp.add_argument("--out", type=str)
    bp.set_defaults(func=cmd_bipartite)

    sp = sub.add_parser("sep-check",
                        help="separable-map feasibility from a JSON problem")
    sp.add_argument("--in", dest="infile", required=True, type=str)
    sp.add_argument("--out", type=str)
    sp.set_defaults(func=cmd_sep_check)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
