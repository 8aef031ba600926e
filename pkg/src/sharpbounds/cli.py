"""Command-line interface: analysis commands, simulation experiments, checks.

Conventions shared by every command:

* configuration resolves as defaults < JSON config file < SHARPBOUNDS_* env
  vars < command-line flags;
* every run writes ``manifest.json`` (resolved config + seed) into the output
  directory so it can be reproduced exactly;
* numbers serialize with 17 significant digits, infinities as the strings
  "inf" / "-inf" (JSON has no native infinity);
* experiment commands also render PNG figures next to their CSV output.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import inference, ipw, ols, oracle, rd, simlab
from .errors import ConfigError, SchemaError, SharpBoundsError

ENV_PREFIX = "SHARPBOUNDS_"

DEFAULT_C_GRID = [round(0.01 * k, 2) for k in range(11)]


def fmt(value):
    """17-significant-digit string form, with explicit inf/-inf/nan."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    return value


def jsonable(obj):
    if isinstance(obj, float):
        return fmt(obj)
    if isinstance(obj, (np.floating,)):
        return fmt(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    return obj


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row[c]) for c in columns])


def read_table(path, required):
    """Load a CSV with a header, checking the required columns exist."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column '{missing[0]}'")
        cols = {name: [] for name in header}
        for i, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f"{path}: row {i} has {len(row)} fields")
            for name, cell in zip(header, row):
                try:
                    cols[name].append(float(cell))
                except ValueError:
                    raise SchemaError(
                        f"{path}: row {i}: cannot parse '{cell}' in column {name}"
                    ) from None
    return {name: np.asarray(vals) for name, vals in cols.items()}


def resolve_config(args, defaults):
    """defaults < --config JSON < SHARPBOUNDS_* env < explicit flags."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, default in defaults.items():
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            cfg[key] = type(default)(json.loads(env)) if not isinstance(default, str) else env
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def write_manifest(out_dir, command, cfg):
    write_json(Path(out_dir) / "manifest.json", {"command": command, "config": cfg})


def _ci_payload(boot):
    if boot is None:
        return {}
    return {
        "set_ci": list(boot.set_ci),
        "lb_ci": list(boot.lb_ci),
        "ub_ci": list(boot.ub_ci),
        "lb_ci_one_sided": list(boot.lb_ci_one_sided),
        "ub_ci_one_sided": list(boot.ub_ci_one_sided),
        "n_infinite_draws": boot.n_infinite,
        "n_failed_draws": boot.n_failed,
    }


def _bound_payload(result):
    return {
        "value": result.value,
        "tau_range": list(result.tau_range),
        "n_infinite_cap": result.n_infinite_cap,
        "finite": result.finite,
    }


def cmd_analyze_ipw(args):
    cfg = resolve_config(args, {
        "c": 0.0, "draws": 500, "seed": 0, "out": "out", "alpha": 0.05,
        "unbounded_outcome": True,
    })
    data = read_table(args.data, required=["z", "y"])
    xcols = sorted(c for c in data if c == "x" or c.startswith("x"))
    if not xcols:
        raise SchemaError(f"{args.data}: missing column 'x'")
    x = np.column_stack([data[c] for c in xcols])
    z, y = data["z"], data["y"]
    if set(np.unique(z)) - {0.0, 1.0}:
        raise ConfigError("column z must be binary 0/1")
    config = ipw.IPWConfig(c=cfg["c"], unbounded_outcome=cfg["unbounded_outcome"])
    fitted = ipw.fit_ipw(x, z, y, config)
    lo, hi = fitted.point_bounds()
    boot = None
    if cfg["draws"] > 0:
        boot = inference.percentile_bootstrap(
            y.size, fitted.bootstrap_bounds, cfg["draws"], cfg["seed"], cfg["alpha"]
        )
    report = {
        "estimand": "ate",
        "sensitivity": {"c": cfg["c"]},
        "lower": _bound_payload(lo),
        "upper": _bound_payload(hi),
        "n": int(y.size),
        **_ci_payload(boot),
    }
    write_manifest(cfg["out"], "analyze-ipw", cfg)
    write_json(Path(cfg["out"]) / "report.json", report)
    print(f"lower {fmt(lo.value)}  upper {fmt(hi.value)}")
    return 0


def cmd_analyze_rd(args):
    cfg = resolve_config(args, {
        "cutoff": 0.0, "bandwidth": 1.0,
        "lambda1_minus": 1.0, "lambda1_plus": 1.0,
        "lambda0_minus": 1.0, "lambda0_plus": 1.0,
        "estimand": "cate", "draws": 500, "seed": 0, "out": "out", "alpha": 0.05,
    })
    data = read_table(args.data, required=["x", "y"])
    x, y = data["x"], data["y"]
    config = rd.RDConfig(
        cutoff=cfg["cutoff"], bandwidth=cfg["bandwidth"],
        lambda1_minus=cfg["lambda1_minus"], lambda1_plus=cfg["lambda1_plus"],
        lambda0_minus=cfg["lambda0_minus"], lambda0_plus=cfg["lambda0_plus"],
    )
    fn = {
        "cate": rd.rd_cate_bounds,
        "clate": rd.rd_clate_bounds,
        "catt": rd.rd_catt_bounds,
    }.get(cfg["estimand"])
    if fn is None:
        raise ConfigError(f"unknown RD estimand '{cfg['estimand']}'")
    lo, hi = fn(x, y, config)
    boot = None
    if cfg["draws"] > 0:
        boot = inference.percentile_bootstrap(
            y.size, lambda idx: fn(x[idx], y[idx], config),
            cfg["draws"], cfg["seed"], cfg["alpha"],
        )
    est = rd.rd_estimates(x, y, config)
    report = {
        "estimand": cfg["estimand"],
        "tau": est.tau,
        "lower": _bound_payload(lo),
        "upper": _bound_payload(hi),
        "n_above": est.n_above,
        "n_below": est.n_below,
        **_ci_payload(boot),
    }
    write_manifest(cfg["out"], "analyze-rd", cfg)
    write_json(Path(cfg["out"]) / "report.json", report)
    print(f"lower {fmt(lo.value)}  upper {fmt(hi.value)}")
    return 0


def cmd_analyze_ols(args):
    cfg = resolve_config(args, {
        "delta": [], "w_lower": 1.0, "w_upper": 1.0,
        "draws": 500, "seed": 0, "out": "out", "alpha": 0.05,
    })
    data = read_table(args.data, required=["y"])
    xcols = sorted(c for c in data if c.startswith("x"))
    if not xcols:
        raise SchemaError(f"{args.data}: missing columns x1..xk")
    y = data["y"]
    design = np.column_stack([np.ones(y.size)] + [data[c] for c in xcols])
    delta = np.asarray(cfg["delta"], dtype=float)
    if delta.size == design.shape[1] - 1:
        delta = np.concatenate([[0.0], delta])  # intercept weight implied
    config = ols.OLSConfig(delta=delta, w_lower=cfg["w_lower"], w_upper=cfg["w_upper"])
    lo, hi = ols.ols_bounds(y, design, config)
    boot = None
    if cfg["draws"] > 0:
        boot = inference.percentile_bootstrap(
            y.size, lambda idx: ols.ols_bounds(y[idx], design[idx], config),
            cfg["draws"], cfg["seed"], cfg["alpha"],
        )
    report = {
        "estimand": "delta_beta",
        "lower": _bound_payload(lo),
        "upper": _bound_payload(hi),
        "n": int(y.size),
        **_ci_payload(boot),
    }
    write_manifest(cfg["out"], "analyze-ols", cfg)
    write_json(Path(cfg["out"]) / "report.json", report)
    print(f"lower {fmt(lo.value)}  upper {fmt(hi.value)}")
    return 0


def cmd_simulate(args):
    cfg = resolve_config(args, {"n": 2000, "eta": simlab.DEFAULT_ETA,
                                "seed": 0, "out": "out"})
    rng = np.random.default_rng(cfg["seed"])
    x, z, y = simlab.dgp_sample(simlab.DGPConfig(n=cfg["n"], eta=cfg["eta"]), rng)
    write_manifest(cfg["out"], "simulate", cfg)
    write_csv(Path(cfg["out"]) / "sample.csv", ("x", "z", "y"),
              [{"x": float(a), "z": float(b), "y": float(c)}
               for a, b, c in zip(x, z, y)])
    print(f"wrote {cfg['n']} rows to {Path(cfg['out']) / 'sample.csv'}")
    return 0


def _plot_bounds_vs_c(rows, truth_keys, est_keys, path, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    cs = [r["c"] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 5))
    for key, style, label in est_keys:
        ax.plot(cs, [r[key] for r in rows], style, label=label)
    for key, label in truth_keys:
        ax.plot(cs, [r[key] for r in rows], "k--",
                label=label if key.endswith("lb") else None)
    ax.set_xlabel("c")
    ax.set_ylabel("ATE bounds")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _scale(cfg):
    if cfg.get("paper_scale"):
        cfg["sims"] = 1000
        cfg["draws"] = 1000
    return cfg


def cmd_coverage(args):
    cfg = _scale(resolve_config(args, {
        "c_grid": [0.0, 0.05, 0.10], "sims": 500, "n": 2000, "draws": 500,
        "seed": 0, "out": "out", "paper_scale": False,
    }))
    if any(c < 0 for c in cfg["c_grid"]):
        raise ConfigError("c grid values must be nonnegative")
    rows = simlab.coverage_experiment(
        cfg["c_grid"], cfg["sims"], cfg["n"], cfg["draws"], cfg["seed"]
    )
    write_manifest(cfg["out"], "coverage", cfg)
    write_csv(Path(cfg["out"]) / "coverage.csv", simlab.COVERAGE_COLUMNS, rows)

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(7, 5))
    cs = [r["c"] for r in rows]
    for key, label in (("set_coverage", "identified set"),
                       ("lb_coverage", "lower bound"),
                       ("ub_coverage", "upper bound")):
        ax.plot(cs, [100 * r[key] for r in rows], marker="o", label=label)
    ax.axhline(95.0, color="k", lw=0.8, ls=":")
    ax.set_xlabel("c")
    ax.set_ylabel("coverage (%)")
    ax.set_title("bootstrap CI coverage")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(cfg["out"]) / "coverage.png", dpi=150)
    plt.close(fig)

    for r in rows:
        print(f"c={r['c']}: set {100*r['set_coverage']:.1f}%  "
              f"lb {100*r['lb_coverage']:.1f}%  ub {100*r['ub_coverage']:.1f}%  "
              f"unbounded est {100*r['pct_unbounded_estimates']:.1f}%")
    return 0


def cmd_figure1(args):
    cfg = _scale(resolve_config(args, {
        "c_grid": DEFAULT_C_GRID, "sims": 500, "n": 2000,
        "seed": 0, "out": "out", "paper_scale": False,
    }))
    rows = simlab.figure1_run(cfg["c_grid"], cfg["sims"], cfg["n"], cfg["seed"])
    write_manifest(cfg["out"], "figure1", cfg)
    write_csv(Path(cfg["out"]) / "figure1.csv", simlab.FIGURE1_COLUMNS, rows)
    _plot_bounds_vs_c(
        rows,
        truth_keys=[("true_lb", "truth"), ("true_ub", "truth")],
        est_keys=[("mean_lb", "C0-", "mean"), ("mean_ub", "C0-", None),
                  ("median_lb", "C1:", "median"), ("median_ub", "C1:", None)],
        path=Path(cfg["out"]) / "figure1.png",
        title="bound estimates vs truth",
    )
    for r in rows:
        print(f"c={r['c']}: median [{fmt(r['median_lb'])}, {fmt(r['median_ub'])}]  "
              f"true [{fmt(r['true_lb'])}, {fmt(r['true_ub'])}]  "
              f"infinite {100*r['pct_infinite']:.1f}%")
    return 0


def cmd_truth(args):
    cfg = resolve_config(args, {"c": 0.0, "mc_draws": 10**6, "seed": 0, "out": "out"})
    truth = simlab.true_bounds_c_dependence(cfg["c"], cfg["mc_draws"], cfg["seed"])
    write_manifest(cfg["out"], "truth", cfg)
    write_json(Path(cfg["out"]) / "truth.json", {
        "c": cfg["c"],
        "psi_lower": truth.psi_lower,
        "psi_upper": truth.psi_upper,
        "mc_draws": truth.mc_draws,
        "finite": truth.finite,
    })
    print(f"psi_lower {fmt(truth.psi_lower)}  psi_upper {fmt(truth.psi_upper)}")
    return 0


def cmd_oracle_check(args):
    cfg = resolve_config(args, {"instances": 1000, "seed": 0, "out": "out",
                                "tolerance": 1e-9})
    worst = oracle.max_discrepancy(cfg["instances"], seed=cfg["seed"])
    write_manifest(cfg["out"], "oracle-check", cfg)
    write_json(Path(cfg["out"]) / "oracle_check.json", {
        "instances": cfg["instances"],
        "max_discrepancy": worst,
        "tolerance": cfg["tolerance"],
        "passed": bool(worst <= cfg["tolerance"]),
    })
    print(f"max discrepancy over {cfg['instances']} instances: {fmt(worst)}")
    return 0 if worst <= cfg["tolerance"] else 1


def _add_common(p):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="global RNG seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, default=1,
                   help="worker cap (accepted for interface stability)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sharpbounds",
        description="sharp partial-identification bounds under likelihood-ratio bands",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-ipw", help="ATE bounds under c-dependence")
    p.add_argument("data", help="CSV with columns x (or x1..xk), z, y")
    p.add_argument("--c", type=float)
    p.add_argument("--draws", type=int, help="bootstrap draws (0 disables)")
    _add_common(p)
    p.set_defaults(func=cmd_analyze_ipw)

    p = sub.add_parser("analyze-rd", help="RD bounds under manipulation")
    p.add_argument("data", help="CSV with columns x, y")
    p.add_argument("--estimand", choices=("cate", "clate", "catt"))
    p.add_argument("--cutoff", type=float)
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--lambda1-minus", dest="lambda1_minus", type=float)
    p.add_argument("--lambda1-plus", dest="lambda1_plus", type=float)
    p.add_argument("--lambda0-minus", dest="lambda0_minus", type=float)
    p.add_argument("--lambda0-plus", dest="lambda0_plus", type=float)
    p.add_argument("--draws", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_analyze_rd)

    p = sub.add_parser("analyze-ols", help="bounds on an OLS contrast")
    p.add_argument("data", help="CSV with columns y, x1..xk")
    p.add_argument("--delta", type=float, nargs="+",
                   help="contrast over non-intercept columns")
    p.add_argument("--w-lower", dest="w_lower", type=float)
    p.add_argument("--w-upper", dest="w_upper", type=float)
    p.add_argument("--draws", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_analyze_ols)

    p = sub.add_parser("simulate", help="draw a benchmark-DGP sample to CSV")
    p.add_argument("--n", type=int)
    p.add_argument("--eta", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coverage", help="CI coverage experiment")
    p.add_argument("--c-grid", dest="c_grid", type=float, nargs="+")
    p.add_argument("--sims", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--paper-scale", dest="paper_scale", action="store_const",
                   const=True)
    _add_common(p)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("figure1", help="bound tracking experiment")
    p.add_argument("--c-grid", dest="c_grid", type=float, nargs="+")
    p.add_argument("--sims", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--paper-scale", dest="paper_scale", action="store_const",
                   const=True)
    _add_common(p)
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("truth", help="closed-form identified set for the DGP")
    p.add_argument("--c", type=float)
    p.add_argument("--mc-draws", dest="mc_draws", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("oracle-check", help="closed form vs exact LP")
    p.add_argument("--instances", type=int)
    p.add_argument("--tolerance", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SharpBoundsError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
