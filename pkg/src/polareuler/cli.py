"""Command-line front end: build / evolve / sweep / glue / norms / decay / loglip.

Outputs are CSV for time series and JSON for summaries, stamped with the
schema version and the config hash.  With a fixed config and seed the CSV
bytes are identical across repeat runs.  Exit codes: 0 success,
2 verification failure, 3 resolution exhaustion, 4 config error.
"""

import argparse
import concurrent.futures
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import biot_savart as bs
from . import config as cfgmod
from . import construction as cn
from . import evolve as ev
from . import gluing_eval as ge
from . import pseudosolution as ps
from . import sobolev as sb
from .field import PolarField, lp_norm, save_field, load_field, support_annulus
from .grid import RadialGrid

CSV_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_RESOLUTION = 3
EXIT_CONFIG = 4


def _fmt(x):
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def record_to_csv(path, record, chash):
    cols = sorted(record.columns)
    header = ["schema", "config", "t"] + cols
    rows = [
        [CSV_SCHEMA_VERSION, chash, t] + [record.columns[c][i] for c in cols]
        for i, t in enumerate(record.times)
    ]
    write_csv(path, header, rows)


def _params_from_config(cfg):
    c = cfg["construction"]
    return cn.ConstructionParams(
        beta=c["beta"],
        delta=c["delta"],
        lam=c["lam"],
        N=c["N"],
        amp_boost=c["amp_boost"],
    )


def _evolve_config(cfg, n_monitors=None):
    e = cfg["evolve"]
    return ev.EvolveConfig(
        t_end=e["t_end"],
        cfl=e["cfl"],
        dt=e["dt"],
        dealias=e["dealias"],
        filter_strength=e["filter_strength"],
        n_monitors=n_monitors if n_monitors is not None else e["n_monitors"],
        guard_factor=e["guard_factor"],
        max_steps=e["max_steps"],
    )


def _sobolev_resolution(cfg):
    s = cfg["sobolev"]
    return {
        "tail_rtol": s["tail_rtol"],
        "panels_per_period": s["panels_per_period"],
    }


def cmd_build(cfg, out):
    params = _params_from_config(cfg)
    grid = params.default_grid(
        n=cfg["construction"]["grid_n"], pad=cfg["construction"]["grid_pad"]
    )
    omega0 = cn.assemble_initial(params, grid=grid, k_max=cfg["construction"]["k_max"])
    save_field(omega0, os.path.join(out, "initial_field.npz"))

    _, f_report = cn.build_f()
    _, g_report = cn.build_g()
    beta = params.beta
    hbeta = sb.norm(omega0, sb.SobolevSpec(s=beta, **_sobolev_resolution(cfg)))
    mean0 = float(
        np.sum(omega0.coeffs[0].real * grid.quad_weights) * 2.0 * math.pi
    )
    supp = support_annulus(omega0, 1e-12 * np.abs(omega0.coeffs).max())
    valid = True
    if cfg["diagnostics"]["h1_budget_check"]:
        valid = valid and g_report["h1"] <= cn.H1_BUDGET + 1e-12
        valid = valid and f_report["h1"] <= cn.H1_BUDGET + 1e-12
    valid = valid and abs(mean0) <= 1e-10 * lp_norm(omega0, 1)
    valid = valid and f_report["sign_definite"]
    valid = valid and hbeta <= 1.0
    report = {
        "schema": CSV_SCHEMA_VERSION,
        "config": cfgmod.config_hash(cfg),
        "valid": bool(valid),
        "N": params.N,
        "h_beta": hbeta,
        "zero_mean_residual": mean0,
        "support": list(supp),
        "g_h1": g_report["h1"],
        "f_h1": f_report["h1"],
        "f_M": f_report["M"],
        "f_sign_definite": bool(f_report["sign_definite"]),
    }
    write_json(os.path.join(out, "build_report.json"), report)
    print(f"build: valid={valid} N={params.N} h_beta={hbeta:.6g}")
    return EXIT_OK if valid else EXIT_VERIFY


def _run_evolution(cfg):
    params = _params_from_config(cfg)
    grid = params.default_grid(
        n=cfg["construction"]["grid_n"], pad=cfg["construction"]["grid_pad"]
    )
    omega0 = cn.assemble_initial(params, grid=grid, k_max=cfg["construction"]["k_max"])
    rad0, osc0 = cn.initial_parts(params, grid=grid, k_max=cfg["construction"]["k_max"])
    if not cfg["diagnostics"]["decomposition"]:
        rad0 = None   # advect only the oscillatory tracer (cheaper)
    pseudo = (
        ps.new_state(params, grid) if cfg["diagnostics"]["pseudo_error"] else None
    )
    final, comps, record = ev.run(
        omega0,
        _evolve_config(cfg),
        rad0=rad0,
        osc0=osc0,
        s_values=tuple(cfg["sobolev"]["s_values"]),
        pseudo=pseudo,
        sobolev_resolution=_sobolev_resolution(cfg),
    )
    return params, grid, final, comps, record, pseudo


def cmd_evolve(cfg, out):
    params, grid, final, comps, record, pseudo = _run_evolution(cfg)
    chash = cfgmod.config_hash(cfg)
    record_to_csv(os.path.join(out, "trajectory.csv"), record, chash)

    summary = {
        "schema": CSV_SCHEMA_VERSION,
        "config": chash,
        "termination": record.termination,
        "steps": record.steps,
        "t_final": record.times[-1],
    }
    for s in cfg["sobolev"]["s_values"]:
        col = record.col(f"hs_{s:g}")
        summary[f"growth_hs_{s:g}"] = float(col[-1] / col[0])
    if cfg["diagnostics"]["inflation"] and pseudo is not None:
        s0 = cfg["sobolev"]["s_values"][0]
        rep = sb.inflation_measure(
            np.asarray(record.times),
            record.col(f"hs_{s0:g}"),
            params.N,
            record.col("phase_grad"),
            ps.osc_centroid_radius(params, grid),
            s0,
        )
        summary["growth_factor"] = rep.growth_factor
        summary["prediction_ratio"] = rep.prediction_ratio
    write_json(os.path.join(out, "summary.json"), summary)
    print(
        f"evolve: termination={record.termination} steps={record.steps} "
        + " ".join(
            f"growth_hs_{s:g}={summary[f'growth_hs_{s:g}']:.4g}"
            for s in cfg["sobolev"]["s_values"]
        )
    )
    return EXIT_RESOLUTION if record.termination == "resolution" else EXIT_OK


def _ols_loglog(x, y):
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    coef, cov = np.polyfit(lx, ly, 1, cov=True)
    return float(coef[0]), float(np.sqrt(cov[0, 0]))


def _sweep_one(args):
    cfg, axis, value = args
    cfg = json.loads(json.dumps(cfg))
    if axis == "lam":
        cfg["construction"]["lam"] = value
    elif axis == "N":
        cfg["construction"]["N"] = int(value)
    elif axis == "beta":
        cfg["construction"]["beta"] = value
    else:
        raise cfgmod.ConfigError(f"unknown sweep axis '{axis}'")
    try:
        params, grid, final, comps, record, _ = _run_evolution(cfg)
        s0 = cfg["sobolev"]["s_values"][0]
        col = record.col(f"hs_{s0:g}")
        return {
            "value": value,
            "ok": True,
            "N": params.N,
            "termination": record.termination,
            "growth": float(col[-1] / col[0]),
            "hs_final": float(col[-1]),
        }
    except Exception as exc:                      # keep sweeping past failures
        return {"value": value, "ok": False, "error": str(exc)}


def cmd_sweep(cfg, out, workers):
    sw = cfg["sweep"]
    values = sw["values"]
    if list(values) != sorted(values):
        raise cfgmod.ConfigError("sweep values must be monotone")
    if sw["mode"] == "decay":
        return cmd_decay(cfg, out, N_values=[int(v) for v in values])
    jobs = [(cfg, sw["axis"], v) for v in values]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    chash = cfgmod.config_hash(cfg)
    header = ["schema", "config", "value", "ok", "growth", "hs_final"]
    rows = [
        [
            CSV_SCHEMA_VERSION,
            chash,
            r["value"],
            int(r["ok"]),
            r.get("growth", math.nan),
            r.get("hs_final", math.nan),
        ]
        for r in results
    ]
    write_csv(os.path.join(out, "sweep.csv"), header, rows)
    good = [r for r in results if r["ok"]]
    summary = {"schema": CSV_SCHEMA_VERSION, "config": chash, "rows": results}
    if len(good) >= 2:
        slope, err = _ols_loglog(
            [r["value"] for r in good], [r["hs_final"] for r in good]
        )
        summary["slope"] = slope
        summary["slope_stderr"] = err
    write_json(os.path.join(out, "sweep_summary.json"), summary)
    print(f"sweep: {len(good)}/{len(results)} runs ok")
    return EXIT_OK if len(good) == len(results) else EXIT_VERIFY


def cmd_glue(cfg, out):
    g = cfg["gluing"]
    if g["J"] > g["J_max"]:
        raise cfgmod.ConfigError(f"J={g['J']} exceeds J_max={g['J_max']}")
    params = _params_from_config(cfg)
    plan = cn.assemble_gluing(params, g["J"], g["v_max"], g["lam_growth"])
    runs = ge.run_pieces(
        plan,
        cfg["evolve"]["t_end"],
        evolve_config=_evolve_config(cfg, n_monitors=2),
        s_values=tuple(cfg["sobolev"]["s_values"]),
    )
    pairs = ge.interaction_bound(plan, runs)
    chash = cfgmod.config_hash(cfg)
    report = {
        "schema": CSV_SCHEMA_VERSION,
        "config": chash,
        "pieces": [
            {
                "index": p.index,
                "center": list(p.center),
                "amplitude": p.amplitude,
                "termination": p.record.termination,
                "v_max": p.v_max,
                "hs": {f"{s:g}": v for s, v in p.hs.items()},
            }
            for p in runs
        ],
        "interactions": [
            {
                "i": q.i,
                "j": q.j,
                "distance": q.distance,
                "cross_bound": q.cross_bound,
                "cross_measured": q.cross_measured,
                "ratio": q.ratio,
            }
            for q in pairs
        ],
        "certified": {
            f"{s:g}": ge.glued_norm_lower_bound(runs, s).certified
            for s in cfg["sobolev"]["s_values"]
        },
    }
    write_json(os.path.join(out, "glue_report.json"), report)
    worst = max((q.ratio for q in pairs), default=0.0)
    print(f"glue: J={g['J']} worst interaction ratio {worst:.3g}")
    return EXIT_OK


def cmd_norms(cfg, out, field_path):
    fld = load_field(field_path)
    res = {
        "schema": CSV_SCHEMA_VERSION,
        "config": cfgmod.config_hash(cfg),
        "field": os.path.basename(field_path),
        "l2": lp_norm(fld, 2),
    }
    for s in cfg["sobolev"]["s_values"]:
        spec = sb.SobolevSpec(
            s=s, method=cfg["sobolev"]["method"], box_n=cfg["sobolev"]["box_n"],
            **_sobolev_resolution(cfg),
        )
        res[f"hs_{s:g}"] = sb.norm(fld, spec)
    write_json(os.path.join(out, "norms.json"), res)
    print(" ".join(f"{k}={v:.8g}" for k, v in res.items() if isinstance(v, float)))
    return EXIT_OK


def cmd_decay(cfg, out, N_values=None):
    d = cfg["decay"]
    N_list = N_values or [int(v) for v in d["N_values"]]
    a, b = d["support"]
    grid = RadialGrid.log_uniform(min(a, d["probe_radius"]) / 4.0, 4.0 * b, 2048)
    bump = cn.BumpProfile(a, b)
    scan = bs.exp_decay_scan(bump(grid.nodes), grid, N_list, d["probe_radius"])
    chash = cfgmod.config_hash(cfg)
    write_csv(
        os.path.join(out, "decay.csv"),
        ["schema", "config", "N", "vr_probe"],
        [[CSV_SCHEMA_VERSION, chash, n, v] for n, v in scan.table],
    )
    write_json(
        os.path.join(out, "decay_summary.json"),
        {"schema": CSV_SCHEMA_VERSION, "config": chash, "slope": scan.slope},
    )
    print(f"decay: slope {scan.slope:.4f} over N={N_list}")
    return EXIT_OK if scan.slope <= -0.9 else EXIT_VERIFY


def cmd_loglip(cfg, out, seed):
    params = _params_from_config(cfg)
    grid = params.default_grid(n=cfg["construction"]["grid_n"])
    omega0 = cn.assemble_initial(params, grid=grid)
    rep = bs.loglip_modulus(
        omega0, sample_pairs=cfg["loglip"]["n_pairs"], seed=seed
    )
    chash = cfgmod.config_hash(cfg)
    write_json(
        os.path.join(out, "loglip.json"),
        {
            "schema": CSV_SCHEMA_VERSION,
            "config": chash,
            "constant": rep.constant,
            "pairs": rep.pairs,
            "R": rep.R,
        },
    )
    print(f"loglip: constant {rep.constant:.6g}")
    return EXIT_OK


def build_parser():
    # the flags are accepted both before and after the subcommand; SUPPRESS
    # defaults keep the subparser from clobbering values parsed at top level
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file")
    common.add_argument(
        "--out",
        help="output directory (default: $POLAREULER_OUT or ./out)",
    )
    common.add_argument("--workers", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument(
        "--override",
        action="append",
        metavar="KEY=VALUE",
        help="dotted-path config override, repeatable",
    )
    p = argparse.ArgumentParser(
        prog="polareuler",
        description="Vortex construction, evolution, and norm diagnostics.",
        parents=[common],
    )
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser(
        "build", help="assemble and verify the initial field", parents=[common]
    )
    sub.add_parser(
        "evolve", help="run the flow with time-series monitors", parents=[common]
    )
    sub.add_parser(
        "sweep", help="repeat a run along one parameter axis", parents=[common]
    )
    sub.add_parser(
        "glue",
        help="evolve a multi-piece plan and bound interactions",
        parents=[common],
    )
    n = sub.add_parser("norms", help="norms of a serialized field", parents=[common])
    n.add_argument("field", help="path to a saved .npz field")
    sub.add_parser(
        "decay", help="mode-N radial velocity decay scan", parents=[common]
    )
    sub.add_parser(
        "loglip", help="log-Lipschitz velocity modulus estimate", parents=[common]
    )
    return p


_COMMON_DEFAULTS = {
    "config": None,
    "out": None,
    "workers": 1,
    "seed": None,
    "override": [],
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    for key, val in _COMMON_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    try:
        cfg = cfgmod.load_config(args.config, args.override)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = args.out or os.environ.get("POLAREULER_OUT", "out")
    os.makedirs(out, exist_ok=True)
    try:
        if args.command == "build":
            return cmd_build(cfg, out)
        if args.command == "evolve":
            return cmd_evolve(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.workers)
        if args.command == "glue":
            return cmd_glue(cfg, out)
        if args.command == "norms":
            return cmd_norms(cfg, out, args.field)
        if args.command == "decay":
            return cmd_decay(cfg, out)
        if args.command == "loglip":
            return cmd_loglip(cfg, out, cfg["seed"])
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except cn.ResolutionError as exc:
        print(f"resolution: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
