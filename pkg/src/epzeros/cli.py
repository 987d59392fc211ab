"""Command line front end: `epzeros <subcommand> --config FILE [--threads N] [--out DIR] [--cache DIR]`."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys as _sys

import numpy as np

from . import __version__
from . import dist, rmodel, zeros
from .cache import cache_get, cache_put
from .config import ExperimentConfig, load_config, parse_value
from .errors import ConfigError, EpzerosError
from .lfun import class_contexts, epstein_zeta_line, hecke_all, make_context
from .qf import build_euler_table, character_system, enumerate_classes

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("classgroup", "eval", "zeros", "model", "density", "discrepancy", "selftest")


# ---------------------------------------------------------------------------
# output helpers


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [_plain(x.real), _plain(x.imag)]
    return x


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _envelope(cfg: ExperimentConfig, command: str, result) -> dict:
    return {"command": command, "version": __version__, "config": cfg.experiment_dict(), "result": result}


def write_json(path: str, cfg: ExperimentConfig, command: str, result) -> None:
    _atomic_write(path, dumps(_envelope(cfg, command, result)))


def write_csv(path: str, cfg: ExperimentConfig, header, rows) -> None:
    buf = io.StringIO()
    buf.write(f"# version: {__version__}\n")
    buf.write(f"# config: {json.dumps(_plain(cfg.experiment_dict()), sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    _atomic_write(path, buf.getvalue())


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# shared setup


def _system(cfg: ExperimentConfig):
    d = cfg.data
    g = enumerate_classes(d["discriminant"])
    anchor = g.index_of(d["form"]) if d["form"] else d["anchor"]
    return g, character_system(g, anchor), anchor


def _t_max(cfg: ExperimentConfig, need: float) -> float:
    tm = cfg.data["precision"]["t_max"]
    return float(tm) if tm else max(100.0, 1.05 * need + 10.0)


def _windows(cfg: ExperimentConfig) -> list:
    w = cfg.data["windows"]
    if w:
        return [(float(a), float(b)) for a, b in w]
    T = float(cfg.data["T"])
    return [(T, 2 * T)]


def _model_cfg(cfg: ExperimentConfig, n: int | None = None) -> rmodel.ModelConfig:
    m = cfg.data["model"]
    return rmodel.ModelConfig(P_max=m["P_max"], k_max=m["k_max"], n_samples=n or m["n_samples"], base_seed=m["seed"],
                              block=m["block"], threads=cfg.data["threads"])


def _cached(cfg: ExperimentConfig, key, compute):
    cdir = cfg.data["cache"]
    if not cdir:
        return compute()
    hit = cache_get(key, cdir)
    if hit is not None:
        return hit
    val = _plain(compute())
    cache_put(key, val, cdir)
    return val


# ---------------------------------------------------------------------------
# subcommands


def cmd_classgroup(cfg, out):
    g, sys, anchor = _system(cfg)
    res = sys.to_dict()
    res["anchor_form"] = list(g.classes[anchor].as_tuple())
    write_json(os.path.join(out, "classgroup.json"), cfg, "classgroup", res)
    return True


def cmd_eval(cfg, out):
    d = cfg.data
    g, sys, anchor = _system(cfg)
    tg = d["t"]
    ts = np.linspace(float(tg["start"]), float(tg["stop"]), int(tg["num"]))
    tmax = _t_max(cfg, float(np.max(np.abs(ts))))
    ctxs = class_contexts(sys, target_abs_error=d["precision"]["target_abs_error"], t_max=tmax)
    sig = d["sigma"]
    rows = []
    for t in ts:
        E = epstein_zeta_line(sig, float(t), ctxs.ctxs[anchor])
        L = hecke_all(sig, float(t), sys, ctxs)
        for k, s in enumerate(sig):
            row = [s, float(t), E[k].real, E[k].imag, abs(E[k])]
            for j in range(sys.J):
                row += [L[j, k].real, L[j, k].imag]
            rows.append(row)
    header = ["sigma", "t", "re_E", "im_E", "abs_E"] + [f"{p}_L{j}" for j in range(sys.J) for p in ("re", "im")]
    write_csv(os.path.join(out, "eval.csv"), cfg, header, rows)
    return True


def _zero_rows(zs):
    return [[z.beta, z.gamma, z.residual, int(z.converged), -1 if z.verified is None else int(z.verified)] for z in zs]


def cmd_zeros(cfg, out):
    d = cfg.data
    g, sys, anchor = _system(cfg)
    s1, s2 = d["strip"]["sigma1"], d["strip"]["sigma2"]
    wins = _windows(cfg)
    tmax = _t_max(cfg, max(b for _, b in wins))
    ctx = make_context(g.classes[anchor], target_abs_error=d["precision"]["target_abs_error"], t_max=tmax)
    ev = zeros.LineEvaluator(ctx, threads=d["threads"])
    counts, allz = [], []
    for a, b in wins:
        key = {"op": "zeros", "D": d["discriminant"], "form": list(g.classes[anchor].as_tuple()), "rect": [s1, s2, a, b],
               "eps": d["precision"]["target_abs_error"], "list": d["list_zeros"]}

        def compute(a=a, b=b):
            n = zeros.count_window(s1, s2, a, b, ev)
            zs = zeros.list_zeros(zeros.Rectangle(s1, s2, a, b), ev) if d["list_zeros"] else []
            return {"count": n, "zeros": _zero_rows(zs)}

        r = _cached(cfg, key, compute)
        counts.append({"t1": a, "t2": b, "count": r["count"], "listed": len(r["zeros"])})
        allz.extend(r["zeros"])
    write_json(os.path.join(out, "zeros.json"), cfg, "zeros", {"sigma1": s1, "sigma2": s2, "windows": counts, "zeros": allz})
    write_csv(os.path.join(out, "zeros.csv"), cfg, ["beta", "gamma", "residual", "converged", "verified"], allz)
    return True


def cmd_model(cfg, out):
    g, sys, anchor = _system(cfg)
    mc = _model_cfg(cfg)
    table = build_euler_table(sys, mc.P_max)
    res = []
    for s in cfg.data["sigma"]:
        est = rmodel.estimate_M(s, mc, sys, table)
        mp = rmodel.estimate_M_prime(s, mc, sys, table)
        res.append({"M": rmodel.estimate_json(est, s, mc),
                    "M_prime_pathwise": rmodel.estimate_json(mp.pathwise, s, mc),
                    "M_prime_finite_difference": rmodel.estimate_json(mp.finite_difference, s, mc)})
    write_json(os.path.join(out, "model.json"), cfg, "model", res)
    return True


def cmd_density(cfg, out):
    d = cfg.data
    g, sys, anchor = _system(cfg)
    s1, s2 = d["strip"]["sigma1"], d["strip"]["sigma2"]
    mc = _model_cfg(cfg)
    table = build_euler_table(sys, mc.P_max)
    pred = zeros.predicted_density(s1, s2, mc, sys, table)
    wins = _windows(cfg)
    tmax = _t_max(cfg, max(b for _, b in wins))
    ctx = make_context(g.classes[anchor], target_abs_error=d["precision"]["target_abs_error"], t_max=tmax)
    ev = zeros.LineEvaluator(ctx, threads=d["threads"])
    rows, counts = [], []
    for a, b in wins:
        key = {"op": "count", "D": d["discriminant"], "form": list(g.classes[anchor].as_tuple()), "rect": [s1, s2, a, b],
               "eps": d["precision"]["target_abs_error"]}
        n = _cached(cfg, key, lambda a=a, b=b: zeros.count_window(s1, s2, a, b, ev))
        counts.append(n)
        rows.append([a, b, b - a, n, pred.c * (b - a)])
    c_fit, rms = zeros.fit_linear_density(wins, counts)
    res = {"predicted": pred.to_dict(), "fitted_c": c_fit, "fit_rms": rms,
           "table": [dict(zip(("t1", "t2", "length", "count", "predicted_count"), r)) for r in rows]}
    write_json(os.path.join(out, "density.json"), cfg, "density", res)
    write_csv(os.path.join(out, "density.csv"), cfg, ["t1", "t2", "length", "count", "predicted_count"], rows)
    return True


def cmd_discrepancy(cfg, out):
    d = cfg.data
    g, sys, anchor = _system(cfg)
    dc = d["discrepancy"]
    sigma = d["sigma"][0]
    T = float(d["T"])
    mc = _model_cfg(cfg, dc["n_model"])
    table = build_euler_table(sys, mc.P_max)
    ctxs = class_contexts(sys, target_abs_error=d["precision"]["target_abs_error"], t_max=_t_max(cfg, 2 * T))
    model = rmodel.model_vectors(sigma, mc, sys, table)
    emp = dist.empirical_measure(sigma, T, dc["n_emp"], sys, ctxs, seed=dc["family_seed"], threads=d["threads"])
    fam = dist.rect_family(model, seed=dc["family_seed"], n_random=dc["n_random"])
    rep = dist.discrepancy_sup(emp, model, fam)
    res = rep.to_dict()
    res["skipped"] = emp.skipped
    write_json(os.path.join(out, "discrepancy.json"), cfg, "discrepancy", res)
    return True


def cmd_selftest(cfg, out):
    from . import selftest

    res = selftest.run(cfg)
    write_json(os.path.join(out, "selftest.json"), cfg, "selftest", res)
    return res["pass"]


HANDLERS = {
    "classgroup": cmd_classgroup,
    "eval": cmd_eval,
    "zeros": cmd_zeros,
    "model": cmd_model,
    "density": cmd_density,
    "discrepancy": cmd_discrepancy,
    "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="epzeros", description="Epstein zeta zeros and value distribution experiments")
    p.add_argument("--version", action="version", version=f"epzeros {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML experiment file")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--cache", help="cache directory (default $EPZEROS_CACHE)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field, e.g. --set model.n_samples=5000")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        over = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            over[k.strip()] = parse_value(v)
        if args.threads is not None:
            over["threads"] = args.threads
        if args.out is not None:
            over["out"] = args.out
        cache = args.cache if args.cache is not None else os.environ.get("EPZEROS_CACHE")
        if cache:
            over["cache"] = cache
        cfg = load_config(args.config, over)
    except ConfigError as e:
        print(f"config error: {e}", file=_sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"io error: {e}", file=_sys.stderr)
        return EXIT_IO
    try:
        ok = HANDLERS[args.command](cfg, cfg.data["out"])
    except ConfigError as e:
        print(f"config error: {e}", file=_sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"io error: {e}", file=_sys.stderr)
        return EXIT_IO
    except (EpzerosError, ArithmeticError, ValueError) as e:
        print(f"numeric failure: {type(e).__name__}: {e}", file=_sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if ok else EXIT_NUMERIC


def main(argv=None) -> None:
    _sys.exit(run(argv))


if __name__ == "__main__":
    main()
