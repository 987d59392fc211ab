"""Experiment configuration: YAML file plus flag overrides, validated with field/line diagnostics."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError

DEFAULTS: dict = {
    "discriminant": None,
    "form": None,
    "anchor": 0,
    "sigma": [0.75],
    "t": {"start": 10.0, "stop": 50.0, "num": 5},
    "windows": [],
    "T": 1000.0,
    "strip": {"sigma1": 0.55, "sigma2": 0.95},
    "model": {"P_max": 10000, "k_max": 3, "n_samples": 2000, "seed": 20240917, "block": 2048},
    "precision": {"target_abs_error": 1e-12, "t_max": None},
    "discrepancy": {"n_emp": 1000, "n_model": 2000, "family_seed": 0, "n_random": 2000},
    "list_zeros": True,
    "selftest": {"points": 5, "seed": 7},
    "threads": 1,
    "cache": None,
    "out": "out",
}

# execution settings: they change how a run is carried out, never its results
RUNTIME_KEYS = ("threads", "cache", "out")

_TYPES = {
    "discriminant": (int, type(None)),
    "form": (list, type(None)),
    "anchor": int,
    "sigma": (list, float, int),
    "windows": list,
    "T": (float, int),
    "list_zeros": bool,
    "threads": int,
    "cache": (str, type(None)),
    "out": str,
}


@dataclass
class ExperimentConfig:
    data: dict
    lines: dict = field(default_factory=dict, repr=False)  # key path -> line number in the file
    source: str | None = None

    def __getitem__(self, k):
        return self.data[k]

    def get(self, path: str):
        cur = self.data
        for part in path.split("."):
            cur = cur[part]
        return cur

    def where(self, path: str) -> str:
        ln = self.lines.get(path)
        src = self.source or "<config>"
        return f"{src}:{ln}" if ln else src

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def experiment_dict(self) -> dict:
        """The resolved config without execution settings; embedded in every artifact."""
        return {k: copy.deepcopy(v) for k, v in self.data.items() if k not in RUNTIME_KEYS}


def _line_map(text: str) -> dict:
    """key path -> 1-based line of each mapping key in the YAML text."""
    out: dict = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                out[path] = k.start_mark.line + 1
                walk(v, path)

    if root is not None:
        walk(root, "")
    return out


def _merge(base: dict, over: dict, prefix: str, lines: dict, src: str) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        path = f"{prefix}.{k}" if prefix else str(k)
        if k not in base:
            ln = lines.get(path)
            raise ConfigError(f"{src}{':' + str(ln) if ln else ''}: unknown field '{path}'")
        if isinstance(base[k], dict) and base[k] and not isinstance(v, dict):
            raise ConfigError(f"{src}:{lines.get(path, '?')}: field '{path}' must be a mapping")
        if isinstance(base[k], dict) and base[k]:
            out[k] = _merge(base[k], v, path, lines, src)
        else:
            out[k] = v
    return out


def parse_value(text: str):
    return yaml.safe_load(text)


def load_config(path: str | None = None, overrides: dict | None = None, text: str | None = None) -> ExperimentConfig:
    src = path or "<config>"
    if text is None and path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    raw: dict = {}
    lines: dict = {}
    if text:
        try:
            raw = yaml.safe_load(text) or {}
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark
            ln = mark.line + 1 if mark is not None else "?"
            raise ConfigError(f"{src}:{ln}: YAML syntax error: {e.problem}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{src}: top level must be a mapping")
        lines = _line_map(text)
    data = _merge(DEFAULTS, raw, "", lines, src)
    for key, val in (overrides or {}).items():
        cur = data
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(cur.get(p), dict):
                raise ConfigError(f"override '{key}': unknown section '{p}'")
            cur = cur[p]
        if parts[-1] not in cur:
            raise ConfigError(f"override '{key}': unknown field")
        cur[parts[-1]] = val
    cfg = ExperimentConfig(data, lines, src)
    validate(cfg)
    return cfg


def _fail(cfg: ExperimentConfig, path: str, msg: str):
    raise ConfigError(f"{cfg.where(path)}: field '{path}': {msg}")


def validate(cfg: ExperimentConfig) -> None:
    d = cfg.data
    for k, ty in _TYPES.items():
        if not isinstance(d[k], ty) or (isinstance(d[k], bool) and ty is int):
            _fail(cfg, k, f"bad type {type(d[k]).__name__}")
    if d["form"] is not None:
        f = d["form"]
        if len(f) != 3 or not all(isinstance(x, int) and not isinstance(x, bool) for x in f):
            _fail(cfg, "form", "expected three integers [a, b, c]")
        disc = f[1] ** 2 - 4 * f[0] * f[2]
        if f[0] <= 0 or disc >= 0:
            _fail(cfg, "form", f"form {f} is not positive definite")
        if d["discriminant"] is not None and d["discriminant"] != disc:
            _fail(cfg, "discriminant", f"does not match the form (b^2 - 4ac = {disc})")
        d["discriminant"] = disc
    if d["discriminant"] is None:
        _fail(cfg, "discriminant", "either discriminant or form is required")
    D = d["discriminant"]
    if D >= 0 or D % 4 not in (0, 1):
        _fail(cfg, "discriminant", f"{D} is not a negative discriminant")
    sig = d["sigma"] if isinstance(d["sigma"], list) else [d["sigma"]]
    if not sig or not all(isinstance(s, (int, float)) and not isinstance(s, bool) and math.isfinite(s) for s in sig):
        _fail(cfg, "sigma", "expected a list of real numbers")
    d["sigma"] = [float(s) for s in sig]
    tg = d["t"]
    if not (isinstance(tg.get("num"), int) and tg["num"] >= 1):
        _fail(cfg, "t.num", "must be a positive integer")
    for w in d["windows"]:
        if not (isinstance(w, list) and len(w) == 2 and 0 <= w[0] < w[1]):
            _fail(cfg, "windows", f"window {w} must be [t1, t2] with 0 <= t1 < t2")
    if d["T"] <= 0:
        _fail(cfg, "T", "must be positive")
    st = d["strip"]
    if not 0.5 < st["sigma1"] < st["sigma2"]:
        _fail(cfg, "strip", "need 1/2 < sigma1 < sigma2")
    m = d["model"]
    for k in ("P_max", "k_max", "n_samples", "seed", "block"):
        if not isinstance(m[k], int) or isinstance(m[k], bool):
            _fail(cfg, f"model.{k}", "must be an integer")
    if m["P_max"] < 2 or m["k_max"] < 1 or m["n_samples"] < 1 or m["block"] < 1:
        _fail(cfg, "model", "P_max >= 2, k_max >= 1, n_samples >= 1 and block >= 1 required")
    if not 0 <= m["seed"] < 2**64:
        _fail(cfg, "model.seed", "must fit in 64 bits")
    p = d["precision"]
    if not (isinstance(p["target_abs_error"], (int, float)) and 0 < p["target_abs_error"] < 1):
        _fail(cfg, "precision.target_abs_error", "must lie in (0, 1)")
    if d["threads"] < 1:
        _fail(cfg, "threads", "must be at least 1")
    dc = d["discrepancy"]
    for k in ("n_emp", "n_model", "family_seed", "n_random"):
        if not isinstance(dc[k], int) or dc[k] < 0:
            _fail(cfg, f"discrepancy.{k}", "must be a non-negative integer")
