"""Command-line entry point: ``rankone {theory,scan,simulate,branching,percolation}``.

Options come from an optional config file (``--config``) and from flags;
flags win.  The config file holds ``key = value`` entries separated by
newlines or top-level commas, e.g.::

    family = geometric, param = 0.7, psi = identity, tail_tol = 1e-12
    atoms = [(1, 0.5, 1), (2, 0.5, 2)]

Every output starts with the fully resolved configuration (a ``# config:``
line for csv/table, a ``config`` key for json) which re-parses to the same
run.  Exit status: 0 success, 1 a configured band failed, 2 usage or model
error.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import branching as br
from . import harness, theory
from .errors import ConfigError, MissingRequired, RankOneError, TypeMismatch, UnknownKey
from .model import DEFAULT_TAIL_TOL, build_space, c_critical, space_from_descriptor
from .percolation import one_d_cluster_law

SUBCOMMANDS = ("theory", "scan", "simulate", "branching", "percolation")
FORMATS = ("csv", "json", "table")


# ---------------------------------------------------------------------------
# Value parsers: each takes a string (flag) or an already-typed value (file)


def _float(v):
    return float(v)


def _pos_float(v):
    x = float(v)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError("must be a positive number")
    return x


def _nonneg_float(v):
    x = float(v)
    if not (x >= 0 and math.isfinite(x)):
        raise ValueError("must be a nonnegative number")
    return x


def _int(v):
    if isinstance(v, str):
        x = float(v)
    else:
        x = v
    if isinstance(x, float) and not x.is_integer():
        raise ValueError("must be an integer")
    return int(x)


def _pos_int(v):
    x = _int(v)
    if x < 1:
        raise ValueError("must be a positive integer")
    return x


def _seq(item):
    def parse(v):
        if isinstance(v, str):
            parts = [p for p in v.replace(";", ",").split(",") if p.strip()]
        elif isinstance(v, (list, tuple)):
            parts = list(v)
        else:
            parts = [v]
        if not parts:
            raise ValueError("empty list")
        return [item(p) for p in parts]

    return parse


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(map(str, options))}")
        return v

    return parse


def _atoms(v):
    if isinstance(v, str):
        text = v.strip()
        if ";" in text:
            rows = [ast.literal_eval(p.strip()) for p in text.split(";") if p.strip()]
        else:
            rows = ast.literal_eval(text)
            if rows and not isinstance(rows[0], (tuple, list)):
                rows = [rows]
    else:
        rows = v
    out = []
    for r in rows:
        if len(r) != 3:
            raise ValueError("atoms are (label, weight, activity) triples")
        out.append([float(x) for x in r])
    return out


def _band(v):
    lo, hi = _seq(_float)(v)
    if not lo <= hi:
        raise ValueError("band must be lo,hi with lo <= hi")
    return [lo, hi]


def _str(v):
    return str(v)


MODEL_KEYS = {
    "atoms": _atoms,
    "family": _choice("homogeneous", "two-type", "geometric"),
    "param": _pos_float,
    "psi": _choice("identity", "constant", "square"),
    "psi_value": _pos_float,
    "tail_tol": _pos_float,
}
COMMON_KEYS = {"format": _choice(*FORMATS), "output": _str, "parallel": _pos_int}

# key -> parser, per subcommand
SCHEMA: dict[str, dict[str, Any]] = {
    "theory": {**MODEL_KEYS, "c": _pos_float},
    "scan": {**MODEL_KEYS, "c_grid": _seq(_pos_float), "c_frac": _seq(_pos_float)},
    "simulate": {
        **MODEL_KEYS,
        "c": _nonneg_float,
        "n": _seq(_pos_int),
        "reps": _seq(_pos_int),
        "seed": _int,
        "target": _choice("component_size", "component_activity"),
        "type_mode": _choice("iid", "quota"),
        "band": _band,
    },
    "branching": {
        **MODEL_KEYS,
        "c": _nonneg_float,
        "root": _float,
        "reps": _pos_int,
        "seed": _int,
        "cap": _pos_int,
        "per_replica": lambda v: v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes"),
    },
    "percolation": {
        "d": lambda v: _choice(1, 2, 3)(_int(v)),
        "N": _seq(_int),
        "p": _nonneg_float,
        "c": _pos_float,
        "reps": _seq(_pos_int),
        "seed": _int,
        "macro_law": _choice("exact", "empirical"),
        "band": _band,
    },
}
for _keys in SCHEMA.values():
    _keys.update(COMMON_KEYS)

DEFAULTS = {
    "tail_tol": DEFAULT_TAIL_TOL,
    "psi": "identity",
    "psi_value": 1.0,
    "format": "csv",
    "parallel": 1,
    "seed": 0,
    "target": "component_size",
    "type_mode": "iid",
    "cap": br.DEFAULT_CAP,
    "per_replica": False,
    "macro_law": "exact",
    "d": 1,
}
REQUIRED = {
    "theory": ("c",),
    "scan": (),
    "simulate": ("c", "n", "reps"),
    "branching": ("c", "root", "reps"),
    "percolation": ("N", "p", "c", "reps"),
}


@dataclass
class CliConfig:
    subcommand: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def space(self):
        v = self.values
        if "atoms" in v:
            return build_space(v["atoms"])
        if "family" not in v:
            raise MissingRequired("family", "give either atoms or a family descriptor")
        return space_from_descriptor(
            v["family"], v.get("param"), v.get("psi", "identity"), v.get("tail_tol", DEFAULT_TAIL_TOL), v.get("psi_value", 1.0)
        )

    def header(self) -> str:
        return "config: " + json.dumps({"subcommand": self.subcommand, **self.values}, sort_keys=True)


# ---------------------------------------------------------------------------
# Parsing


def _split_top_level(text: str) -> list[str]:
    out, depth, cur, quote = [], 0, [], None
    for ch in text:
        if quote:
            cur.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif depth == 0 and ch in ",\n":
            out.append("".join(cur))
            cur = []
            continue
        cur.append(ch)
    out.append("".join(cur))
    return [s.strip() for s in out if s.strip() and not s.strip().startswith("#")]


def parse_config_text(text: str) -> dict:
    """``key = value`` entries; values are Python literals or bare words."""
    entries = {}
    for piece in _split_top_level(text):
        if "=" not in piece:
            raise TypeMismatch(piece, "expected key = value")
        key, raw = (s.strip() for s in piece.split("=", 1))
        try:
            val = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            val = raw
        entries[key.replace("-", "_")] = val
    return entries


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankone", description=__doc__.split("\n")[0])
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name, keys in SCHEMA.items():
        sp = subs.add_parser(name)
        sp.add_argument("--config", default=None, help="key = value config file")
        for key in keys:
            flag = "--" + key.replace("_", "-")
            if key == "per_replica":
                sp.add_argument(flag, dest=key, action="store_const", const=True, default=argparse.SUPPRESS)
            else:
                sp.add_argument(flag, dest=key, default=argparse.SUPPRESS)
    return parser


def parse_config(argv, config_text: Optional[str] = None) -> CliConfig:
    """Merge config-file entries with flags (flags win) and validate.

    ``config_text`` overrides reading ``--config`` from disk (for tests).
    """
    ns = vars(_build_parser().parse_args(argv))
    sub = ns.pop("subcommand")
    path = ns.pop("config", None)
    file_vals = {}
    if config_text is None and path:
        with open(path) as fh:
            config_text = fh.read()
    if config_text:
        file_vals = parse_config_text(config_text)
        file_vals.pop("subcommand", None)
    schema = SCHEMA[sub]
    for key in file_vals:
        if key not in schema:
            raise UnknownKey(key, f"not a {sub} option")
    merged = {**file_vals, **ns}
    values = {}
    for key, raw in merged.items():
        try:
            values[key] = schema[key](raw)
        except (ValueError, TypeError, SyntaxError) as exc:
            raise TypeMismatch(key, f"{raw!r}: {exc}") from None
    for key in REQUIRED[sub]:
        if key not in values:
            raise MissingRequired(key, f"required by {sub}")
    if sub not in ("percolation",) and "atoms" not in values and "family" not in values:
        raise MissingRequired("family", "give --atoms or --family")
    if values.get("family") == "geometric" and "param" not in values:
        raise MissingRequired("param", "geometric family needs --param")
    for key, val in DEFAULTS.items():
        if key in schema and key not in values:
            values[key] = val
    return CliConfig(sub, dict(sorted(values.items())))


def parse_header(line: str) -> CliConfig:
    """Inverse of :meth:`CliConfig.header` (leading ``#`` optional)."""
    text = line.lstrip("#").strip()
    if text.startswith("config:"):
        text = text[len("config:"):]
    payload = json.loads(text)
    return CliConfig(payload.pop("subcommand"), dict(sorted(payload.items())))


# ---------------------------------------------------------------------------
# Output


def _emit_table(cfg: CliConfig, columns, rows, extra=None) -> str:
    fmt = cfg["format"]
    if fmt == "json":
        payload = {
            "config": {"subcommand": cfg.subcommand, **cfg.values},
            "rows": [dict(zip(columns, [_json_val(v) for v in r])) for r in rows],
        }
        if extra:
            payload.update(extra)
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    cells = [[harness.fmt(v) if not isinstance(v, str) else v for v in r] for r in rows]
    lines = ["# " + cfg.header()]
    if fmt == "csv":
        lines.append(",".join(columns))
        lines += [",".join(r) for r in cells]
        if extra:
            lines.append("# summary: " + json.dumps(_jsonable(extra), sort_keys=True))
    else:
        widths = [max(len(col), *(len(r[i]) for r in cells)) if cells else len(col) for i, col in enumerate(columns)]
        lines.append("  ".join(col.rjust(w) for col, w in zip(columns, widths)))
        lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
        if extra:
            lines += [f"{k}: {json.dumps(_jsonable(v), sort_keys=True)}" for k, v in extra.items()]
    return "\n".join(lines) + "\n"


def _json_val(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.12g}") if math.isfinite(v) else None
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return _json_val(obj)


# ---------------------------------------------------------------------------
# Subcommands


def _theory_row(space, c):
    rt = theory.tangency_r(space, c)
    at = theory.tangency_alpha(space, c)

    def inv_log(z):
        return math.inf if z <= 1 else 1.0 / math.log(z)

    return [
        c, c_critical(space), rt.regime.value, rt.y0, rt.z0, math.log(rt.z0), inv_log(rt.z0),
        at.z0, math.log(at.z0), inv_log(at.z0), rt.residual_fixed, rt.residual_slope,
        at.residual_fixed, at.residual_slope,
    ]


THEORY_COLUMNS = [
    "c", "c_cr", "regime", "y0", "r", "log_r", "inv_log_r", "alpha", "log_alpha",
    "inv_log_alpha", "r_residual_fixed", "r_residual_slope", "alpha_residual_fixed",
    "alpha_residual_slope",
]


def cmd_theory(cfg):
    space = cfg.space()
    return _emit_table(cfg, THEORY_COLUMNS, [_theory_row(space, cfg["c"])]), 0


def cmd_scan(cfg):
    space = cfg.space()
    ccr = c_critical(space)
    if "c_grid" in cfg.values:
        grid = cfg["c_grid"]
    else:
        grid = [f * ccr for f in cfg.get("c_frac") or [0.05 * k for k in range(1, 20)]]
    rows = []
    for c in grid:
        rt = theory.tangency_r(space, c)
        rows.append([c, ccr, rt.y0, rt.z0, theory.alpha_of_c(space, c)])
    return _emit_table(cfg, ["c", "c_cr", "y0", "r", "alpha"], rows), 0


def _verdict(cfg, result):
    band = cfg.get("band")
    rep = harness.summarize(result.rows, band if band else (-math.inf, math.inf))
    extra = {"monotone": rep.monotone, "final_ratio": rep.final_ratio}
    if band:
        extra.update(band=band, final_pass=rep.final_pass, passed=rep.passed)
    code = 1 if band and not rep.passed else 0
    return extra, code


def cmd_simulate(cfg):
    grid = cfg["n"]
    reps = cfg["reps"] if len(cfg["reps"]) > 1 else cfg["reps"] * len(grid)
    ecfg = harness.ExperimentConfig(
        space=cfg.space(), c=cfg["c"], n_grid=grid, reps_per_n=reps, master_seed=cfg["seed"],
        target=cfg["target"], type_mode=cfg["type_mode"], workers=cfg["parallel"],
    )
    result = harness.run_experiment(ecfg)
    extra, code = _verdict(cfg, result)
    rows = [[getattr(r, f) for f in harness.CSV_FIELDS] for r in result.rows]
    return _emit_table(cfg, list(harness.CSV_FIELDS), rows, extra), code


def cmd_branching(cfg):
    space = cfg.space()
    c, root = cfg["c"], cfg["root"]
    sample = br.sample_many(space, c, root, cfg["reps"], cfg["seed"], cfg["cap"])
    if cfg["per_replica"]:
        cols = ["replica", "root", "progeny", "activity", "generations", "censored"]
        rows = [
            [i, root, int(sample.progeny[i]), float(sample.total_activity[i]),
             int(sample.generations[i]), int(sample.censored[i])]
            for i in range(len(sample))
        ]
        return _emit_table(cfg, cols, rows), 0
    n = len(sample)
    cols = ["quantity", "mean", "se", "closed_form", "z"]
    rows = []
    subcritical = c < c_critical(space)
    for name, arr, closed in (
        ("progeny", sample.progeny.astype(float), br.mean_progeny if subcritical else None),
        ("activity", sample.total_activity, br.mean_activity if subcritical else None),
    ):
        mean = float(arr.mean())
        se = float(arr.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan
        cf = closed(space, c, root) if closed else math.nan
        z = (mean - cf) / se if se and math.isfinite(cf) and se > 0 else math.nan
        rows.append([name, mean, se, cf, z])
    return _emit_table(cfg, cols, rows, {"censored": int(sample.censored.sum())}), 0


def cmd_percolation(cfg):
    radii = cfg["N"]
    reps = cfg["reps"] if len(cfg["reps"]) > 1 else cfg["reps"] * len(radii)
    ecfg = harness.ExperimentConfig(
        space=None, c=cfg["c"], n_grid=radii, reps_per_n=reps, master_seed=cfg["seed"],
        target="percolation_hybrid", d=cfg["d"], p=cfg["p"], macro_law=cfg["macro_law"],
        workers=cfg["parallel"],
    )
    result = harness.run_experiment(ecfg)
    cols = ["N", "replica", "k_n", "inv_c_mean", "c1_combined", "log_box", "c1_over_log_box"]
    rows = []
    for N, (size, raw) in zip(radii, result.raw.items()):
        for i, (c1, _macro, k_n) in enumerate(raw):
            rows.append([N, i, int(k_n), k_n / size, int(c1), math.log(size), c1 / math.log(size)])
    pred = result.rows[-1].predicted
    gamma_val = math.exp(1.0 / pred) if 0 < pred < math.inf else 1.0
    extra, code = _verdict(cfg, result)
    extra.update(
        gamma=gamma_val,
        inv_log_gamma=pred,
        samplewise_identity=result.extra["samplewise_identity"],
        summary=[{f: getattr(r, f) for f in harness.CSV_FIELDS} for r in result.rows],
    )
    if cfg["p"] == 0 or cfg["d"] == 1:
        law = one_d_cluster_law(cfg["p"])
        extra["threshold_c"] = 1.0 / law.c_mean
    return _emit_table(cfg, cols, rows, extra), code


COMMANDS = {
    "theory": cmd_theory,
    "scan": cmd_scan,
    "simulate": cmd_simulate,
    "branching": cmd_branching,
    "percolation": cmd_percolation,
}


def dispatch(cfg: CliConfig, stdout=None) -> int:
    text, code = COMMANDS[cfg.subcommand](cfg)
    out = cfg.get("output")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        (stdout or sys.stdout).write(text)
    return code


def main(argv=None, stdout=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return dispatch(cfg, stdout)
    except ConfigError as exc:
        print(f"rankone: error: {exc}", file=sys.stderr)
        return 2
    except RankOneError as exc:
        print(f"rankone: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if exc.code is not None else 0


if __name__ == "__main__":
    sys.exit(main())
