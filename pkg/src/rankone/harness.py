"""Convergence experiments: simulated largest components against log-n theory.

For every graph size ``n`` in the grid a number of independent replicas is
drawn, each replica reduced to one statistic (largest component size, or
largest component activity, divided by ``log n``), and the replicas are
averaged.  The ``predicted`` column holds the limit constant ``1/log r(c)``,
``1/log alpha(c)`` or ``1/log gamma(p, c)``.

Replica ``i`` at size ``n`` draws from stream ``(master_seed, n, i)``; the
component and activity targets therefore look at the very same graphs.
Results are folded in ``(n, i)`` order, so the worker count never changes
the output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import OutOfRange
from .graph import components, sample_model_graph
from .model import TypeSpace
from .percolation import (
    LatticeSpec,
    empirical_macro_law,
    gamma,
    one_d_cluster_law,
    sample_clusters,
    sample_hybrid,
)
from .rng import derive_stream
from .theory import alpha_of_c, r_of_c

TARGETS = ("component_size", "component_activity", "percolation_hybrid")
CSV_FIELDS = ("target", "n", "reps", "mean", "stderr", "predicted", "ratio", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.

    For ``percolation_hybrid`` the grid lists box radii ``N`` and ``d``/``p``
    describe the lattice; rows then report ``n = |B(N)|``.
    """

    space: Optional[TypeSpace]
    c: float
    n_grid: tuple
    reps_per_n: tuple
    master_seed: int = 0
    target: str = "component_size"
    type_mode: str = "iid"
    d: int = 1
    p: float = 0.0
    macro_law: str = "exact"
    band: tuple = (0.75, 1.25)
    workers: int = 1

    def __post_init__(self):
        if self.target not in TARGETS:
            raise OutOfRange(f"unknown target {self.target!r}")
        grid = tuple(int(n) for n in self.n_grid)
        reps = self.reps_per_n
        reps = (int(reps),) * len(grid) if np.isscalar(reps) else tuple(int(r) for r in reps)
        if not grid:
            raise OutOfRange("n_grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise OutOfRange("n_grid must be strictly increasing")
        if len(reps) != len(grid) or min(reps) < 1:
            raise OutOfRange("reps_per_n must give at least one replica per grid point")
        if self.target != "percolation_hybrid" and self.space is None:
            raise OutOfRange("graph experiments need a type space")
        if self.c < 0:
            raise OutOfRange(f"c must be nonnegative, got {self.c}")
        object.__setattr__(self, "n_grid", grid)
        object.__setattr__(self, "reps_per_n", reps)


@dataclass(frozen=True)
class SummaryRow:
    target: str
    n: int
    reps: int
    mean: float
    stderr: float
    predicted: float
    ratio: float
    seed: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    raw: dict = field(default_factory=dict)  # n -> per-replica statistics
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Replica tasks (module level so they pickle)


def _graph_replica(args):
    space, c, n, mode, seed, i = args
    rng = derive_stream(seed, n, i)
    g = sample_model_graph(space, c, n, mode=mode, rng=rng)
    st = components(g, space)
    return st.c1, st.max_activity


def _hybrid_replica(args):
    d, N, p, c, seed, i = args
    lat = LatticeSpec(d, N, p)
    h = sample_hybrid(lat, c, derive_stream(seed, lat.box_size, i))
    return h.c1_combined, h.c1_macro_activity, h.k_n


def _run_tasks(fn, tasks, workers):
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# ---------------------------------------------------------------------------
# Predictions


def predicted_constant(cfg: ExperimentConfig) -> float:
    """``1/log`` of the decay constant; ``inf`` when the constant is one."""
    if cfg.target == "percolation_hybrid":
        if cfg.p == 0 or cfg.macro_law == "exact":
            if cfg.d != 1 and cfg.p != 0:
                raise OutOfRange("exact macro law is only known for d = 1")
            law = one_d_cluster_law(cfg.p)
        else:
            lat = LatticeSpec(cfg.d, cfg.n_grid[-1], cfg.p)
            law = empirical_macro_law(sample_clusters(lat, derive_stream(cfg.master_seed, "macro-law")))
        const = gamma(law, cfg.c)
    else:
        if cfg.c == 0:
            return 0.0
        fn = r_of_c if cfg.target == "component_size" else alpha_of_c
        const = fn(cfg.space, cfg.c)
    return math.inf if const <= 1.0 else 1.0 / math.log(const)


# ---------------------------------------------------------------------------
# Experiments


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    predicted = predicted_constant(cfg)
    rows, raw = [], {}
    identity_ok = True
    for n, reps in zip(cfg.n_grid, cfg.reps_per_n):
        if cfg.target == "percolation_hybrid":
            lat = LatticeSpec(cfg.d, n, cfg.p)
            size = lat.box_size
            tasks = [(cfg.d, n, cfg.p, cfg.c, cfg.master_seed, i) for i in range(reps)]
            out = np.array(_run_tasks(_hybrid_replica, tasks, cfg.workers), dtype=float)
            identity_ok &= bool(np.all(out[:, 0] == out[:, 1]))
            stat = out[:, 0] / math.log(size)
            raw[size] = out
        else:
            size = n
            tasks = [(cfg.space, cfg.c, n, cfg.type_mode, cfg.master_seed, i) for i in range(reps)]
            out = np.array(_run_tasks(_graph_replica, tasks, cfg.workers), dtype=float)
            col = 0 if cfg.target == "component_size" else 1
            stat = out[:, col] / math.log(n)
            raw[n] = out
        mean = float(stat.mean())
        se = float(stat.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
        ratio = mean / predicted if 0 < predicted < math.inf else math.nan
        rows.append(SummaryRow(cfg.target, size, reps, mean, se, predicted, ratio, cfg.master_seed))
    extra = {"samplewise_identity": identity_ok} if cfg.target == "percolation_hybrid" else {}
    return ExperimentResult(cfg, rows, raw, extra)


def run_component_experiment(cfg: ExperimentConfig) -> list[SummaryRow]:
    """Statistic ``C1 / log n`` against ``1 / log r(c)``."""
    return run_experiment(_retarget(cfg, "component_size")).rows


def run_activity_experiment(cfg: ExperimentConfig) -> list[SummaryRow]:
    """Statistic ``max component activity / log n`` against ``1 / log alpha(c)``."""
    return run_experiment(_retarget(cfg, "component_activity")).rows


def run_percolation_experiment(cfg: ExperimentConfig) -> list[SummaryRow]:
    """Statistic ``C1(G_N(p, c)) / log |B(N)|`` against ``1 / log gamma(p, c)``."""
    return run_experiment(_retarget(cfg, "percolation_hybrid")).rows


def _retarget(cfg, target):
    if cfg.target == target:
        return cfg
    fields = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    fields["target"] = target
    return ExperimentConfig(**fields)


# ---------------------------------------------------------------------------
# Reporting


@dataclass(frozen=True)
class Report:
    monotone: bool
    final_ratio: float
    band: tuple
    final_pass: bool
    passed: bool

    def to_dict(self):
        d = asdict(self)
        d["band"] = list(self.band)
        if not math.isfinite(self.final_ratio):
            d["final_ratio"] = None
        return d


def summarize(rows: Sequence[SummaryRow], band=(0.75, 1.25)) -> Report:
    """Trend and final-band verdicts.

    ``monotone`` holds when the ratio column never decreases along the grid
    (vacuously for a single row).  Rows with an omitted ratio (decay
    constant equal to one) cannot pass the band.
    """
    if not rows:
        raise OutOfRange("nothing to summarize")
    ratios = [r.ratio for r in rows]
    monotone = all(b >= a for a, b in zip(ratios, ratios[1:]))
    final = ratios[-1]
    final_pass = bool(math.isfinite(final) and band[0] <= final <= band[1])
    return Report(monotone, final, tuple(band), final_pass, monotone and final_pass)


def fmt(x) -> str:
    """Twelve significant digits; integers verbatim."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def rows_to_csv(rows: Sequence[SummaryRow], header_comment: Optional[str] = None) -> str:
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([fmt(getattr(r, f)) if f != "target" else r.target for f in CSV_FIELDS])
    return buf.getvalue()


def report_json(result: ExperimentResult, report: Report) -> str:
    payload = {
        "target": result.config.target,
        "rows": [
            {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in asdict(r).items()}
            for r in result.rows
        ],
        "verdict": report.to_dict(),
        **result.extra,
    }
    return json.dumps(payload, indent=2, sort_keys=True)
