"""Batch runs, summary statistics, Friedman/Holm ranking and the energy report."""
from __future__ import annotations

import csv
import io
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .instance import Instance
from .solver import RunRecord, SolverConfig, run

ALGORITHMS = ("HHASA_TS", "HHASA_UCB1", "HHASA_EG", "HHASA", "BACO", "VNS", "SA", "GA", "GRASP")
HH_VARIANTS = ALGORITHMS[:4]
# the published comparison against other methods uses one bandit variant per row
COMPARISON = ("HHASA_TS", "HHASA_UCB1", "HHASA_EG", "BACO", "VNS", "SA", "GA", "GRASP")
SELECTOR_ALGORITHM = {"ts": "HHASA_TS", "ucb1": "HHASA_UCB1", "eg": "HHASA_EG", "random": "HHASA"}


# ---------------------------------------------------------------- batch runs

def _run_one(inst: Instance, cfg: SolverConfig) -> RunRecord:
    try:
        return run(inst, cfg)
    except Exception as exc:  # recorded, the batch carries on
        return RunRecord.failed(inst.name, cfg.selector, cfg.seed, f"{type(exc).__name__}: {exc}")


def default_jobs() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def run_batch(inst: Instance, cfg: SolverConfig, n_runs: int, base_seed: int = 0,
              jobs: Optional[int] = None) -> list[RunRecord]:
    """``n_runs`` independent runs seeded ``base_seed, base_seed+1, ...``, in seed order."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    cfgs = [replace(cfg, seed=base_seed + i) for i in range(n_runs)]
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1 or n_runs == 1:
        return [_run_one(inst, c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=min(jobs, n_runs)) as pool:
        return list(pool.map(_run_one, [inst] * n_runs, cfgs))


# ---------------------------------------------------------------- statistics

@dataclass(frozen=True)
class StatsRow:
    instance: str
    selector: str
    min: float
    mean: float
    std: float
    runs: int


def summarize(records: Sequence[RunRecord]) -> StatsRow:
    """Min, mean and sample standard deviation of the successful runs."""
    good = [r for r in records if r.ok]
    if not good:
        raise ValueError("no successful runs to summarize")
    values = np.array([r.best_fitness for r in good])
    std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    if np.all(values == values[0]):
        std = 0.0
    return StatsRow(good[0].instance, good[0].selector, float(values.min()),
                    float(values.mean()), std, len(values))


@dataclass
class RankReport:
    algorithms: list
    instances: list
    avg_ranks: np.ndarray
    rank_matrix: np.ndarray
    chi2: float
    p_value: float

    @property
    def n_instances(self) -> int:
        return len(self.instances)

    def rank_of(self, algorithm: str) -> float:
        return float(self.avg_ranks[self.algorithms.index(algorithm)])

    @property
    def control(self) -> str:
        return self.algorithms[int(np.argmin(self.avg_ranks))]


def friedman_ranks(means, algorithms: Sequence[str], instances: Optional[Sequence[str]] = None,
                   na_policy: str = "error") -> RankReport:
    """Average Friedman ranks of ``means[instance, algorithm]`` (lower mean is better).

    ``na_policy="worst"`` ranks missing cells behind every present value,
    tied among themselves; ``"error"`` refuses incomplete matrices.
    """
    m = np.asarray(means, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("means must be a 2-D instance x algorithm matrix")
    N, A = m.shape
    if A != len(algorithms):
        raise ValueError("column count does not match the algorithm list")
    if A < 2 or N < 2:
        raise ValueError("need at least 2 algorithms and 2 instances")
    missing = np.isnan(m)
    if missing.any():
        if na_policy == "error":
            i, j = np.argwhere(missing)[0]
            where = instances[i] if instances is not None else i
            raise ValueError(f"missing mean for {algorithms[j]} on {where}")
        if na_policy != "worst":
            raise ValueError(f"unknown na_policy {na_policy!r}")
        m = np.where(missing, np.inf, m)
    ranks = np.vstack([sps.rankdata(row, method="average") for row in m])
    avg = ranks.mean(axis=0)
    chi2 = 12.0 * N / (A * (A + 1)) * (float(np.sum(avg ** 2)) - A * (A + 1) ** 2 / 4.0)
    p = float(sps.chi2.sf(chi2, A - 1))
    names = list(instances) if instances is not None else [str(i) for i in range(N)]
    return RankReport(list(algorithms), names, avg, ranks, chi2, p)


@dataclass(frozen=True)
class HolmRow:
    algorithm: str
    avg_rank: float
    z: float
    p_raw: float
    p_holm: float
    significant: bool


def holm_posthoc(report: RankReport, control: Optional[str] = None,
                 level: float = 0.05) -> list[HolmRow]:
    """One-vs-control z tests on average ranks with Holm step-down adjustment.

    Rows come back in ascending raw p order; the control is not included.
    """
    control = report.control if control is None else control
    A, N = len(report.algorithms), report.n_instances
    se = math.sqrt(A * (A + 1) / (6.0 * N))
    rc = report.rank_of(control)
    others = [a for a in report.algorithms if a != control]
    z = np.array([(report.rank_of(a) - rc) / se for a in others])
    p_raw = 2.0 * sps.norm.sf(np.abs(z))
    order = np.argsort(p_raw, kind="stable")
    m = len(others)
    adjusted = np.empty(m)
    running = 0.0
    for step, idx in enumerate(order):
        running = max(running, min(1.0, (m - step) * p_raw[idx]))
        adjusted[idx] = running
    return [HolmRow(others[i], report.rank_of(others[i]), float(z[i]), float(p_raw[i]),
                    float(adjusted[i]), bool(adjusted[i] < level)) for i in order]


def energy_diff_report(stats: Iterable[StatsRow], best_known: dict, h: dict) -> dict:
    """``(mean - best_known) * h`` per instance and algorithm, plus a ``Total`` row."""
    table: dict[str, dict[str, float]] = {}
    for row in stats:
        if row.instance not in best_known:
            raise KeyError(f"no best-known value for {row.instance}")
        if row.instance not in h:
            raise KeyError(f"no energy consumption rate for {row.instance}")
        table.setdefault(row.instance, {})[row.selector] = \
            (row.mean - best_known[row.instance]) * h[row.instance]
    total: dict[str, float] = {}
    for per_alg in table.values():
        for alg, v in per_alg.items():
            total[alg] = total.get(alg, 0.0) + v
    table["Total"] = total
    return table


# ---------------------------------------------------------------- reference data

def _data_text(name: str) -> str:
    return resources.files("hhasa").joinpath("data", name).read_text()


def _float_or_nan(s: str) -> float:
    s = s.strip()
    return math.nan if s.upper() in ("", "NA", "NAN") else float(s)


def read_stats_csv(text: str) -> list[StatsRow]:
    """Rows of a stats file; accepts either an ``algorithm`` or a ``selector`` column."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        alg = rec.get("algorithm") or rec.get("selector")
        if alg is None or "instance" not in rec:
            raise ValueError("stats file needs instance and algorithm/selector columns")
        rows.append(StatsRow(rec["instance"], alg, _float_or_nan(rec.get("min", "")),
                             _float_or_nan(rec.get("mean", "")), _float_or_nan(rec.get("std", "")),
                             int(rec["runs"]) if rec.get("runs") else 0))
    return rows


def reference_stats() -> list[StatsRow]:
    """Published min/mean/std per instance for all nine algorithms."""
    return read_stats_csv(_data_text("reference_means.csv"))


def benchmark_meta() -> dict[str, dict]:
    out = {}
    for rec in csv.DictReader(io.StringIO(_data_text("benchmark_meta.csv"))):
        out[rec["instance"]] = {k: (float(v) if k in ("max_load", "max_energy", "h") else int(v))
                                for k, v in rec.items() if k != "instance"}
    return out


def best_known(rows: Optional[Iterable[StatsRow]] = None) -> dict[str, float]:
    """Lowest published min per instance across all algorithms."""
    rows = reference_stats() if rows is None else rows
    out: dict[str, float] = {}
    for r in rows:
        if not math.isnan(r.min):
            out[r.instance] = min(out.get(r.instance, math.inf), r.min)
    return out


def instance_size(name: str) -> int:
    m = re.search(r"(\d+)$", name)
    if not m:
        raise ValueError(f"cannot read a size from instance name {name!r}")
    return int(m.group(1))


def subset_filter(spec: Optional[str]):
    """Predicate on instance names for specs such as ``>=E101`` or ``<X143``."""
    if not spec:
        return lambda name: True
    m = re.fullmatch(r"\s*(>=|<=|>|<|==)\s*([A-Za-z]*\d+)\s*", spec)
    if not m:
        raise ValueError(f"bad subset {spec!r}; expected e.g. '>=E101'")
    op, ref = m.group(1), instance_size(m.group(2))
    cmp = {">=": lambda a: a >= ref, "<=": lambda a: a <= ref, ">": lambda a: a > ref,
           "<": lambda a: a < ref, "==": lambda a: a == ref}[op]
    return lambda name: cmp(instance_size(name))


def means_matrix(rows: Iterable[StatsRow], algorithms: Optional[Sequence[str]] = None,
                 subset: Optional[str] = None) -> tuple[np.ndarray, list, list]:
    """Instance x algorithm matrix of means, NaN where a cell is absent."""
    keep = subset_filter(subset)
    rows = [r for r in rows if keep(r.instance)]
    instances: list[str] = []
    for r in rows:
        if r.instance not in instances:
            instances.append(r.instance)
    if algorithms is None:
        algorithms = []
        for r in rows:
            if r.selector not in algorithms:
                algorithms.append(r.selector)
    algorithms = list(algorithms)
    m = np.full((len(instances), len(algorithms)), np.nan)
    for r in rows:
        if r.selector in algorithms:
            m[instances.index(r.instance), algorithms.index(r.selector)] = r.mean
    return m, instances, algorithms


# ---------------------------------------------------------------- CSV writers

def _fmt(x: float) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6f}"


def stats_csv(rows: Iterable[StatsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", "selector", "min", "mean", "std", "runs"])
    for r in rows:
        w.writerow([r.instance, r.selector, _fmt(r.min), _fmt(r.mean), _fmt(r.std), r.runs])
    return buf.getvalue()


def ranks_csv(report: RankReport, holm: Sequence[HolmRow]) -> str:
    by_alg = {h.algorithm: h for h in holm}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "avg_rank", "p_holm", "significant"])
    for alg in sorted(report.algorithms, key=report.rank_of):
        h = by_alg.get(alg)
        w.writerow([alg, _fmt(report.rank_of(alg)), _fmt(h.p_holm) if h else "control",
                    str(h.significant).lower() if h else ""])
    return buf.getvalue()


def energy_csv(table: dict) -> str:
    algs: list[str] = []
    for per_alg in table.values():
        for a in per_alg:
            if a not in algs:
                algs.append(a)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance"] + algs)
    for inst, per_alg in table.items():
        w.writerow([inst] + [_fmt(per_alg.get(a, math.nan)) for a in algs])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
