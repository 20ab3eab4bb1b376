"""Experiment runner: seeded sweeps, metrics, complexity checks, baselines.

A report is a pure function of its :class:`ExperimentConfig`; runs are
ordered by seed no matter how many workers executed them.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .checks import violations as run_violations
from .codec import digest
from .committee import committee_probability
from .crypto import CryptoParams, deal
from .messages import committee_tag
from .sim import ADVERSARY_PHASES, PHASES, SCHEDULERS, AdversaryConfig, ConfigError, Trace, run

REPORT_VERSION = "evaba-report/1"
BASELINES = ("all-broadcast",)
ADVERSARIES = ("none", "crash", "mute", "equivocate", "rogue-broadcast", "withhold-shares", "scripted")

# Per-view totals are bounded by 5n^2 (selection, suggest, election,
# view change, decide) plus 9n*kappa (promotion and propose), and
# kappa <= n, so 14n^2 covers every configuration.
C_TOTAL = 14


@dataclass
class ExperimentConfig:
    n: int = 4
    f: Optional[int] = None
    kappa: Optional[int] = None
    runs: int = 1
    seed: int = 0
    adversary: str = "none"
    byz: tuple[int, ...] = ()
    byz_count: Optional[int] = None
    scheduler: str = "random"
    max_views: int = 20
    baseline: Optional[str] = None
    trace_dir: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.f is None:
            self.f = (self.n - 1) // 3
        if self.kappa is None:
            self.kappa = self.f + 1

    def check(self) -> None:
        if self.n < 1 or self.n != 3 * self.f + 1:
            raise ConfigError(f"n={self.n} is not 3f+1 for f={self.f}")
        if not 1 <= self.kappa <= self.n:
            raise ConfigError(f"kappa={self.kappa} outside 1..{self.n}")
        if self.runs < 1:
            raise ConfigError("runs must be positive")
        if not 0 <= self.seed < 1 << 63:
            raise ConfigError("seed out of range")
        if self.max_views < 1:
            raise ConfigError("max-views must be positive")
        if self.adversary not in ADVERSARIES:
            raise ConfigError(f"unknown adversary {self.adversary!r}")
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.scheduler!r}")
        if self.baseline is not None and self.baseline not in BASELINES:
            raise ConfigError(f"unknown baseline {self.baseline!r}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        self.adversary_for(self.seed).check(self.n, self.f)

    def adversary_for(self, seed: int) -> AdversaryConfig:
        return AdversaryConfig(
            scheduler=self.scheduler, behavior=self.adversary, byzantine=tuple(self.byz),
            seed=seed, count=self.byz_count,
        )

    def echo(self) -> dict:
        return {
            "n": self.n, "f": self.f, "kappa": self.kappa, "runs": self.runs, "seed": self.seed,
            "adversary": self.adversary, "byz": list(self.byz), "byz_count": self.byz_count,
            "scheduler": self.scheduler, "max_views": self.max_views, "baseline": self.baseline,
        }


# -- complexity ------------------------------------------------------------------

@dataclass
class ComplexityResult:
    n: int
    kappa: int
    per_view: dict[int, dict[str, int]]
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def max_total_ratio(self) -> float:
        """Largest per-view total divided by n^2 (the empirical ``c``)."""
        if not self.per_view:
            return 0.0
        return max(row["total"] for row in self.per_view.values()) / self.n ** 2


def complexity_bounds(n: int, kappa: int) -> dict[str, int]:
    return {
        "promotion": 8 * n * kappa,
        "propose": kappa * n,
        "suggest": n * n,
        "election": n * n,
        "view_change": n * n,
        "total": C_TOTAL * n * n,
    }


def check_complexity(trace: Trace) -> ComplexityResult:
    """Per-view message counts against the protocol's bounds.

    Adversary traffic (rogue SENDs, malformed bytes) is kept in its own
    counters and does not count against the honest budget.
    """
    n, kappa = trace.n, trace.kappa
    bounds = complexity_bounds(n, kappa)
    per_view: dict[int, dict[str, int]] = {}
    for (view, phase), row in sorted(trace.counters.items()):
        if phase in ADVERSARY_PHASES:
            continue
        acc = per_view.setdefault(view, {p: 0 for p in PHASES} | {"total": 0})
        acc[phase] += row[0]
        acc["total"] += row[0]
    failures = [
        f"view {view}: {key} messages {row[key]} > {bound}"
        for view, row in per_view.items()
        for key, bound in bounds.items()
        if row[key] > bound
    ]
    return ComplexityResult(n, kappa, per_view, failures)


# -- runs ------------------------------------------------------------------------

@dataclass
class RunRecord:
    seed: int
    kappa: int
    status: str
    views: int
    views_to_decide: Optional[int]
    decided_digest: Optional[str]
    ticks: int
    messages: dict[str, int]
    bytes_l: dict[str, int]
    bytes_k: dict[str, int]
    adversary_messages: dict[str, int]
    violations: list[str]
    complexity_failures: list[str]
    max_view_total: int

    @property
    def total_messages(self) -> int:
        return sum(self.messages.values())

    def to_dict(self) -> dict:
        return {
            "seed": self.seed, "kappa": self.kappa, "status": self.status, "views": self.views,
            "views_to_decide": self.views_to_decide, "decided_digest": self.decided_digest,
            "ticks": self.ticks, "messages": self.messages, "bytes_l": self.bytes_l,
            "bytes_k": self.bytes_k, "adversary_messages": self.adversary_messages,
            "violations": self.violations, "complexity_failures": self.complexity_failures,
        }


def record_of(trace: Trace) -> RunRecord:
    totals = trace.phase_totals()
    decided = {v for v in trace.decisions.values() if v is not None}
    comp = check_complexity(trace)
    return RunRecord(
        seed=trace.seed,
        kappa=trace.kappa,
        status=trace.status,
        views=max(s.view for i, s in trace.snapshots.items() if i in trace.honest),
        views_to_decide=trace.views_to_decide,
        decided_digest=digest(decided.pop()).hex() if len(decided) == 1 else None,
        ticks=trace.ticks,
        messages={p: totals.get(p, [0, 0, 0])[0] for p in PHASES},
        bytes_l={p: totals.get(p, [0, 0, 0])[1] for p in PHASES},
        bytes_k={p: totals.get(p, [0, 0, 0])[2] for p in PHASES},
        adversary_messages={p: totals.get(p, [0, 0, 0])[0] for p in ADVERSARY_PHASES},
        violations=run_violations(trace),
        complexity_failures=comp.failures,
        max_view_total=max((r["total"] for r in comp.per_view.values()), default=0),
    )


def run_one(cfg: ExperimentConfig, seed: int, kappa: Optional[int] = None,
            trace_path: Optional[str] = None) -> RunRecord:
    tr = run(
        CryptoParams.standard(cfg.n, seed=seed),
        cfg.adversary_for(seed),
        max_views=cfg.max_views,
        kappa=cfg.kappa if kappa is None else kappa,
        record=trace_path is not None,
    )
    if trace_path is not None:
        tr.write(trace_path)
    return record_of(tr)


def _job(args) -> RunRecord:
    return run_one(*args)


# -- report ----------------------------------------------------------------------

def _mean(xs) -> Optional[float]:
    xs = list(xs)
    return round(sum(xs) / len(xs), 6) if xs else None


def _p95(xs) -> Optional[int]:
    xs = sorted(xs)
    if not xs:
        return None
    return xs[math.ceil(0.95 * len(xs)) - 1]


def aggregate(records: list[RunRecord]) -> dict:
    decided = [r.views_to_decide for r in records if r.views_to_decide is not None]
    statuses: dict[str, int] = {}
    for r in records:
        statuses[r.status] = statuses.get(r.status, 0) + 1
    total_views = sum(r.views for r in records)
    promo = sum(r.messages["promotion"] for r in records)
    return {
        "statuses": dict(sorted(statuses.items())),
        "mean_views_to_decide": _mean(decided),
        "p95_views_to_decide": _p95(decided),
        "mean_messages": {p: _mean(r.messages[p] for r in records) for p in PHASES},
        "mean_total_messages": _mean(r.total_messages for r in records),
        "mean_bytes_l": _mean(sum(r.bytes_l.values()) for r in records),
        "mean_bytes_k": _mean(sum(r.bytes_k.values()) for r in records),
        "promotion_per_view": round(promo / total_views, 6) if total_views else None,
    }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    runs: list[RunRecord]
    baseline_runs: list[RunRecord] = field(default_factory=list)

    @property
    def violations(self) -> list[str]:
        return [f"seed {r.seed}: {v}" for r in self.runs + self.baseline_runs for v in r.violations]

    @property
    def complexity_failures(self) -> list[str]:
        return [f"seed {r.seed}: {v}" for r in self.runs for v in r.complexity_failures]

    @property
    def promotion_ratio(self) -> Optional[float]:
        """Baseline promotion messages per view over the committee mode's."""
        if not self.baseline_runs:
            return None
        ours = aggregate(self.runs)["promotion_per_view"]
        base = aggregate(self.baseline_runs)["promotion_per_view"]
        return round(base / ours, 6) if ours else None

    def to_dict(self) -> dict:
        n = self.config.n
        out = {
            "format": REPORT_VERSION,
            "config": self.config.echo(),
            "runs": len(self.runs),
            "aggregates": aggregate(self.runs),
            "complexity": {
                "bounds": complexity_bounds(n, self.config.kappa),
                "c": C_TOTAL,
                "observed_c": round(max(r.max_view_total for r in self.runs) / n ** 2, 6),
                "failures": self.complexity_failures,
            },
            "per_run": [r.to_dict() for r in self.runs],
            "violations": self.violations,
        }
        if self.baseline_runs:
            out["baseline"] = {
                "mode": self.config.baseline,
                "kappa": n,
                "aggregates": aggregate(self.baseline_runs),
                "promotion_ratio": self.promotion_ratio,
                "expected_ratio": round(n / self.config.kappa, 6),
                "per_run": [r.to_dict() for r in self.baseline_runs],
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def table(self) -> str:
        cfg = self.config
        agg = aggregate(self.runs)
        lines = [
            f"eVABA n={cfg.n} f={cfg.f} kappa={cfg.kappa} runs={cfg.runs} seed={cfg.seed} "
            f"adversary={cfg.adversary} scheduler={cfg.scheduler}",
            "",
            f"{'phase':<14}{'mean msgs':>12}",
        ]
        for p in PHASES:
            lines.append(f"{p:<14}{agg['mean_messages'][p]:>12.2f}")
        lines.append(f"{'total':<14}{agg['mean_total_messages']:>12.2f}")
        lines.append("")
        lines.append("status        " + ", ".join(f"{k}={v}" for k, v in agg["statuses"].items()))
        if agg["mean_views_to_decide"] is not None:
            lines.append(f"views         mean {agg['mean_views_to_decide']:.3f}, p95 {agg['p95_views_to_decide']}")
        lines.append(f"bytes         L {agg['mean_bytes_l']:.1f}, K {agg['mean_bytes_k']:.1f} (mean per run)")
        d = self.to_dict()["complexity"]
        lines.append(f"complexity    c={d['c']} observed {d['observed_c']:.3f}, "
                     f"{len(d['failures'])} bound failures")
        if self.baseline_runs:
            lines.append(f"baseline      {cfg.baseline}: promotion ratio {self.promotion_ratio:.3f} "
                         f"(n/kappa = {cfg.n / cfg.kappa:.3f})")
        lines.append(f"violations    {len(self.violations)}")
        lines.extend("  " + v for v in self.violations[:20])
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cfg.check()
    seeds = [cfg.seed + r for r in range(cfg.runs)]
    jobs = []
    for s in seeds:
        path = None
        if cfg.trace_dir is not None:
            path = str(Path(cfg.trace_dir) / f"seed-{s}.jsonl.gz")
        jobs.append((cfg, s, None, path))
    if cfg.baseline is not None:
        for s in seeds:
            path = None
            if cfg.trace_dir is not None:
                path = str(Path(cfg.trace_dir) / f"baseline-seed-{s}.jsonl.gz")
            jobs.append((cfg, s, cfg.n, path))
    if cfg.trace_dir is not None:
        Path(cfg.trace_dir).mkdir(parents=True, exist_ok=True)
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        records = [_job(j) for j in jobs]
    return ExperimentReport(cfg, records[: len(seeds)], records[len(seeds):])


# -- sweeps ----------------------------------------------------------------------

@dataclass
class SweepCell:
    """Outcome of ``runs`` seeded runs for one (n, behavior, scheduler) cell."""

    n: int
    behavior: str
    scheduler: str
    runs: int
    violations: list[str]
    statuses: dict[str, int]
    views_to_decide: list[int]
    step3_certs: int
    lock_failures: int


def _sweep_cell(args) -> SweepCell:
    n, behavior, scheduler, runs, seed, max_views = args
    bad: list[str] = []
    statuses: dict[str, int] = {}
    views: list[int] = []
    certs = locks = 0
    for s in range(seed, seed + runs):
        tr = run(CryptoParams.standard(n, seed=s), AdversaryConfig(scheduler=scheduler, behavior=behavior, seed=s),
                 max_views=max_views, record=False)
        found = run_violations(tr)
        bad.extend(f"seed {s}: {v}" for v in found)
        locks += sum(1 for v in found if v.startswith("lock-coverage"))
        statuses[tr.status] = statuses.get(tr.status, 0) + 1
        if tr.views_to_decide is not None:
            views.append(tr.views_to_decide)
        certs += sum(1 for c in tr.observed_certs if c[2] == 3)
    return SweepCell(n, behavior, scheduler, runs, bad, statuses, views, certs, locks)


def sweep(ns=(4, 7, 10), behaviors=None, schedulers=SCHEDULERS, runs: int = 500, seed: int = 0,
          max_views: int = 20, workers: int = 1) -> list[SweepCell]:
    """Every (n, behavior, scheduler) combination, ``runs`` seeds each, with f Byzantine parties."""
    from .byzantine import BEHAVIORS

    behaviors = BEHAVIORS if behaviors is None else behaviors
    jobs = [(n, b, sch, runs, seed, max_views) for n in ns for b in behaviors for sch in schedulers]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_cell, jobs))
    return [_sweep_cell(j) for j in jobs]


# -- committee statistics ----------------------------------------------------------

@dataclass
class CommitteeRow:
    n: int
    f: int
    kappa: int
    exact: Fraction
    samples: int
    hits: int

    @property
    def empirical(self) -> float:
        return self.hits / self.samples if self.samples else float("nan")

    @property
    def sigma(self) -> float:
        p = float(self.exact)
        return math.sqrt(p * (1 - p) / self.samples) if self.samples else float("nan")

    @property
    def z(self) -> float:
        s = self.sigma
        diff = self.empirical - float(self.exact)
        if s == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / s


def monte_carlo_committees(n: int, f: int, kappa: int, samples: int, seed: int = 0) -> int:
    """Count all-Byzantine committees over ``samples`` fresh coin tags.

    Parties ``1..f`` play the Byzantine set; the coin is symmetric in ids.
    Draws read the coin's value directly: the share quorum only gates when
    the value is released, not what it is.
    """
    scheme = deal(CryptoParams.standard(n, seed=seed)).scheme()
    instance = kappa  # fresh tag space per kappa
    # the view is the tag's trailing u32, so tags are built by appending it
    prefix = committee_tag(instance, 0)[:-4]
    assert prefix + (1).to_bytes(4, "big") == committee_tag(instance, 1)
    draw = scheme.coin_value
    return sum(
        1 for view in range(1, samples + 1)
        if draw(prefix + view.to_bytes(4, "big"), n, kappa)[-1] <= f
    )


def committee_stats(n: int, f: Optional[int] = None, kappas=None, samples: int = 100_000,
                    seed: int = 0) -> list[CommitteeRow]:
    f = (n - 1) // 3 if f is None else f
    if n != 3 * f + 1:
        raise ConfigError(f"n={n} is not 3f+1 for f={f}")
    kappas = list(kappas) if kappas else list(range(1, f + 2))
    for k in kappas:
        if not 1 <= k <= n:
            raise ConfigError(f"kappa={k} outside 1..{n}")
    rows = []
    for k in kappas:
        hits = monte_carlo_committees(n, f, k, samples, seed) if samples else 0
        rows.append(CommitteeRow(n, f, k, committee_probability(n, f, k), samples, hits))
    return rows


def committee_table(rows: list[CommitteeRow]) -> str:
    lines = [f"{'n':>3} {'f':>3} {'kappa':>5} {'exact':>12} {'empirical':>12} {'z':>7} {'(1/3)^k':>10}"]
    for r in rows:
        lines.append(
            f"{r.n:>3} {r.f:>3} {r.kappa:>5} {float(r.exact):>12.6f} {r.empirical:>12.6f} "
            f"{r.z:>7.2f} {(1 / 3) ** r.kappa:>10.6f}"
        )
    return "\n".join(lines) + "\n"
