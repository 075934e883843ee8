"""Monte Carlo campaigns: seeded trials, aggregation, verdicts.

Config document (JSON object)::

    {
      "name": "k200_final_value",       # optional label
      "graph": "complete:200",          # see divsim.graph.parse_graph_spec
      "init": "uniform:5",              # see divsim.initial
      "kind": "vertex",                 # vertex | edge
      "rule": "div",                    # div | pull
      "trials": 2000,
      "master_seed": 1,
      "step_cap": null,                 # default 50 n^2
      "eps_list": [0.01],               # thresholds for extreme-shrink hits
      "sample_stride": 0,               # (t, S, Z) sampling stride
      "eta": 0.5,                       # failure probability for extreme-shrink horizons
      "azuma_grid": [[20, 2000]],       # (h, t) pairs for the drift check
      "floor_ceil_min": 0.99,           # threshold for the final_value target
      "targets": ["oracle", "two_opinion", "final_value", "bounds", "azuma",
                  "all_win", "outside_floor_ceil"]
    }

Trial ``i`` draws everything (including a per-trial initial configuration)
from ``trial_rng(master_seed, i)``; records are aggregated in trial order,
so serial and threaded runs give identical summaries.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import theory
from .dynamics import OpinionState, ProcessKind, Rule, default_step_cap, run, trial_rng
from .graph import Graph, parse_graph_spec
from .initial import InitSpec, parse_init
from .oracle import exact_win_distribution
from .spectral import spectrum

SCHEMA_VERSION = "1"
Z95 = 1.959963984540054
SIGMAS = 3.0
KNOWN_TARGETS = {"oracle", "two_opinion", "final_value", "bounds", "azuma", "all_win", "outside_floor_ceil"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    graph: str
    init: str
    kind: str = "vertex"
    rule: str = "div"
    trials: int = 1000
    master_seed: int = 0
    step_cap: int | None = None
    eps_list: list[float] = field(default_factory=list)
    sample_stride: int = 0
    eta: float = 0.5
    azuma_grid: list[list[float]] = field(default_factory=list)
    floor_ceil_min: float = 0.99
    outside_min_freq: float = 1e-3
    targets: list[str] = field(default_factory=list)
    name: str = ""
    graph_seed: int | None = None

    def __post_init__(self):
        for key in ("graph", "init", "kind", "rule", "name"):
            if not isinstance(getattr(self, key), str):
                raise ConfigError(f"{key} must be a string")
        for key in ("trials", "master_seed", "sample_stride"):
            if not isinstance(getattr(self, key), int) or isinstance(getattr(self, key), bool):
                raise ConfigError(f"{key} must be an integer")
        for key in ("eps_list", "azuma_grid", "targets"):
            if not isinstance(getattr(self, key), list):
                raise ConfigError(f"{key} must be a list")
        try:
            self.kind = ProcessKind(self.kind).value
            self.rule = Rule(self.rule).value
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        self.trials = int(self.trials)
        unknown = set(self.targets) - KNOWN_TARGETS
        if unknown:
            raise ConfigError(f"unknown targets {sorted(unknown)}")
        for pair in self.azuma_grid:
            if len(pair) != 2 or pair[0] <= 0 or pair[1] < 1:
                raise ConfigError(f"bad azuma_grid entry {pair!r}")
        if not 0 < self.eta <= 1:
            raise ConfigError("eta must lie in (0, 1]")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | os.PathLike | None = None) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        allowed = set(cls.__dataclass_fields__)
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        for key in ("graph", "init"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        d = dict(d)
        if base_dir is not None:
            for key in ("graph", "init"):
                head, sep, path = str(d[key]).partition(":")
                if head == "file" and not os.path.isabs(path):
                    d[key] = f"file:{os.path.join(base_dir, path)}"
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc, base_dir=path.parent)


@dataclass
class TrialRecord:
    trial: int
    winner: int | None
    consensus_step: int | None
    two_left_step: int | None
    c: float
    floor_c: int
    c_integral: bool
    extremes: tuple[int, int]
    extr_hits: dict[float, int | None]
    max_drift: float
    drift_at: dict[int, float]
    two_opinion: dict[int, float]


@dataclass
class Context:
    config: ExperimentConfig
    graph: Graph
    init: InitSpec
    step_cap: int
    checkpoints: list[int]
    stride: int


def prepare(config: ExperimentConfig) -> Context:
    graph = parse_graph_spec(config.graph, seed=config.graph_seed)
    init = parse_init(config.init, graph.n)
    checkpoints = sorted({int(t) for _, t in config.azuma_grid})
    stride = 0
    for t in checkpoints + ([config.sample_stride] if config.sample_stride else []):
        stride = math.gcd(stride, t)
    step_cap = default_step_cap(graph.n) if config.step_cap is None else int(config.step_cap)
    return Context(config, graph, init, step_cap, checkpoints, stride)


def run_trial(ctx: Context, i: int) -> TrialRecord:
    cfg, g = ctx.config, ctx.graph
    rng = trial_rng(cfg.master_seed, i)
    x = ctx.init.draw(g.n, rng)
    state = OpinionState(g, x, max(int(x.max()), ctx.init.k or 0))
    res = run(g, state, cfg.kind, cfg.rule, rng, ctx.step_cap, cfg.eps_list, ctx.stride)
    c_exact = state.exact_average(cfg.kind)
    fl = math.floor(c_exact)
    w0 = state.weight(cfg.kind)
    drift_at = {t: abs(res.weight_at(t) - w0) for t in ctx.checkpoints if t <= ctx.step_cap}
    two_opinion = {}
    present = state.present()
    if len(present) == 2:
        for op in present:
            if cfg.kind == ProcessKind.EDGE.value:
                two_opinion[op] = int(state.counts[op]) / g.n
            else:
                two_opinion[op] = int(state.degsum[op]) / (2 * g.m)
    return TrialRecord(
        trial=i,
        winner=res.winner,
        consensus_step=res.consensus_step,
        two_left_step=res.two_left_step,
        c=float(c_exact),
        floor_c=int(fl),
        c_integral=c_exact.denominator == 1,
        extremes=(state.s, state.ell),
        extr_hits=res.extr_hits,
        max_drift=res.max_weight_drift,
        drift_at=drift_at,
        two_opinion=two_opinion,
    )


def wilson(successes: int, total: int, z: float = Z95) -> tuple[float, float]:
    if total == 0:
        return 0.0, 1.0
    p = successes / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _stats(values: list[int]) -> dict:
    if not values:
        return {"count": 0, "mean": None, "median": None, "p95": None, "max": None}
    a = np.asarray(values, dtype=float)
    return {
        "count": len(values),
        "mean": float(a.mean()),
        "median": float(np.median(a)),
        "p95": float(np.quantile(a, 0.95)),
        "max": float(a.max()),
    }


@dataclass
class Verdict:
    target: str
    passed: bool
    empirical: float | None
    predicted: float | None
    margin: float | None
    detail: str = ""


def _prob_verdict(target, empirical, predicted, sigma, detail="") -> Verdict:
    margin = SIGMAS * sigma
    return Verdict(target, abs(empirical - predicted) <= margin + 1e-15, empirical, predicted, margin, detail)


def compare(records: list[TrialRecord], ctx: Context, targets) -> list[Verdict]:
    """Verdicts for each requested target.

    Probabilities pass when within 3 standard errors of the prediction;
    stopping-time horizons pass when the empirical exceedance frequency is at
    most eta + 3 sigma.
    """
    cfg, g = ctx.config, ctx.graph
    done = [r for r in records if r.winner is not None]
    N = len(done)
    out: list[Verdict] = []
    for target in targets:
        if target == "oracle":
            if ctx.init.per_trial:
                out.append(Verdict(target, False, None, None, None, "oracle needs a fixed initial configuration"))
                continue
            x0 = ctx.init.draw(g.n)
            dist = exact_win_distribution(g, x0, cfg.kind, cfg.rule).probabilities
            for op in sorted(set(dist) | {r.winner for r in done}):
                p = dist.get(op, 0.0)
                freq = sum(r.winner == op for r in done) / max(N, 1)
                out.append(_prob_verdict(f"oracle[{op}]", freq, p, math.sqrt(p * (1 - p) / max(N, 1))))
        elif target == "two_opinion":
            use = [r for r in done if r.two_opinion]
            if len(use) != N or N == 0:
                out.append(Verdict(target, False, None, None, None, "two_opinion needs exactly two opinions in every trial"))
                continue
            ops = sorted({op for r in use for op in r.two_opinion})
            for op in ops:
                ps = [r.two_opinion.get(op, 0.0) for r in use]
                freq = sum(r.winner == op for r in use) / N
                pred = sum(ps) / N
                sigma = math.sqrt(sum(p * (1 - p) for p in ps)) / N
                out.append(_prob_verdict(f"two_opinion[{op}]", freq, pred, sigma))
        elif target == "final_value":
            if N == 0:
                out.append(Verdict(target, False, None, None, None, "no completed trials"))
                continue
            inside = sum(r.winner in (r.floor_c, r.floor_c + (0 if r.c_integral else 1)) for r in done) / N
            out.append(Verdict("final_value.floor_ceil", inside >= cfg.floor_ceil_min, inside, cfg.floor_ceil_min, None,
                               "fraction of trials won by floor(c) or ceil(c)"))
            qs = [r.c - r.floor_c for r in done]
            up = sum(r.winner == r.floor_c + 1 for r in done) / N
            sigma = math.sqrt(sum(q * (1 - q) for q in qs)) / N
            out.append(_prob_verdict("final_value.ceil_prob", up, sum(qs) / N, sigma,
                                     "P(floor(c)+1 wins) against the mean of c - floor(c)"))
        elif target == "bounds":
            out.extend(_bounds_verdicts(records, ctx))
        elif target == "azuma":
            inc = 1.0 if cfg.kind == ProcessKind.EDGE.value else g.n * float(g.degrees.max()) / (2 * g.m)
            for h, t in cfg.azuma_grid:
                t = int(t)
                vals = [r.drift_at[t] for r in records if t in r.drift_at]
                M = len(vals)
                freq = sum(v >= h for v in vals) / max(M, 1)
                b = theory.azuma_tail(h / inc, t)
                sigma = math.sqrt(b * (1 - b) / max(M, 1))
                out.append(Verdict(f"azuma[h={h:g},t={t}]", freq <= b + SIGMAS * sigma, freq, b, SIGMAS * sigma,
                                   f"increment bound {inc:g}"))
        elif target == "all_win":
            ops = sorted(set(ctx.init.draw(g.n).tolist())) if not ctx.init.per_trial else list(range(1, ctx.init.k + 1))
            winners = {r.winner for r in done}
            missing = [op for op in ops if op not in winners]
            out.append(Verdict(target, not missing, float(len(ops) - len(missing)), float(len(ops)), None,
                               f"never won: {missing}" if missing else "every initial opinion won at least once"))
        elif target == "outside_floor_ceil":
            outside = sum(r.winner not in (r.floor_c, r.floor_c + (0 if r.c_integral else 1)) for r in done) / max(N, 1)
            out.append(Verdict(target, outside >= cfg.outside_min_freq, outside, cfg.outside_min_freq, None,
                               "frequency of winners outside {floor(c), ceil(c)}"))
        else:
            raise ConfigError(f"unknown target {target!r}")
    return out


def _bounds_verdicts(records: list[TrialRecord], ctx: Context) -> list[Verdict]:
    cfg, g = ctx.config, ctx.graph
    spec = spectrum(g)
    cap_hits = sum(r.winner is None for r in records)
    out = [Verdict("bounds.cap_hits", cap_hits == 0, float(cap_hits), 0.0, None, f"step cap {ctx.step_cap}")]
    if spec.lam >= 1.0:
        out.append(Verdict("bounds.structured", False, None, None, None, "not applicable: lambda = 1"))
        return out
    k = max(ctx.init.k or 0, max(r.extremes[1] for r in records))
    bound = theory.structured_bound(g.n, k, spec.lam, spec.pi_min)
    tl = [r.two_left_step for r in records if r.two_left_step is not None]
    mean_tl = float(np.mean(tl)) if tl else float("inf")
    ok = len(tl) == len(records) and mean_tl <= bound
    out.append(Verdict("bounds.structured", ok, mean_tl, bound, None,
                       "mean two_left_step against 4(k-3)(T1+Tp(eps1)) + 4(T2+Tp(eps2))"))
    for eps in cfg.eps_list:
        eps = float(eps)
        l6 = theory.shrink_horizons(g.n, eps, cfg.eta, spec.lam)
        for case, horizon, hyp, sel in (
            ("T1", l6.T1, l6.hypothesis_T1, lambda r: r.extremes[1] - r.extremes[0] >= 3),
            ("T2", l6.T2, l6.hypothesis_T2, lambda r: r.extremes[1] - r.extremes[0] == 2),
        ):
            use = [r for r in records if sel(r)]
            if not use:
                continue
            name = f"bounds.extr[eps={eps:g},{case}]"
            if not hyp:
                out.append(Verdict(name, True, None, None, None, "hypothesis on eps fails; not checked"))
                continue
            late = sum(r.extr_hits.get(eps) is None or r.extr_hits[eps] > horizon for r in use)
            freq = late / len(use)
            sigma = math.sqrt(cfg.eta * (1 - cfg.eta) / len(use))
            out.append(Verdict(name, freq <= cfg.eta + SIGMAS * sigma, freq, cfg.eta, SIGMAS * sigma,
                               f"P[tau_extr > {horizon}] over {len(use)} trials"))
    return out


@dataclass
class ExperimentSummary:
    config: dict
    n: int
    m: int
    trials: int
    completed: int
    cap_hits: int
    win_freq: dict
    in_floor_ceil_freq: float | None
    consensus_step: dict
    two_left_step: dict
    extr_hit_quantiles: dict
    weight_drift: dict
    verdicts: list[Verdict]
    records: list[TrialRecord] = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "n": self.n,
            "m": self.m,
            "trials": self.trials,
            "completed": self.completed,
            "cap_hits": self.cap_hits,
            "win_freq": self.win_freq,
            "in_floor_ceil_freq": self.in_floor_ceil_freq,
            "consensus_step": self.consensus_step,
            "two_left_step": self.two_left_step,
            "extr_hit_quantiles": self.extr_hit_quantiles,
            "weight_drift": self.weight_drift,
            "verdicts": [asdict(v) for v in self.verdicts],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def records_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "winner", "consensus_step", "two_left_step"])
        for r in self.records:
            w.writerow([r.trial, _blank(r.winner), _blank(r.consensus_step), _blank(r.two_left_step)])
        return buf.getvalue()


def _blank(v):
    return "" if v is None else v


def summarize(records: list[TrialRecord], ctx: Context, verdicts: list[Verdict]) -> ExperimentSummary:
    records = sorted(records, key=lambda r: r.trial)
    done = [r for r in records if r.winner is not None]
    N = len(done)
    win_freq = {}
    for op in sorted({r.winner for r in done}):
        cnt = sum(r.winner == op for r in done)
        lo, hi = wilson(cnt, N)
        win_freq[str(op)] = {"count": cnt, "freq": cnt / N, "wilson95": [lo, hi]}
    inside = None
    if N:
        inside = sum(r.winner in (r.floor_c, r.floor_c + (0 if r.c_integral else 1)) for r in done) / N
    cons = _stats([r.consensus_step for r in done])
    cons["cap_hits"] = len(records) - N
    extr = {}
    for eps in ctx.config.eps_list:
        vals = [r.extr_hits.get(float(eps)) for r in records]
        hit = [v for v in vals if v is not None]
        q = {"missing": len(vals) - len(hit)}
        for name, level in (("q50", 0.5), ("q90", 0.9), ("q95", 0.95)):
            q[name] = float(np.quantile(hit, level)) if hit else None
        q["max"] = float(max(hit)) if hit else None
        extr[repr(float(eps))] = q
    drifts = [r.max_drift for r in records]
    return ExperimentSummary(
        config=asdict(ctx.config),
        n=ctx.graph.n,
        m=ctx.graph.m,
        trials=len(records),
        completed=N,
        cap_hits=len(records) - N,
        win_freq=win_freq,
        in_floor_ceil_freq=inside,
        consensus_step=cons,
        two_left_step=_stats([r.two_left_step for r in records if r.two_left_step is not None]),
        extr_hit_quantiles=extr,
        weight_drift={"mean_max": float(np.mean(drifts)), "max_max": float(np.max(drifts))},
        verdicts=verdicts,
        records=records,
    )


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("DIVSIM_THREADS", "1") or 1)
    return max(1, int(threads))


def run_trials(ctx: Context, threads: int | None = None) -> list[TrialRecord]:
    threads = resolve_threads(threads)
    idx = range(ctx.config.trials)
    if threads == 1:
        return [run_trial(ctx, i) for i in idx]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_trial(ctx, i), idx))


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ExperimentSummary:
    ctx = prepare(config)
    records = run_trials(ctx, threads)
    verdicts = compare(records, ctx, config.targets)
    return summarize(records, ctx, verdicts)


def compare_kinds(a: ExperimentSummary, b: ExperimentSummary) -> list[Verdict]:
    """Per-opinion agreement of two campaigns' win frequencies within 3 sigma."""
    out = []
    ops = sorted(set(a.win_freq) | set(b.win_freq), key=int)
    for op in ops:
        pa = a.win_freq.get(op, {}).get("freq", 0.0)
        pb = b.win_freq.get(op, {}).get("freq", 0.0)
        sigma = math.sqrt(pa * (1 - pa) / max(a.completed, 1) + pb * (1 - pb) / max(b.completed, 1))
        out.append(_prob_verdict(f"kinds[{op}]", pa, pb, sigma))
    return out
