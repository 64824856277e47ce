"""Simulation study: selection accuracy of CC-WAIC, WAIC and LOO on data
drawn from known 2- and 3-state Gaussian HMMs."""

from __future__ import annotations

import configparser
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .criteria import CRITERIA, build_loglik_matrix, compute_ccwaic, select_k
from .dist import RngState
from .errors import ConfigError, DomainError, SeqselError
from .gibbs import gibbs_fit
from .hmm import HmmParams, generate_sequence
from .io import worker_count, write_csv

log = logging.getLogger(__name__)

DEPENDENCE_LEVELS = ("low", "medium", "high")
LENGTHS = (100, 250, 500)

# ground truth of the two simulation cases, keyed by case number
TRUTH = {
    1: {
        "mu": [-3.0, 0.0, 3.0],
        "sigma": [0.5, 0.8, 1.5],
        "pi": [1.0, 0.0, 0.0],
        "A": {
            "high": [[0.90, 0.05, 0.05], [0.05, 0.90, 0.05], [0.05, 0.05, 0.90]],
            "medium": [[0.60, 0.20, 0.20], [0.20, 0.60, 0.20], [0.20, 0.20, 0.60]],
            "low": [[0.34, 0.33, 0.33], [0.33, 0.34, 0.33], [0.33, 0.33, 0.34]],
        },
    },
    2: {
        "mu": [-2.0, 2.0],
        "sigma": [0.5, 1.0],
        "pi": [1.0, 0.0],
        "A": {
            "high": [[0.95, 0.05], [0.05, 0.95]],
            "medium": [[0.70, 0.30], [0.30, 0.70]],
            "low": [[0.50, 0.50], [0.50, 0.50]],
        },
    },
}


def true_params(case: int, dependence: str) -> HmmParams:
    if case not in TRUTH:
        raise ConfigError(f"unknown case {case}; expected 1 (K=3) or 2 (K=2)")
    if dependence not in DEPENDENCE_LEVELS:
        raise ConfigError(f"unknown dependence level {dependence!r}; expected one of {DEPENDENCE_LEVELS}")
    t = TRUTH[case]
    return HmmParams(pi=t["pi"], A=t["A"][dependence], mu=t["mu"], sigma=t["sigma"])


@dataclass
class HarnessConfig:
    """Grid filters and scale. Loadable from JSON or ``key = value`` lines;
    list values are comma separated."""

    cases: tuple = (1, 2)
    dependence: tuple = DEPENDENCE_LEVELS
    lengths: tuple = LENGTHS
    candidate_ks: tuple = (2, 3, 4, 5)
    n_replications: int = 20
    n_chains: int = 2
    n_iter: int = 1000
    burn_in: int = 500
    base_seed: int = 0

    def __post_init__(self):
        self.cases = tuple(int(c) for c in self.cases)
        self.dependence = tuple(str(d).lower() for d in self.dependence)
        self.lengths = tuple(int(t) for t in self.lengths)
        self.candidate_ks = tuple(sorted({int(k) for k in self.candidate_ks}))
        for c in self.cases:
            if c not in TRUTH:
                raise ConfigError(f"unknown case {c}")
        for d in self.dependence:
            if d not in DEPENDENCE_LEVELS:
                raise ConfigError(f"unknown dependence level {d!r}")
        if any(t < 1 for t in self.lengths):
            raise ConfigError("sequence lengths must be positive")
        if not self.candidate_ks or min(self.candidate_ks) < 2:
            raise ConfigError("candidate K values must be >= 2")
        if self.n_replications < 1 or self.n_chains < 1:
            raise ConfigError("replications and chains must be at least 1")
        if not 0 <= self.burn_in < self.n_iter - 3:
            raise ConfigError("need burn_in >= 0 and at least 4 retained iterations")

    def to_dict(self) -> dict:
        return {f.name: list(v) if isinstance(v := getattr(self, f.name), tuple) else v for f in fields(self)}

    @classmethod
    def from_mapping(cls, mapping: dict) -> "HarnessConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            key = key.strip().replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            default = known[key].default
            if isinstance(default, tuple):
                if isinstance(value, str):
                    value = [v.strip() for v in value.split(",") if v.strip()]
                elif not isinstance(value, (list, tuple)):
                    value = [value]
                kwargs[key] = tuple(value)
            else:
                try:
                    kwargs[key] = int(value)
                except (TypeError, ValueError):
                    raise ConfigError(f"{key} must be an integer, got {value!r}") from None
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "HarnessConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if path.suffix.lower() == ".json":
            try:
                return cls.from_mapping(json.loads(text))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        parser = configparser.ConfigParser()
        try:
            parser.read_string("[seqsel]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_mapping(dict(parser["seqsel"]))


@dataclass(frozen=True)
class Scenario:
    case: int
    k_true: int
    dependence: str
    T: int
    true_params: HmmParams = field(compare=False)
    candidate_ks: tuple = (2, 3, 4, 5)
    n_replications: int = 20
    n_chains: int = 2
    n_iter: int = 1000
    burn_in: int = 500
    base_seed: int = 0

    @property
    def name(self) -> str:
        return f"case{self.case}-{self.dependence}-T{self.T}"

    def rng(self, rep_index: int) -> RngState:
        return RngState(self.base_seed).derive("replication", self.case, self.dependence, self.T, rep_index)


def build_scenarios(config: HarnessConfig | None = None) -> list:
    config = config or HarnessConfig()
    out = []
    for case in sorted(config.cases):
        for T in sorted(config.lengths):
            for dep in DEPENDENCE_LEVELS:
                if dep not in config.dependence:
                    continue
                params = true_params(case, dep)
                out.append(Scenario(
                    case=case, k_true=params.K, dependence=dep, T=T, true_params=params,
                    candidate_ks=config.candidate_ks, n_replications=config.n_replications,
                    n_chains=config.n_chains, n_iter=config.n_iter, burn_in=config.burn_in,
                    base_seed=config.base_seed,
                ))
    return out


@dataclass
class ReplicationResult:
    scenario: str
    rep_index: int
    selections: list  # one {criterion: K} dict per successful chain
    failures: int = 0
    reports: dict = field(default_factory=dict)  # (chain, K) -> CriterionReport


def run_replication(sc: Scenario, rep_index: int, keep_reports: bool = False) -> ReplicationResult:
    """Simulate one dataset and record each chain's argmin-K per criterion."""
    root = sc.rng(rep_index)
    _, y = generate_sequence(sc.true_params, sc.T, root.derive("data"))
    selections, reports, failures = [], {}, 0
    for chain in range(sc.n_chains):
        per_k = {}
        try:
            for K in sc.candidate_ks:
                draws = gibbs_fit(y, K, n_iter=sc.n_iter, burn_in=sc.burn_in,
                                  rng=root.derive("chain", chain, K), chain_id=chain)
                per_k[K] = compute_ccwaic(build_loglik_matrix(draws, y))
        except (SeqselError, FloatingPointError) as exc:
            failures += 1
            log.warning("%s rep %d chain %d failed: %s", sc.name, rep_index, chain, exc)
            continue
        selections.append(select_k(per_k))
        if keep_reports:
            reports.update({(chain, K): r for K, r in per_k.items()})
    return ReplicationResult(sc.name, rep_index, selections, failures, reports)


def _run_cell(args):
    sc, rep = args
    return run_replication(sc, rep)


def run_scenarios(scenarios, workers: int | None = None) -> dict:
    """Run every replication of every scenario; returns {scenario name: [results]}."""
    jobs = [(sc, rep) for sc in scenarios for rep in range(sc.n_replications)]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    out = {sc.name: [] for sc in scenarios}
    for r in results:
        out[r.scenario].append(r)
    return out


@dataclass
class AccuracyTable:
    rows: list  # dicts with case, dependence, T, K, criterion, mean_pct, sd_pct
    failures: dict = field(default_factory=dict)

    COLUMNS = ("case", "dependence", "T", "K", "criterion", "mean_pct", "sd_pct")

    def lookup(self, case, dependence, T, K, criterion):
        for r in self.rows:
            if (r["case"], r["dependence"], r["T"], r["K"], r["criterion"]) == (case, dependence, T, K, criterion):
                return r
        raise KeyError((case, dependence, T, K, criterion))

    def to_csv(self, path):
        write_csv(path, self.COLUMNS, ([r[c] for c in self.COLUMNS] for r in self.rows))

    def render(self) -> str:
        labels = {"ccwaic": "CC-WAIC", "waic": "WAIC", "loo": "LOO"}
        lines = []
        cases = sorted({r["case"] for r in self.rows})
        for case in cases:
            k_true = true_params(case, "low").K
            lines.append(f"Case {case} (K_true = {k_true}): selection accuracy (%)")
            head = f"{'T':>5} {'Dependence':<10} {'K':>2} " + " ".join(f"{labels[c]:>17}" for c in CRITERIA)
            lines.append(head)
            lines.append("-" * len(head))
            keys = sorted({(r["T"], DEPENDENCE_LEVELS.index(r["dependence"]), r["K"])
                           for r in self.rows if r["case"] == case})
            for T, di, K in keys:
                dep = DEPENDENCE_LEVELS[di]
                cells = []
                for c in CRITERIA:
                    r = self.lookup(case, dep, T, K, c)
                    cells.append(f"{r['mean_pct']:6.1f}% ± {r['sd_pct']:5.1f}%".rjust(17))
                lines.append(f"{T:>5} {dep.capitalize():<10} {K:>2} " + " ".join(cells))
            lines.append("")
        failed = {k: v for k, v in self.failures.items() if v}
        if failed:
            lines.append("Failed chains (excluded): " + ", ".join(f"{k}: {v}" for k, v in sorted(failed.items())))
        return "\n".join(lines).rstrip() + "\n"


def aggregate_accuracy(results: dict, scenarios) -> AccuracyTable:
    """Mean and sd (across replications) of per-replication selection percentages."""
    if not results or not any(results.get(sc.name) for sc in scenarios):
        raise DomainError("no replication results to aggregate")
    rows, failures = [], {}
    for sc in scenarios:
        reps = results.get(sc.name, [])
        failures[sc.name] = sum(r.failures for r in reps)
        usable = [r for r in reps if r.selections]
        for K in sc.candidate_ks:
            for crit in CRITERIA:
                freqs = np.array([100.0 * np.mean([s[crit] == K for s in r.selections]) for r in usable])
                mean = float(freqs.mean()) if freqs.size else float("nan")
                sd = float(freqs.std(ddof=1)) if freqs.size > 1 else 0.0
                rows.append({"case": sc.case, "dependence": sc.dependence, "T": sc.T, "K": K,
                             "criterion": crit, "mean_pct": mean, "sd_pct": sd})
    return AccuracyTable(rows, failures)
