"""Experiment harness: configuration, deterministic parallel Monte Carlo,
CSV persistence, and the one-shot verification suite.

Every trial is a pure function of (config, master_seed, trial_index); merged
statistics are computed in ascending trial order with pairwise-tree
reduction, so results are bitwise independent of the worker count.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import edge_stats, flow_lab, profile, resolvent, semicircle, tracy_widom
from .ensembles import (
    EnsembleSpec,
    EntryLaw,
    GAUSSIAN,
    RADEMACHER,
    UNIFORM,
    sample_matrix,
    skew_bernoulli,
)

EXPERIMENTS = (
    "edge-cdf",
    "rate-fit",
    "sandwich",
    "flow-derivative",
    "k3k4",
    "gronwall",
    "locallaw",
    "tw-table",
    "verify",
)


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    n_list: tuple[int, ...] = (100, 200, 400)
    trials: int = 1000
    master_seed: int = 0
    workers: int = 1
    out_dir: str = "results"
    beta: int = 1
    law: str = "gaussian"
    law_p: float = 0.2
    profile_kind: str = "flat"  # flat | block | banded
    block_k: int = 2
    block_low: float = 0.5
    block_high: float = 1.5
    band_width: int = 5
    band_floor: float = 0.25
    goe_diagonal: bool = True  # doubled diagonal variance for the flat Gaussian case
    centering: str = "goe_shift"
    r0: float = edge_stats.DEFAULT_R0
    epsilon: float = 0.05
    t_grid: tuple[float, ...] = (0.25, 1.0)
    dt: float = 0.05
    eta_exponent: float = 0.8  # z = 2 + i N^-eta_exponent where a single z is needed
    omega: float = 0.15

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")

    def canonical_text(self) -> str:
        pairs = []
        for name in sorted(self.__dataclass_fields__):
            pairs.append(f"{name}={getattr(self, name)!r}")
        return "\n".join(pairs)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:12]


def entry_law_from_config(cfg: RunConfig) -> EntryLaw:
    if cfg.law == "gaussian":
        return GAUSSIAN
    if cfg.law == "rademacher":
        return RADEMACHER
    if cfg.law == "uniform":
        return UNIFORM
    if cfg.law == "skew_bernoulli":
        return skew_bernoulli(cfg.law_p)
    raise UsageError(f"unknown entry law {cfg.law!r}")


def profile_from_config(cfg: RunConfig, n: int) -> profile.VarianceProfile:
    if cfg.profile_kind == "flat":
        return profile.make_flat_profile(n)
    if cfg.profile_kind == "block":
        return profile.block_profile_for_bounds(n, cfg.block_k, cfg.block_low, cfg.block_high)
    if cfg.profile_kind == "banded":
        # band_floor is the scaled lower bound on n * S_ij
        return profile.make_banded_floor_profile(n, cfg.band_width, cfg.band_floor / n)
    raise UsageError(f"unknown profile kind {cfg.profile_kind!r}")


def ensemble_from_config(cfg: RunConfig, n: int) -> EnsembleSpec:
    prof = profile_from_config(cfg, n)
    law = entry_law_from_config(cfg)
    if cfg.profile_kind == "flat" and cfg.law == "gaussian" and cfg.goe_diagonal:
        prof = profile.modified_profile(prof)
    return EnsembleSpec(beta=cfg.beta, profile=prof, entry_law=law)


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse a key = value INI config (a single [run] section) into RunConfig."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    if "run" not in parser:
        raise UsageError("config must contain a [run] section")
    raw = dict(parser["run"])
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(raw)


def config_from_mapping(raw: dict) -> RunConfig:
    kwargs: dict = {}
    fields = RunConfig.__dataclass_fields__
    for key, value in raw.items():
        if key not in fields:
            raise UsageError(f"unknown config key {key!r}")
        ftype = fields[key].type
        if isinstance(value, str):
            if key in ("n_list", "t_grid"):
                parts = [p for p in value.replace(",", " ").split() if p]
                value = tuple(int(p) for p in parts) if key == "n_list" else tuple(
                    float(p) for p in parts
                )
            elif ftype == "int":
                value = int(value)
            elif ftype == "float":
                value = float(value)
            elif ftype == "bool":
                value = _BOOL[value.strip().lower()]
        kwargs[key] = value
    if "experiment" not in kwargs:
        raise UsageError("config requires an experiment name")
    return RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# deterministic parallel Monte Carlo


@dataclass(frozen=True)
class MCResult:
    values: np.ndarray  # (successful trials, k), ascending trial index
    mean: np.ndarray
    stderr: np.ndarray
    trials: int
    failures: tuple[int, ...]


def parallel_mc(
    task: Callable[[tuple[int, int]], np.ndarray],
    trials: int,
    master_seed: int,
    workers: int = 1,
) -> MCResult:
    """Run ``task((master_seed, i))`` for i < trials and merge deterministically.

    Results are stored by trial index and reduced with numpy's pairwise-tree
    summation in a single thread, so the merged statistics do not depend on
    the worker count or completion order.  A failing trial is recorded and
    skipped; it never contaminates the merge.
    """
    if trials < 1:
        raise UsageError("trials must be >= 1")
    slots: list = [None] * trials
    failures: list[int] = []

    def run_one(i: int):
        try:
            slots[i] = np.atleast_1d(np.asarray(task((master_seed, i)), dtype=float))
        except Exception:
            failures.append(i)

    if workers == 1:
        for i in range(trials):
            run_one(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, range(trials)))
    good = [s for s in slots if s is not None]
    if not good:
        raise RuntimeError("all trials failed")
    values = np.stack(good)
    m = len(good)
    mean = np.add.reduce(values, axis=0) / m
    if m > 1:
        var = np.add.reduce((values - mean) ** 2, axis=0) / (m - 1)
        stderr = np.sqrt(var / m)
    else:
        stderr = np.full_like(mean, np.nan)
    return MCResult(
        values=values,
        mean=mean,
        stderr=stderr,
        trials=m,
        failures=tuple(sorted(failures)),
    )


# ---------------------------------------------------------------------------
# result records


@dataclass
class ResultRecord:
    config: RunConfig
    rows: list[dict] = field(default_factory=list)
    all_pass: bool = True
    wall_time: float = 0.0

    def add(self, passed: bool | None = None, **fields):
        row = {"config_hash": self.config.config_hash, "experiment": self.config.experiment}
        row.update(fields)
        if passed is not None:
            row["pass"] = passed
            self.all_pass = self.all_pass and passed
        self.rows.append(row)

    def write_csv(self, path) -> None:
        keys: list[str] = []
        for row in self.rows:
            for k in row:
                if k not in keys:
                    keys.append(k)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row)


# ---------------------------------------------------------------------------
# experiments


def _lambda_max_mc(cfg: RunConfig, spec: EnsembleSpec) -> MCResult:
    from scipy.linalg import eigh

    n = spec.n

    def task(seed):
        h = sample_matrix(spec, seed)
        return eigh(h, eigvals_only=True, subset_by_index=[n - 1, n - 1])

    return parallel_mc(task, cfg.trials, cfg.master_seed, cfg.workers)


def _edge_cdf_rows(cfg: RunConfig, record: ResultRecord) -> list[float]:
    tw = tracy_widom.tw_distribution(cfg.beta)
    d_values = []
    for n in cfg.n_list:
        spec = ensemble_from_config(cfg, n)
        mc = _lambda_max_mc(cfg, spec)
        rescaled = edge_stats.rescale_lambda_max(mc.values[:, 0], n, cfg.centering)
        sd = edge_stats.sup_distance(rescaled, tw, cfg.r0)
        bound = n ** (-1.0 / 3.0 + cfg.omega) + sd.dkw
        record.add(
            passed=sd.d <= bound,
            n=n,
            beta=cfg.beta,
            law=cfg.law,
            profile=cfg.profile_kind,
            centering=cfg.centering,
            trials=mc.trials,
            r0=cfg.r0,
            D=sd.d,
            dkw=sd.dkw,
            bound=bound,
        )
        d_values.append(sd.d)
    return d_values


def run_edge_cdf(cfg: RunConfig, record: ResultRecord) -> None:
    _edge_cdf_rows(cfg, record)


def run_rate_fit(cfg: RunConfig, record: ResultRecord) -> None:
    d_values = _edge_cdf_rows(cfg, record)
    fit = edge_stats.rate_fit(
        cfg.n_list, d_values, cfg.trials, omega=cfg.omega, seed=cfg.master_seed
    )
    record.add(
        passed=fit.bound_pass,
        n=0,
        alpha_fit=fit.alpha,
        ci_lo=fit.ci_lo,
        ci_hi=fit.ci_hi,
        trials=cfg.trials,
    )


def run_sandwich(cfg: RunConfig, record: ResultRecord) -> None:
    n = cfg.n_list[0]
    spec = ensemble_from_config(cfg, n)
    obs = edge_stats.SandwichObservable(n=n, epsilon=cfg.epsilon)
    half_width = n ** (-2.0 / 3.0 + cfg.epsilon)
    e_grid = 2.0 + np.linspace(-half_width, half_width, 9)
    report = edge_stats.sandwich_check(
        spec, e_grid, obs, cfg.trials, master_seed=cfg.master_seed
    )
    for ei, e in enumerate(report.e_grid):
        record.add(
            passed=bool(report.holds[ei]),
            n=n,
            e=float(e),
            eta=obs.eta,
            lower=report.lower[ei],
            lower_se=report.lower_se[ei],
            prob=report.prob[ei],
            prob_se=report.prob_se[ei],
            upper=report.upper[ei],
            upper_se=report.upper_se[ei],
        )
    record.add(passed=report.fraction >= 8.0 / 9.0, n=n, fraction=report.fraction)


def run_flow_derivative(cfg: RunConfig, record: ResultRecord) -> None:
    n = cfg.n_list[0]
    prof = profile_from_config(cfg, n)
    z = complex(2.0, n ** (-cfg.eta_exponent))
    for t in cfg.t_grid:
        spec = flow_lab.FlowSpec("flow1", float(t), prof, beta=cfg.beta)
        rep = flow_lab.flow_derivative_check(
            spec, z, cfg.trials, dt=cfg.dt, master_seed=cfg.master_seed
        )
        record.add(
            passed=rep.sigma_distance <= 3.0,
            kind="flow1",
            n=n,
            t=float(t),
            e=z.real,
            eta=z.imag,
            lhs=rep.lhs,
            lhs_se=rep.lhs_stderr,
            rhs=rep.rhs,
            rhs_se=rep.rhs_stderr,
            sigma_distance=rep.sigma_distance,
        )


def run_k3k4(cfg: RunConfig, record: ResultRecord) -> None:
    law = entry_law_from_config(cfg)
    t = float(cfg.t_grid[-1])
    scaled_k3 = {}
    scaled_k4 = {}
    for n in cfg.n_list:
        prof = profile_from_config(cfg, n)
        eta = n ** (-2.0 / 3.0 - cfg.epsilon)
        z = complex(2.0, eta)
        spec = flow_lab.FlowSpec("flow2", t, prof, beta=cfg.beta, entry_law=law)
        ct = flow_lab.k3_k4_terms(spec, z, cfg.trials, master_seed=cfg.master_seed)
        scaled_k3[n] = math.sqrt(n) * abs(ct.k3)
        scaled_k4[n] = n * eta * abs(ct.k4) / ct.im_mn
        record.add(
            kind="flow2",
            n=n,
            t=t,
            e=z.real,
            eta=eta,
            k3=ct.k3,
            k3_se=ct.k3_stderr,
            k4=ct.k4,
            k4_se=ct.k4_stderr,
            im_mn=ct.im_mn,
            scaled_k3=scaled_k3[n],
            scaled_k4=scaled_k4[n],
        )
    ns = sorted(scaled_k3)
    for a, b in zip(ns[:-1], ns[1:]):
        for name, scaled in (("k3", scaled_k3), ("k4", scaled_k4)):
            if scaled[a] > 0:
                ratio = scaled[b] / scaled[a]
                record.add(
                    passed=1.0 / 3.0 <= ratio <= 3.0,
                    kind=f"{name}-ratio",
                    n=b,
                    ratio=ratio,
                )


def run_gronwall(cfg: RunConfig, record: ResultRecord) -> None:
    n = cfg.n_list[0]
    prof = profile_from_config(cfg, n)
    z = complex(2.0, n ** (-cfg.eta_exponent))
    law = entry_law_from_config(cfg)
    kind = "flow2" if cfg.law != "gaussian" else "flow1"
    spec = flow_lab.FlowSpec(kind, 0.0, prof, beta=cfg.beta, entry_law=law)
    t_grid = (0.0, 0.5, 1.0, 2.0, 5.0)
    rep = flow_lab.gronwall_band(spec, z, t_grid, cfg.trials, master_seed=cfg.master_seed)
    for ti, t in enumerate(rep.t_grid):
        record.add(
            kind=kind, n=n, t=float(t), e=z.real, eta=z.imag,
            im_mn=rep.means[ti], im_mn_se=rep.stderrs[ti],
        )
    record.add(passed=rep.band_pass, kind=kind, n=n)


def run_locallaw(cfg: RunConfig, record: ResultRecord) -> None:
    n = cfg.n_list[0]
    spec = ensemble_from_config(cfg, n)
    zs = [complex(0.0, 1.0), complex(2.0, n ** (-0.5)), complex(-1.0, 0.1)]
    seeds = [(cfg.master_seed, t) for t in range(cfg.trials)]
    stats = resolvent.locallaw_deviation(spec, seeds, zs, epsilon=cfg.epsilon)
    for zi, z in enumerate(stats.zs):
        record.add(
            passed=bool(stats.entry_ratio_q99[zi] < 10.0 and stats.trace_ratio_q99[zi] < 10.0),
            n=n,
            e=z.real,
            eta=z.imag,
            entry_ratio_q99=stats.entry_ratio_q99[zi],
            trace_ratio_q99=stats.trace_ratio_q99[zi],
        )


def run_tw_table(cfg: RunConfig, record: ResultRecord) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tracy_widom.write_table_csv(out / "tw_table.csv")
    for beta in (1, 2):
        dist = tracy_widom.tw_distribution(beta)
        record.add(
            passed=dist.accuracy <= 1e-6,
            beta=beta,
            accuracy=dist.accuracy,
            mean=dist.mean(),
        )


def run_verify(cfg: RunConfig, record: ResultRecord) -> None:
    """Fast invariant suites: profiles, Ward identity, Stieltjes transform,
    differentiation rule, and the dual-method Tracy-Widom accuracy."""
    rng_master = cfg.master_seed
    # profile suite
    for name, prof in (
        ("flat", profile.make_flat_profile(60)),
        ("block", profile.block_profile_for_bounds(60, 2, 0.5, 1.5)),
        ("banded", profile.make_banded_floor_profile(60, 7, 0.25 / 60)),
    ):
        cent = profile.centered_profile(prof)
        tk = np.eye(prof.n)
        ok = True
        for k in range(1, 21):
            tk = tk @ cent.t_matrix
            ok &= float(np.abs(tk.sum(axis=1)).max()) <= 1e-9
            ok &= np.linalg.norm(tk, 2) <= (1.0 - cent.c0) ** k + 1e-9
        record.add(passed=bool(ok), check=f"profile-{name}")
    # Ward identity
    spec = ensemble_from_config(replace(cfg, law="gaussian", profile_kind="flat"), 50)
    worst = 0.0
    for t in range(10):
        samp = resolvent.eigen_decompose(sample_matrix(spec, (rng_master, t)))
        for z in (0.5 + 0.1j, 2.0 + 0.01j, -1.0 + 1.0j):
            worst = max(worst, resolvent.ward_check(samp, z, range(0, 50, 10)))
    record.add(passed=worst <= 1e-9, check="ward", residual=worst)
    # Stieltjes transform self-consistency
    es = np.linspace(-4.0, 4.0, 40)
    etas = np.geomspace(1e-3, 1.0, 25)
    zg = (es[:, None] + 1j * etas[None, :]).ravel()
    m = semicircle.m_sc(zg)
    res = float(np.abs(m * m + zg * m + 1.0).max())
    record.add(passed=res <= 1e-13, check="m_sc", residual=res)
    # differentiation rule
    rng = np.random.default_rng(rng_master)
    h = rng.standard_normal((6, 6))
    h = (h + h.T) / 2.0
    worst = max(
        flow_lab.diff_rule_check(h, 0.3 + 0.2j, (0, 1), (2, 3)),
        flow_lab.diff_rule_check(h, 0.3 + 0.2j, (2, 2), (0, 1)),
    )
    record.add(passed=worst <= 1e-6, check="diff-rule", residual=worst)
    # Tracy-Widom dual method
    for beta in (1, 2):
        acc = tracy_widom.tw_distribution(beta).accuracy
        record.add(passed=acc <= 1e-6, check=f"tw-beta{beta}", accuracy=acc)


_RUNNERS = {
    "edge-cdf": run_edge_cdf,
    "rate-fit": run_rate_fit,
    "sandwich": run_sandwich,
    "flow-derivative": run_flow_derivative,
    "k3k4": run_k3k4,
    "gronwall": run_gronwall,
    "locallaw": run_locallaw,
    "tw-table": run_tw_table,
    "verify": run_verify,
}


def run(cfg: RunConfig) -> ResultRecord:
    record = ResultRecord(config=cfg)
    start = time.perf_counter()
    _RUNNERS[cfg.experiment](cfg, record)
    record.wall_time = time.perf_counter() - start
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    record.write_csv(out / f"{cfg.experiment}-{cfg.config_hash}.csv")
    return record
