"""Monte Carlo harness: sampling, observables, analysis and reports.

A run is fully described by an :class:`ExperimentConfig`.  Sample i draws
its graph and its process randomness from ``RngStream(seed, (i,))``, so the
output is byte-identical whatever the worker count; rows are sorted by
sample id before writing.

Each sample runs leaf removal once to exhaustion with an optional edge
checkpoint at ``delta * n``, so the stopped step count I_delta and the
final step count I come from the same realisation (I_delta <= I whenever
both exist).  Matching number and rank are exact, computed on the leafless
core and shifted by the step count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import IO, Optional, Sequence, Union

import numpy as np

from .covariance import limiting_sigma44
from .fluid import chi_of_z, truncated_poisson_pmf, z_delta, z_of_x
from .graphs import MultiGraph, gen_gnm, gen_gnp, gen_multigraph
from .ks import StopRule, run_ks
from .matching import max_matching
from .oracles import alpha_c
from .rank import adjacency_rank
from .rng import RngStream
from .stats import (
    AndersonDarlingResult,
    KsTwoSampleResult,
    MomentSummary,
    anderson_darling_normal,
    ks_two_sample,
    moments,
    total_variation,
)

__all__ = [
    "MODELS",
    "ExperimentConfig",
    "SampleRecord",
    "generate_graph",
    "run_sample",
    "run_monte_carlo",
    "write_samples",
    "read_samples",
    "ObservableSummary",
    "AnalysisReport",
    "analyze",
    "SweepRow",
    "sweep_core",
    "DegreeLawReport",
    "degree_law_check",
    "ModelComparison",
    "compare_models",
]

MODELS = ("gnp", "gnm", "multigraph-fixed", "multigraph-binomial")
SIMPLE_MODELS = ("gnp", "gnm")

SAMPLES_HEADER = "sample_id,nu,rk,I_delta,I,core_v,core_e"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one Monte Carlo run depends on."""

    model: str
    n: int
    c: float
    samples: int
    seed: int
    delta: float = 0.0  # 0 disables the stopped checkpoint
    matching: bool = True
    rank: bool = True
    core: bool = True  # report core sizes (they are a free byproduct)
    degree_law: bool = False
    kcap: int = 30
    out: Optional[str] = None
    workers: int = 1
    engine: str = "auto"

    def validate(self) -> "ExperimentConfig":
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (0 < self.c <= self.n):
            raise ValueError("need 0 < c <= n")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.delta and not (0 < self.delta < self.c / 2):
            raise ValueError("stopped runs need 0 < delta < c/2")
        if self.degree_law and not self.delta:
            raise ValueError("degree-law observables need a stopped run (delta > 0)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        return self


@dataclass
class SampleRecord:
    """Observables of one sample; -1 marks an observable that was not
    computed (or a stop that never happened)."""

    sample_id: int
    nu: int
    rk: int
    i_delta: int
    i_final: int
    core_v: int
    core_e: int
    stopped_stats: Optional[tuple[int, int, int, int]] = None
    stopped_hist: Optional[np.ndarray] = None
    seconds: float = 0.0

    def csv_row(self) -> str:
        return (f"{self.sample_id},{self.nu},{self.rk},{self.i_delta},"
                f"{self.i_final},{self.core_v},{self.core_e}")


def generate_graph(model: str, n: int, c: float, rng: RngStream) -> MultiGraph:
    """Draw one graph from the named model at average degree c."""
    if model == "gnp":
        return gen_gnp(n, c, rng)
    if model == "gnm":
        return gen_gnm(n, int(c * n / 2), rng)
    if model == "multigraph-fixed":
        return gen_multigraph(n, int(c * n / 2), rng)
    if model == "multigraph-binomial":
        pairs = n * (n - 1) // 2
        m = int(rng.child(0).generator().binomial(pairs, c / n))
        return gen_multigraph(n, m, rng.child(1))
    raise ValueError(f"unknown model {model!r}")


def run_sample(config: ExperimentConfig, sample_id: int) -> SampleRecord:
    """Generate, run leaf removal to exhaustion (checkpointing at delta*n
    when enabled) and evaluate the flagged observables."""
    t0 = time.perf_counter()
    rng = RngStream(config.seed, (sample_id,))
    g = generate_graph(config.model, config.n, config.c, rng.child(0))
    trace = run_ks(
        g,
        StopRule.no_leaves(),
        rng.child(1),
        engine=config.engine,
        record_log=False,
        checkpoint_delta=config.delta if config.delta else None,
    )
    core = trace.core
    steps = trace.num_steps

    nu = steps + max_matching(core).size if config.matching else -1
    rank_ok = config.rank and config.model in SIMPLE_MODELS
    rk = 2 * steps + adjacency_rank(core).rank if rank_ok else -1

    cp = trace.checkpoint
    record = SampleRecord(
        sample_id=sample_id,
        nu=nu,
        rk=rk,
        i_delta=cp.step if cp is not None else -1,
        i_final=steps,
        core_v=core.n if config.core else -1,
        core_e=core.num_edges if config.core else -1,
        stopped_stats=cp.stats if (cp is not None and config.degree_law) else None,
        stopped_hist=(cp.degree_histogram if (cp is not None and config.degree_law)
                      else None),
        seconds=time.perf_counter() - t0,
    )
    return record


def run_monte_carlo(config: ExperimentConfig) -> list[SampleRecord]:
    """All samples of a config, in sample-id order; writes the CSV when
    ``config.out`` is set.  Worker processes recreate each sample's stream
    from (seed, sample_id), so scheduling cannot change the output."""
    config.validate()
    ids = range(config.samples)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(partial(run_sample, config), ids,
                                    chunksize=max(1, config.samples // (4 * config.workers))))
    else:
        records = [run_sample(config, i) for i in ids]
    records.sort(key=lambda r: r.sample_id)
    if config.out:
        write_samples(records, config.out)
    return records


def write_samples(records: Sequence[SampleRecord], f: Union[str, IO[str]]) -> None:
    own = isinstance(f, str)
    fh: IO[str] = open(f, "w") if own else f  # type: ignore[arg-type]
    try:
        fh.write(SAMPLES_HEADER + "\n")
        for r in records:
            fh.write(r.csv_row() + "\n")
    finally:
        if own:
            fh.close()


def read_samples(f: Union[str, IO[str]]) -> list[SampleRecord]:
    own = isinstance(f, str)
    fh: IO[str] = open(f) if own else f  # type: ignore[arg-type]
    try:
        header = fh.readline().strip()
        if header != SAMPLES_HEADER:
            raise ValueError(f"unexpected samples header {header!r}")
        out = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = [int(v) for v in line.split(",")]
            out.append(SampleRecord(*vals))
    finally:
        if own:
            fh.close()
    return out


@dataclass
class ObservableSummary:
    name: str
    moments: MomentSummary
    anderson_darling: AndersonDarlingResult
    lln_value: float  # observable normalized to its law-of-large-numbers scale
    lln_reference: float  # alpha_c(c)
    variance_per_n: float
    predicted_variance_per_n: Optional[float]

    @property
    def lln_gap(self) -> float:
        return self.lln_value - self.lln_reference

    @property
    def variance_ratio(self) -> Optional[float]:
        if not self.predicted_variance_per_n:
            return None
        return self.variance_per_n / self.predicted_variance_per_n


@dataclass
class AnalysisReport:
    config: ExperimentConfig
    observables: list[ObservableSummary]
    degree_law_tv_mean: Optional[float] = None
    mu_table: Optional[np.ndarray] = None  # fluid-limit mu^(d), d = 0.. (index 0 unused)

    def render_text(self) -> str:
        cfg = self.config
        lines = [
            f"model={cfg.model} n={cfg.n} c={cfg.c} samples={cfg.samples} "
            f"seed={cfg.seed} delta={cfg.delta}",
        ]
        for ob in self.observables:
            m = ob.moments
            ad = ob.anderson_darling
            lines.append(
                f"{ob.name}: mean={m.mean:.4f} var={m.variance:.4f} "
                f"skew={m.skewness:+.4f} exkurt={m.excess_kurtosis:+.4f}"
            )
            lines.append(
                f"    normality: A2*={ad.a2_adjusted:.4f} "
                f"(1% critical 1.035, rejects={ad.rejects(0.01)})"
            )
            lines.append(
                f"    LLN scale: {ob.lln_value:.5f} vs alpha_c={ob.lln_reference:.5f} "
                f"(gap {ob.lln_gap:+.5f})"
            )
            if ob.predicted_variance_per_n:
                lines.append(
                    f"    variance/n: {ob.variance_per_n:.5f} vs predicted "
                    f"{ob.predicted_variance_per_n:.5f} (ratio {ob.variance_ratio:.3f})"
                )
        if self.degree_law_tv_mean is not None:
            lines.append(f"degree law: mean TV distance {self.degree_law_tv_mean:.4f}")
        return "\n".join(lines) + "\n"

    def write_csv(self, f: Union[str, IO[str]]) -> None:
        own = isinstance(f, str)
        fh: IO[str] = open(f, "w") if own else f  # type: ignore[arg-type]
        try:
            fh.write("key,value\n")
            for ob in self.observables:
                m = ob.moments
                for key, val in (
                    ("mean", m.mean),
                    ("variance", m.variance),
                    ("skewness", m.skewness),
                    ("excess_kurtosis", m.excess_kurtosis),
                    ("a2_adjusted", ob.anderson_darling.a2_adjusted),
                    ("lln_value", ob.lln_value),
                    ("alpha_c", ob.lln_reference),
                    ("variance_per_n", ob.variance_per_n),
                    ("predicted_variance_per_n", ob.predicted_variance_per_n or float("nan")),
                ):
                    fh.write(f"{ob.name}.{key},{val!r}\n")
            if self.degree_law_tv_mean is not None:
                fh.write(f"degree_law.tv_mean,{self.degree_law_tv_mean!r}\n")
        finally:
            if own:
                fh.close()


def analyze(
    records: Sequence[SampleRecord],
    config: ExperimentConfig,
    *,
    predict_variance: bool = True,
) -> AnalysisReport:
    """Sample moments, normality, law-of-large-numbers comparison and the
    predicted-vs-empirical variance ratio for the computed observables."""
    if len(records) < 8:
        raise ValueError("need at least 8 samples to analyze")
    alpha = alpha_c(config.c)
    sigma44: Optional[float] = None
    if predict_variance:
        sigma44 = limiting_sigma44(config.c, _sigma_model(config.model)).sigma44_limit

    observables: list[ObservableSummary] = []
    for name, scale_num, sigma_factor in (("nu", config.n / 2, 1.0), ("rk", config.n, 4.0)):
        values = np.array([getattr(r, name) for r in records], dtype=float)
        if np.any(values < 0):
            continue  # observable not computed for this model
        m = moments(values)
        observables.append(
            ObservableSummary(
                name=name,
                moments=m,
                anderson_darling=anderson_darling_normal(values),
                lln_value=m.mean / scale_num,
                lln_reference=alpha,
                variance_per_n=m.variance / config.n,
                predicted_variance_per_n=(sigma44 * sigma_factor if sigma44 else None),
            )
        )
    report = AnalysisReport(config=config, observables=observables)
    if config.degree_law:
        law = degree_law_check(config, records=records)
        report.degree_law_tv_mean = law.tv_mean
        report.mu_table = law.mu_table
    return report


def _sigma_model(model: str) -> str:
    return "fixed-edges" if model in ("gnm", "multigraph-fixed") else "binomial-edges"


@dataclass
class SweepRow:
    c: float
    samples: int
    core_fraction_mean: float
    core_fraction_se: float


def sweep_core(
    n: int,
    c_values: Sequence[float],
    samples: int,
    seed: int,
    *,
    engine: str = "auto",
    workers: int = 1,
) -> list[SweepRow]:
    """Mean final core fraction v(G(I))/n across a grid of average degrees
    (the phase transition at c = e shows up as the fraction leaving 0)."""
    rows = []
    for ci, c in enumerate(c_values):
        cfg = ExperimentConfig(
            model="gnm", n=n, c=float(c), samples=samples,
            seed=seed + 7919 * ci, delta=0.0,  # distinct stream family per grid point
            matching=False, rank=False, engine=engine, workers=workers,
        )
        recs = run_monte_carlo(cfg)
        fracs = np.array([r.core_v / n for r in recs])
        rows.append(
            SweepRow(
                c=float(c),
                samples=samples,
                core_fraction_mean=float(fracs.mean()),
                core_fraction_se=float(fracs.std(ddof=1) / math.sqrt(samples))
                if samples > 1 else 0.0,
            )
        )
    return rows


@dataclass
class DegreeLawReport:
    """Stopped-core degree law versus the truncated Poisson prediction."""

    config: ExperimentConfig
    tv_distances: np.ndarray
    d_statistics: np.ndarray  # D = sum_d d |X^(d) - mu^(d)| per sample
    mu_table: np.ndarray  # fluid-limit mu^(d) (index d, 0 unused)
    z_fluid: float

    @property
    def tv_mean(self) -> float:
        return float(self.tv_distances.mean())


def degree_law_check(
    config: ExperimentConfig,
    *,
    records: Optional[Sequence[SampleRecord]] = None,
) -> DegreeLawReport:
    """At the stopped step, compare the empirical degree-at-least-2 law with
    the truncated Poisson at z solved from the sample's own statistics, and
    report D = sum_d d |X^(d) - mu^(d)| against the fluid-limit mu table."""
    config.validate()
    if not config.delta:
        raise ValueError("degree_law_check needs a stopped run (delta > 0)")
    if records is None:
        records = run_monte_carlo(replace(config, degree_law=True, matching=False,
                                          rank=False, out=None))
    usable = [r for r in records if r.stopped_hist is not None and r.stopped_stats is not None]
    if not usable:
        raise ValueError("no sample reached the stopped state with histograms enabled")

    n = config.n
    zf = z_delta(config.c, config.delta)
    point = chi_of_z(zf, config.c)
    dmax_mu = max(2, int(math.log2(n))) if n > 1 else 2
    pmf_mu = truncated_poisson_pmf(zf, dmax_mu)
    mu = np.zeros(dmax_mu + 1)
    mu[1] = point.chi[0] * n
    mu[2:] = point.chi[1] * n * pmf_mu[2:]

    tvs = []
    ds = []
    for r in usable:
        hist = r.stopped_hist
        # empirical law of degrees >= 2, against truncated Poisson at the
        # z solved from this sample's own stopped statistics
        counts2 = hist.astype(float).copy()
        if counts2.size > 1:
            counts2[1] = 0.0
        total2 = counts2.sum()
        if total2 > 0:
            z_hat = z_of_x(np.array([r.stopped_stats[0], r.stopped_stats[1],
                                     r.stopped_stats[2], 0.0], dtype=float))
            dmax = max(counts2.size - 1, dmax_mu)
            pmf = truncated_poisson_pmf(z_hat, dmax)
            tvs.append(total_variation(counts2 / total2, pmf))
        # D statistic against the fluid-limit table
        size = max(hist.size, mu.size)
        xd = np.zeros(size)
        xd[: hist.size] = hist
        mud = np.zeros(size)
        mud[: mu.size] = mu
        ds.append(float((np.arange(size) * np.abs(xd - mud)).sum()))
    return DegreeLawReport(
        config=config,
        tv_distances=np.array(tvs),
        d_statistics=np.array(ds),
        mu_table=mu,
        z_fluid=zf,
    )


@dataclass
class ModelComparison:
    n: int
    c: float
    samples: int
    simple_fraction: float
    predicted_simple_fraction: float
    nu_ks: KsTwoSampleResult

    @property
    def simple_gap(self) -> float:
        return self.simple_fraction - self.predicted_simple_fraction


def compare_models(n: int, c: float, samples: int, seed: int,
                   *, engine: str = "auto", workers: int = 1) -> ModelComparison:
    """Empirical simplicity probability of the random multigraph against
    exp(-c/2 - c^2/4), plus a two-sample KS comparison of the matching
    number between the fixed-edge simple and multigraph models."""
    m = int(c * n / 2)
    simple = 0
    for i in range(samples):
        g = gen_multigraph(n, m, RngStream(seed, (0, i)))
        simple += g.is_simple()

    cfg_gnm = ExperimentConfig(model="gnm", n=n, c=c, samples=samples,
                               seed=seed + 1, rank=False, engine=engine, workers=workers)
    cfg_mg = ExperimentConfig(model="multigraph-fixed", n=n, c=c, samples=samples,
                              seed=seed + 2, rank=False, engine=engine, workers=workers)
    nu_gnm = np.array([r.nu for r in run_monte_carlo(cfg_gnm)], dtype=float)
    nu_mg = np.array([r.nu for r in run_monte_carlo(cfg_mg)], dtype=float)
    return ModelComparison(
        n=n, c=c, samples=samples,
        simple_fraction=simple / samples,
        predicted_simple_fraction=math.exp(-c / 2 - c * c / 4),
        nu_ks=ks_two_sample(nu_gnm, nu_mg),
    )
