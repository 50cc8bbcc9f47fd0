"""Monte Carlo campaigns confronting sampled spectra with the predictions.

Each campaign is a deterministic function of (config, base_seed): trial i
samples with seed base_seed + i, aggregation is order-independent, and every
report serializes to JSON/CSV and re-parses into the type that produced it.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .ensembles import (
    EnsembleSpec,
    boundedness_flag,
    effective_profile,
    ensemble_from_dict,
    ensemble_parameters,
    ensemble_to_dict,
    normalized_sample,
    with_seed,
)
from .errors import AssertionFailure, EmptyBulk, InvalidSpec
from .qve import (
    DEFAULT_ETA,
    BulkInterval,
    DensityCurve,
    SpectralPoint,
    default_grid,
    detect_bulk,
    extract_density,
    integrate_density,
    solve_qve_continuation,
)
from .spectra import (
    count_in_interval,
    eigen_full,
    normalized_deloc_ratios,
    stieltjes_empirical,
    tridiagonalize,
)

_QUANTILES = (0.5, 0.9, 0.99)


@dataclass(frozen=True)
class LocalLawConfig:
    """One eigenvalue-counting campaign over a seeded ensemble.

    Intervals have length interval_len_factor * K^2 log(n)/(n p_eff) with
    p_eff = 1 dense, the keep probability for sparse ensembles, and max p_kl
    for block models.  delta is the deviation tolerance a trial must meet on
    every interval to pass.
    """

    ensemble: EnsembleSpec
    eps: float = 0.1
    delta: float = 0.05
    interval_len_factor: float = 50.0
    num_intervals: int = 3
    trials: int = 20
    base_seed: int = 0
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if not (0.0 < self.delta < 1.0):
            raise InvalidSpec(f"delta must lie in (0, 1), got {self.delta}")
        if not self.eps > 0:
            raise InvalidSpec("eps must be positive")
        if self.trials < 1 or self.num_intervals < 1:
            raise InvalidSpec("need at least one trial and one interval")
        if not self.interval_len_factor > 0:
            raise InvalidSpec("interval_len_factor must be positive")

    def interval_length(self) -> float:
        n, k, p_eff = ensemble_parameters(self.ensemble)
        return self.interval_len_factor * k * k * math.log(n) / (n * p_eff)

    def to_dict(self) -> dict:
        return {
            "ensemble": ensemble_to_dict(self.ensemble),
            "eps": self.eps,
            "delta": self.delta,
            "interval_len_factor": self.interval_len_factor,
            "num_intervals": self.num_intervals,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LocalLawConfig":
        return cls(
            ensemble=ensemble_from_dict(data["ensemble"]),
            eps=float(data.get("eps", 0.1)),
            delta=float(data.get("delta", 0.05)),
            interval_len_factor=float(data.get("interval_len_factor", 50.0)),
            num_intervals=int(data.get("num_intervals", 3)),
            trials=int(data.get("trials", 20)),
            base_seed=int(data.get("base_seed", 0)),
            eta=float(data.get("eta", DEFAULT_ETA)),
        )


def factor_for_length(length: float, ensemble: EnsembleSpec) -> float:
    """interval_len_factor that makes the campaign intervals exactly `length` wide."""
    n, k, p_eff = ensemble_parameters(ensemble)
    return length * n * p_eff / (k * k * math.log(n))


def load_local_law_config(path) -> LocalLawConfig:
    with open(path, encoding="utf-8") as fh:
        return LocalLawConfig.from_dict(json.load(fh))


def place_intervals(bulk: BulkInterval, length: float, num: int) -> list[tuple[float, float]]:
    """Evenly spaced midpoints inside the bulk, inset one interval length from
    its edges; when the inset range is empty the intervals sit flush inside
    the bulk instead."""
    mlo, mhi = bulk.lo + length, bulk.hi - length
    if mlo > mhi:
        mlo, mhi = bulk.lo + length / 2.0, bulk.hi - length / 2.0
    if mlo > mhi:
        raise EmptyBulk(f"no interval of length {length:g} fits inside [{bulk.lo:g}, {bulk.hi:g}]")
    if num == 1:
        mids = np.array([(mlo + mhi) / 2.0])
    else:
        mids = np.linspace(mlo, mhi, num)
    return [(float(m - length / 2.0), float(m + length / 2.0)) for m in mids]


def _widest_bulk(curve: DensityCurve, eps: float) -> tuple[list[BulkInterval], BulkInterval]:
    bulks = detect_bulk(curve, eps)
    if not bulks:
        raise EmptyBulk(f"predicted density never reaches eps={eps:g}")
    return bulks, max(bulks, key=lambda b: b.width)


def _prediction_curve(cfg: LocalLawConfig) -> DensityCurve:
    return extract_density(effective_profile(cfg.ensemble), default_grid(), eta=cfg.eta)


def _map_trials(fn, trials: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


# ---------------------------------------------------------------------------
# local law


@dataclass(frozen=True)
class IntervalRecord:
    lo: float
    hi: float
    predicted: float
    observed: list[int]
    deviations: list[float]
    pass_fraction: float

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "predicted": self.predicted,
            "observed": self.observed,
            "deviations": self.deviations,
            "pass_fraction": self.pass_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IntervalRecord":
        return cls(
            lo=float(data["lo"]),
            hi=float(data["hi"]),
            predicted=float(data["predicted"]),
            observed=[int(v) for v in data["observed"]],
            deviations=[float(v) for v in data["deviations"]],
            pass_fraction=float(data["pass_fraction"]),
        )


@dataclass(frozen=True)
class LocalLawReport:
    config: dict
    n: int
    intervals: list[IntervalRecord]
    trial_pass: list[bool]
    pass_fraction: float
    max_deviation: float
    k_bound_flag: bool

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "n": self.n,
            "intervals": [r.to_dict() for r in self.intervals],
            "trial_pass": self.trial_pass,
            "pass_fraction": self.pass_fraction,
            "max_deviation": self.max_deviation,
            "k_bound_flag": self.k_bound_flag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LocalLawReport":
        return cls(
            config=data["config"],
            n=int(data["n"]),
            intervals=[IntervalRecord.from_dict(r) for r in data["intervals"]],
            trial_pass=[bool(v) for v in data["trial_pass"]],
            pass_fraction=float(data["pass_fraction"]),
            max_deviation=float(data["max_deviation"]),
            k_bound_flag=bool(data["k_bound_flag"]),
        )

    def to_json(self, path) -> None:
        _dump_json(self.to_dict(), path)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["interval_lo", "interval_hi", "trial", "observed", "predicted", "deviation"])
            for rec in self.intervals:
                for t, (obs, dev) in enumerate(zip(rec.observed, rec.deviations)):
                    writer.writerow([repr(rec.lo), repr(rec.hi), t, obs, repr(rec.predicted), repr(dev)])


def verify_local_law(
    cfg: LocalLawConfig,
    threads: int = 1,
    intervals: list[tuple[float, float]] | None = None,
) -> LocalLawReport:
    """Count eigenvalues on bulk intervals across trials and compare with n * integral(rho).

    The equation is solved once (the density curve is cached for the whole
    campaign); trial i samples the ensemble with seed base_seed + i, scales it,
    tridiagonalizes, and Sturm-counts every interval.  `intervals` overrides
    the default placement for experiments with hand-chosen windows.
    """
    n, _, _ = ensemble_parameters(cfg.ensemble)
    curve = _prediction_curve(cfg)
    _, widest = _widest_bulk(curve, cfg.eps)
    if intervals is None:
        intervals = place_intervals(widest, cfg.interval_length(), cfg.num_intervals)
    predicted = [n * integrate_density(curve, lo, hi) for lo, hi in intervals]

    def run_trial(i: int) -> list[int]:
        spec = with_seed(cfg.ensemble, cfg.base_seed + i)
        tri = tridiagonalize(normalized_sample(spec))
        return [count_in_interval(tri, lo, hi) for lo, hi in intervals]

    observed_rows = _map_trials(run_trial, cfg.trials, threads)

    records = []
    trial_dev_max = np.zeros(cfg.trials)
    for j, (lo, hi) in enumerate(intervals):
        obs = [row[j] for row in observed_rows]
        devs = [abs(o - predicted[j]) / (n * (hi - lo)) for o in obs]
        trial_dev_max = np.maximum(trial_dev_max, devs)
        records.append(
            IntervalRecord(
                lo=lo,
                hi=hi,
                predicted=predicted[j],
                observed=obs,
                deviations=devs,
                pass_fraction=float(np.mean([d <= cfg.delta for d in devs])),
            )
        )
    trial_pass = [bool(d <= cfg.delta) for d in trial_dev_max]
    return LocalLawReport(
        config=cfg.to_dict(),
        n=n,
        intervals=records,
        trial_pass=trial_pass,
        pass_fraction=float(np.mean(trial_pass)),
        max_deviation=float(trial_dev_max.max()),
        k_bound_flag=boundedness_flag(cfg.ensemble),
    )


# ---------------------------------------------------------------------------
# Stieltjes-transform closeness


@dataclass(frozen=True)
class StieltjesRecord:
    x: float
    eta: float
    predicted: list[float]  # [re, im]
    discrepancies: list[float]

    def to_dict(self) -> dict:
        return {"x": self.x, "eta": self.eta, "predicted": self.predicted, "discrepancies": self.discrepancies}

    @classmethod
    def from_dict(cls, data: dict) -> "StieltjesRecord":
        return cls(
            x=float(data["x"]),
            eta=float(data["eta"]),
            predicted=[float(v) for v in data["predicted"]],
            discrepancies=[float(v) for v in data["discrepancies"]],
        )


@dataclass(frozen=True)
class StieltjesReport:
    config: dict
    eta_floor: float
    records: list[StieltjesRecord]
    trial_sup: list[float]
    max_discrepancy: float
    median_sup: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "eta_floor": self.eta_floor,
            "records": [r.to_dict() for r in self.records],
            "trial_sup": self.trial_sup,
            "max_discrepancy": self.max_discrepancy,
            "median_sup": self.median_sup,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StieltjesReport":
        return cls(
            config=data["config"],
            eta_floor=float(data["eta_floor"]),
            records=[StieltjesRecord.from_dict(r) for r in data["records"]],
            trial_sup=[float(v) for v in data["trial_sup"]],
            max_discrepancy=float(data["max_discrepancy"]),
            median_sup=float(data["median_sup"]),
        )

    def to_json(self, path) -> None:
        _dump_json(self.to_dict(), path)


def stieltjes_eta_floor(ensemble: EnsembleSpec) -> float:
    """Smallest meaningful regularization, K^2 log n/(n p_eff)."""
    n, k, p_eff = ensemble_parameters(ensemble)
    return k * k * math.log(n) / (n * p_eff)


def verify_stieltjes_closeness(
    cfg: LocalLawConfig, eta_grid, threads: int = 1
) -> StieltjesReport:
    """|s_n(z) - m(z)| over a grid of bulk points z = x + i*eta, per trial."""
    etas = sorted(float(e) for e in np.atleast_1d(eta_grid))
    floor = stieltjes_eta_floor(cfg.ensemble)
    if etas[0] < floor:
        raise InvalidSpec(f"eta={etas[0]:g} is below the configured floor {floor:g}")
    n, _, _ = ensemble_parameters(cfg.ensemble)
    curve = _prediction_curve(cfg)
    _, widest = _widest_bulk(curve, cfg.eps)
    xs = np.linspace(widest.lo, widest.hi, cfg.num_intervals + 2)[1:-1]
    profile = curve.source
    points = [(float(x), eta) for x in xs for eta in etas]
    predicted = {
        pt: solve_qve_continuation(profile, pt[0], max(1.0, pt[1]), pt[1], 40).m for pt in points
    }

    def run_trial(i: int) -> list[float]:
        spec = with_seed(cfg.ensemble, cfg.base_seed + i)
        summary = eigen_full(normalized_sample(spec))
        return [
            abs(stieltjes_empirical(summary, SpectralPoint(x, eta)) - predicted[(x, eta)])
            for (x, eta) in points
        ]

    rows = _map_trials(run_trial, cfg.trials, threads)
    records = []
    for j, (x, eta) in enumerate(points):
        m = predicted[(x, eta)]
        records.append(
            StieltjesRecord(
                x=x, eta=eta, predicted=[m.real, m.imag], discrepancies=[row[j] for row in rows]
            )
        )
    trial_sup = [float(max(row)) for row in rows]
    return StieltjesReport(
        config=cfg.to_dict(),
        eta_floor=floor,
        records=records,
        trial_sup=trial_sup,
        max_discrepancy=float(max(trial_sup)),
        median_sup=float(np.median(trial_sup)),
    )


# ---------------------------------------------------------------------------
# delocalization


@dataclass(frozen=True)
class DelocTrialRecord:
    trial: int
    bulk_count: int
    max_inf_norm: float
    max_ratio: float

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "bulk_count": self.bulk_count,
            "max_inf_norm": self.max_inf_norm,
            "max_ratio": self.max_ratio,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DelocTrialRecord":
        return cls(
            trial=int(data["trial"]),
            bulk_count=int(data["bulk_count"]),
            max_inf_norm=float(data["max_inf_norm"]),
            max_ratio=float(data["max_ratio"]),
        )


@dataclass(frozen=True)
class DelocReport:
    config: dict
    records: list[DelocTrialRecord]
    ratio_quantiles: dict
    max_ratio: float
    k_bound_flag: bool

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "ratio_quantiles": self.ratio_quantiles,
            "max_ratio": self.max_ratio,
            "k_bound_flag": self.k_bound_flag,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DelocReport":
        return cls(
            config=data["config"],
            records=[DelocTrialRecord.from_dict(r) for r in data["records"]],
            ratio_quantiles=data["ratio_quantiles"],
            max_ratio=float(data["max_ratio"]),
            k_bound_flag=bool(data["k_bound_flag"]),
        )

    def to_json(self, path) -> None:
        _dump_json(self.to_dict(), path)

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "bulk_count", "max_inf_norm", "max_ratio"])
            for r in self.records:
                writer.writerow([r.trial, r.bulk_count, repr(r.max_inf_norm), repr(r.max_ratio)])


def verify_delocalization(cfg: LocalLawConfig, threads: int = 1) -> DelocReport:
    """Sup-norms of bulk eigenvectors, normalized by K sqrt(log n)/sqrt(n p_eff)."""
    n, k_bound, p_eff = ensemble_parameters(cfg.ensemble)
    curve = _prediction_curve(cfg)
    bulks, _ = _widest_bulk(curve, cfg.eps)

    def run_trial(i: int) -> tuple[int, float, float, np.ndarray]:
        spec = with_seed(cfg.ensemble, cfg.base_seed + i)
        summary = eigen_full(normalized_sample(spec), want_vectors=True)
        ratios = normalized_deloc_ratios(summary, bulks, n, k_bound, p_eff)
        if ratios.size == 0:
            return 0, 0.0, 0.0, ratios
        norms = ratios * k_bound * math.sqrt(math.log(n)) / math.sqrt(n * p_eff)
        return ratios.size, float(norms.max()), float(ratios.max()), ratios

    results = _map_trials(run_trial, cfg.trials, threads)
    records = [
        DelocTrialRecord(trial=i, bulk_count=c, max_inf_norm=mn, max_ratio=mr)
        for i, (c, mn, mr, _) in enumerate(results)
    ]
    pooled = np.concatenate([r[3] for r in results]) if results else np.empty(0)
    quantiles = {
        f"q{int(100 * q)}": float(np.quantile(pooled, q)) if pooled.size else math.nan
        for q in _QUANTILES
    }
    return DelocReport(
        config=cfg.to_dict(),
        records=records,
        ratio_quantiles=quantiles,
        max_ratio=float(pooled.max()) if pooled.size else math.nan,
        k_bound_flag=boundedness_flag(cfg.ensemble),
    )


# ---------------------------------------------------------------------------
# projection concentration


@dataclass(frozen=True)
class ProjectionTestSpec:
    """Concentration test of weighted projections of a bounded random vector.

    The orthonormal basis comes from a seeded Haar-orthogonal matrix restricted
    to subspace_dim columns; X has independent entries with variances `sigma`
    (each in [0, 1]) and absolute bound 1.
    """

    n: int
    sigma: np.ndarray
    subspace_dim: int
    weights: np.ndarray
    t_grid: np.ndarray
    trials: int
    seed: int = 0

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=np.float64)
        weights = np.array(self.weights, dtype=np.float64)
        t_grid = np.array(self.t_grid, dtype=np.float64)
        if sigma.shape != (self.n,) or sigma.min() < 0 or sigma.max() > 1:
            raise InvalidSpec("sigma must hold n variances in [0, 1]")
        if not (1 <= self.subspace_dim <= self.n):
            raise InvalidSpec("subspace_dim must lie in [1, n]")
        if weights.shape != (self.subspace_dim,) or weights.min() < 0 or weights.max() > 1:
            raise InvalidSpec("weights must hold subspace_dim values in [0, 1]")
        if t_grid.ndim != 1 or t_grid.size < 1 or t_grid.min() <= 0:
            raise InvalidSpec("t_grid must hold positive thresholds")
        if self.trials < 1:
            raise InvalidSpec("need at least one trial")
        for name, arr in (("sigma", sigma), ("weights", weights), ("t_grid", np.sort(t_grid))):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sigma": self.sigma.tolist(),
            "subspace_dim": self.subspace_dim,
            "weights": self.weights.tolist(),
            "t_grid": self.t_grid.tolist(),
            "trials": self.trials,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectionTestSpec":
        return cls(
            n=int(data["n"]),
            sigma=np.asarray(data["sigma"]),
            subspace_dim=int(data["subspace_dim"]),
            weights=np.asarray(data["weights"]),
            t_grid=np.asarray(data["t_grid"]),
            trials=int(data["trials"]),
            seed=int(data.get("seed", 0)),
        )


@dataclass(frozen=True)
class ProjectionReport:
    spec: dict
    center: float
    rows: list[dict]  # {"t": float, "failure_rate": float}

    def to_dict(self) -> dict:
        return {"spec": self.spec, "center": self.center, "rows": self.rows}

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectionReport":
        return cls(spec=data["spec"], center=float(data["center"]), rows=list(data["rows"]))

    def to_json(self, path) -> None:
        _dump_json(self.to_dict(), path)

    def rates(self) -> list[float]:
        return [row["failure_rate"] for row in self.rows]


def haar_basis(n: int, d: int, seed: int) -> np.ndarray:
    """First d columns of a seeded Haar-distributed orthogonal matrix."""
    ii = np.arange(n, dtype=np.uint64)[:, None]
    jj = np.arange(n, dtype=np.uint64)[None, :]
    counters = (ii << np.uint64(32)) | jj
    gauss = rng.normals(rng.stream_key(seed, rng.TAG_GAUSS), counters)
    q, r = np.linalg.qr(gauss)
    q = q * np.sign(np.diag(r))[None, :]
    return q[:, :d]


def projection_concentration_test(spec: ProjectionTestSpec) -> ProjectionReport:
    """Empirical failure rate of the projection-concentration event per threshold.

    The statistic is |sum_j r_j |u_j^T X|^2 - sum_j r_j tr(u_j u_j^T Sigma)|;
    a trial fails at threshold t when it reaches 2 t sqrt(center) + t^2.  The
    emitted table is non-increasing in t by construction (events are nested).
    """
    u = haar_basis(spec.n, spec.subspace_dim, spec.seed)
    tr_terms = (u * u).T @ spec.sigma
    center = float(spec.weights @ tr_terms)

    ii = np.arange(spec.n, dtype=np.uint64)[:, None]
    tt = np.arange(spec.trials, dtype=np.uint64)[None, :]
    counters = (ii << np.uint64(32)) | tt
    signs = rng.rademacher(rng.stream_key(spec.seed, rng.TAG_AUX), counters)
    x = np.sqrt(spec.sigma)[:, None] * signs

    proj = u.T @ x
    stat = spec.weights @ (proj * proj)
    dev = np.abs(stat - center)

    rows = []
    for t in spec.t_grid:
        threshold = 2.0 * t * math.sqrt(center) + t * t
        rows.append({"t": float(t), "failure_rate": float(np.mean(dev >= threshold))})
    rates = [row["failure_rate"] for row in rows]
    assert all(a >= b for a, b in zip(rates, rates[1:])), "failure rates must be non-increasing"
    return ProjectionReport(spec=spec.to_dict(), center=center, rows=rows)


# ---------------------------------------------------------------------------
# interlacing


@dataclass(frozen=True)
class InterlacingReport:
    trials: int
    n: int
    seed: int
    max_shift_rank1: int
    max_shift_by_rank: dict
    passed: bool

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "n": self.n,
            "seed": self.seed,
            "max_shift_rank1": self.max_shift_rank1,
            "max_shift_by_rank": self.max_shift_by_rank,
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InterlacingReport":
        return cls(
            trials=int(data["trials"]),
            n=int(data["n"]),
            seed=int(data["seed"]),
            max_shift_rank1=int(data["max_shift_rank1"]),
            max_shift_by_rank={int(k): int(v) for k, v in data["max_shift_by_rank"].items()},
            passed=bool(data["passed"]),
        )

    def to_json(self, path) -> None:
        _dump_json(self.to_dict(), path)


def _random_symmetric(n: int, key) -> np.ndarray:
    iu, ju = np.triu_indices(n)
    vals = 2.0 * rng.uniforms(key, rng.pair_counters(iu, ju)) - 1.0
    out = np.zeros((n, n))
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def interval_shift(a: np.ndarray, b: np.ndarray, lo: float, hi: float) -> int:
    """|N_(lo,hi](A+B) - N_(lo,hi](A)| via Sturm counts."""
    base = count_in_interval(tridiagonalize(a), lo, hi)
    bumped = count_in_interval(tridiagonalize(a + b), lo, hi)
    return abs(bumped - base)


def interlacing_test(trials: int, n: int, seed: int, max_rank: int = 5) -> InterlacingReport:
    """Check that rank-r symmetric updates move interval counts by at most r.

    Each trial draws a random symmetric matrix, a rank-1 update vv^T and a
    random interval, asserting a count shift <= 1; a rank-d update (d cycling
    2..max_rank) must shift counts by <= d.  Raises AssertionFailure with the
    counterexample on any violation.
    """
    if n < 2:
        raise InvalidSpec("need n >= 2")
    max_rank1 = 0
    max_by_rank: dict[int, int] = {}
    span = 2.5 * math.sqrt(n)
    for t in range(trials):
        key_a = rng.stream_key(seed + t, rng.TAG_VALUES)
        key_v = rng.stream_key(seed + t, rng.TAG_AUX)
        a = _random_symmetric(n, key_a)
        vs = 2.0 * rng.uniforms(key_v, rng.pair_counters(np.repeat(np.arange(max_rank), n), np.tile(np.arange(n), max_rank))) - 1.0
        vs = vs.reshape(max_rank, n)
        endpoints = span * (2.0 * rng.uniforms(key_v, np.array([2**40 + 2 * t, 2**40 + 2 * t + 1])) - 1.0)
        lo, hi = float(endpoints.min()), float(endpoints.max())

        b1 = np.outer(vs[0], vs[0])
        shift1 = interval_shift(a, b1, lo, hi)
        max_rank1 = max(max_rank1, shift1)
        if shift1 > 1:
            raise AssertionFailure(
                f"rank-1 update moved the count on ({lo:g}, {hi:g}] by {shift1}",
                counterexample={"trial": t, "seed": seed, "lo": lo, "hi": hi, "shift": shift1},
            )

        rank = 2 + (t % (max_rank - 1))
        bd = vs[:rank].T @ vs[:rank]
        shift_d = interval_shift(a, bd, lo, hi)
        max_by_rank[rank] = max(max_by_rank.get(rank, 0), shift_d)
        if shift_d > rank:
            raise AssertionFailure(
                f"rank-{rank} update moved the count on ({lo:g}, {hi:g}] by {shift_d}",
                counterexample={"trial": t, "seed": seed, "lo": lo, "hi": hi, "rank": rank, "shift": shift_d},
            )
    return InterlacingReport(
        trials=trials,
        n=n,
        seed=seed,
        max_shift_rank1=max_rank1,
        max_shift_by_rank=dict(sorted(max_by_rank.items())),
        passed=True,
    )


def _dump_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def report_json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode()
