"""
Monte-Carlo studies.

Each study simulates from a known model, runs the estimation pipeline and summarizes
how the estimates relate to the truth. Replications run in parallel through joblib,
each with its own child of one root RandomSource, so results do not depend on the
number of workers.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from statsmodels.tsa.stattools import acf

from app.config import settings
from app.core.random_source import RandomSource
from app.schemas.events import EventStream
from app.schemas.experiments import (
    BiasPoint,
    BiasStudy,
    CoverageStudy,
    DiagnosticsStudy,
    InarIdentityStudy,
    ScalingPoint,
    ScalingSweep,
    SupportPoint,
    SupportStudy,
    TargetSummary,
    TruncationStudy,
    VarianceScalingStudy,
)
from app.schemas.hawkes import (
    ConstantIntervalExcitement,
    ExpDecayExcitement,
    HawkesSpec,
    InarSpec,
    PowerLawExcitement,
    SineIntervalExcitement,
    ZeroExcitement,
)
from app.services.cls_service import confidence_interval, hawkes_estimator, max_lag, vec_index
from app.services.diagnostics_service import ks_exp1, time_change_residuals
from app.services.event_service import bin_counts
from app.services.selection_service import select_support
from app.services.simulation_service import inar_residuals, simulate_hawkes, simulate_inar

logger = logging.getLogger(__name__)

# declared support of the otherwise untruncated h21 of the bivariate example
BIVARIATE_H21_CUTOFF = 50.0
# simulation cutoff of untruncated exponential kernels
EXP_SIMULATION_CUTOFF = 20.0


def _root(seed: Optional[int]) -> RandomSource:
    seed = settings.DEFAULT_SEED if seed is None else seed
    return RandomSource(seed=seed, algorithm=settings.RNG_ALGORITHM)


def _workers(workers: Optional[int]) -> int:
    return settings.WORKERS if workers is None else workers


def bivariate_example_spec(h21_cutoff: float = BIVARIATE_H21_CUTOFF) -> HawkesSpec:
    """
    eta = (0.5, 0.25); h11 = 0, h12 = 0.25 on (1, 3], h21 = 0.5 (1 + t)^-2,
    h22 = 0.2 sin t on (0, pi].
    """
    return HawkesSpec(
        eta=[0.5, 0.25],
        excitement=[
            [ZeroExcitement(), ConstantIntervalExcitement(value=0.25, start=1.0, end=3.0)],
            [
                PowerLawExcitement(scale=0.5, offset=1.0, exponent=2.0, cutoff=h21_cutoff),
                SineIntervalExcitement(scale=0.2, frequency=1.0, end=math.pi),
            ],
        ],
    )


def univariate_spec(eta: float, h) -> HawkesSpec:
    return HawkesSpec(eta=[eta], excitement=[[h]])


def _coverage_replication(
    spec: HawkesSpec,
    source: RandomSource,
    horizon: float,
    delta: float,
    support: float,
    level: float,
    targets: Sequence[Tuple[int, ...]],
) -> Dict[str, np.ndarray]:
    stream = simulate_hawkes(spec, horizon, source)
    fit = hawkes_estimator(bin_counts(stream, delta), support)
    estimates, variances, half_widths = [], [], []
    for target in targets:
        point, half = confidence_interval(fit, target, level)
        index = vec_index(fit.d, fit.p, target) - 1
        estimates.append(point)
        variances.append(max(float(fit.s2[index, index]), 0.0))
        half_widths.append(half)
    return {
        "estimates": np.array(estimates),
        "variances": np.array(variances),
        "half_widths": np.array(half_widths),
        "events": np.array(stream.counts, dtype=float),
    }


def coverage_study(
    replications: int = 500,
    horizon: float = 4_000.0,
    delta: float = 0.2,
    support: float = 6.0,
    level: Optional[float] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> CoverageStudy:
    """
    Coverage of the CIs for eta_1 and h_{2,1}(1) on the bivariate example.

    Returns:
        Mean estimate, empirical and mean estimated variance, their ratio and the
        empirical coverage per target
    """
    level = settings.CI_LEVEL if level is None else level
    spec = bivariate_example_spec()
    k = max_lag(1.0, delta)
    targets = [(1,), (k, 2, 1)]
    truths = [float(spec.eta[0]), float(spec.component(1, 0).evaluate(k * delta))]
    names = ["eta_1", f"h_21({k * delta:g})"]

    runs = Parallel(n_jobs=_workers(workers))(
        delayed(_coverage_replication)(spec, child, horizon, delta, support, level, targets)
        for child in _root(seed).spawn(replications)
    )
    estimates = np.array([run["estimates"] for run in runs])
    variances = np.array([run["variances"] for run in runs])
    half_widths = np.array([run["half_widths"] for run in runs])
    events = np.array([run["events"] for run in runs])

    summaries = []
    for index, (name, truth) in enumerate(zip(names, truths)):
        empirical = float(np.var(estimates[:, index], ddof=1))
        estimated = float(np.mean(variances[:, index]))
        covered = np.abs(estimates[:, index] - truth) <= half_widths[:, index]
        summaries.append(
            TargetSummary(
                name=name,
                truth=truth,
                mean_estimate=float(np.mean(estimates[:, index])),
                empirical_variance=empirical,
                mean_estimated_variance=estimated,
                variance_ratio=estimated / empirical if empirical > 0 else math.inf,
                coverage=float(np.mean(covered)),
            )
        )
        logger.info(f"Coverage of {name}: {summaries[-1].coverage:.3f}")

    return CoverageStudy(
        replications=replications,
        horizon=horizon,
        delta=delta,
        support=support,
        level=level,
        mean_events=tuple(float(value) for value in events.mean(axis=0)),
        targets=summaries,
    )


def _log_slope(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    usable = (x > 0) & (y > 0)
    if usable.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[usable]), np.log(y[usable]), 1)[0])


def _variances(stream: EventStream, delta: float, support: float, lag: float) -> ScalingPoint:
    fit = hawkes_estimator(bin_counts(stream, delta), support)
    k = max_lag(lag, delta)
    h_index = vec_index(fit.d, fit.p, (k, 1, 1)) - 1
    eta_index = vec_index(fit.d, fit.p, (1,)) - 1
    return ScalingPoint(
        value=delta,
        excitement_variance=float(fit.s2[h_index, h_index]),
        baseline_variance=float(fit.s2[eta_index, eta_index]),
    )


def _sweep(parameter: str, points: List[ScalingPoint]) -> ScalingSweep:
    values = [point.value for point in points]
    return ScalingSweep(
        parameter=parameter,
        points=points,
        excitement_slope=_log_slope(values, [point.excitement_variance for point in points]),
        baseline_slope=_log_slope(values, [point.baseline_variance for point in points]),
    )


def variance_scaling_study(
    seed: Optional[int] = None,
    horizon: float = 10_000.0,
    deltas: Sequence[float] = (0.1, 0.2, 0.5, 1.0),
    horizons: Sequence[float] = (1_000.0, 2_000.0, 5_000.0, 10_000.0),
    supports: Sequence[float] = (3.0, 4.0, 5.0, 6.0),
    delta: float = 0.2,
    support: float = 4.0,
    lag: float = 1.0,
) -> VarianceScalingStudy:
    """
    Estimated variances of h_hat(lag) and eta_hat on one large univariate sample.

    Model: eta = 1, h(t) = (1 + t)^-2 on (0, 3]. Sweeps delta at fixed support, the
    window length through prefixes of the sample, and the support at fixed delta.
    """
    spec = univariate_spec(1.0, PowerLawExcitement(scale=1.0, exponent=2.0, cutoff=3.0))
    horizon = max(horizon, max(horizons))
    stream = simulate_hawkes(spec, horizon, _root(seed))

    by_delta = [_variances(stream, value, support, lag) for value in deltas]
    by_horizon = [
        _variances(stream.prefix(value), delta, support, lag).model_copy(update={"value": value})
        for value in horizons
    ]
    by_support = [
        _variances(stream, delta, value, lag).model_copy(update={"value": value})
        for value in supports
    ]
    sweeps = [
        _sweep("delta", by_delta),
        _sweep("horizon", by_horizon),
        _sweep("support", by_support),
    ]
    for sweep in sweeps:
        logger.info(
            f"Variance scaling in {sweep.parameter}: excitement slope {sweep.excitement_slope}, "
            f"baseline slope {sweep.baseline_slope}"
        )
    return VarianceScalingStudy(
        horizon=horizon, events=sum(stream.counts), lag=lag, sweeps=sweeps
    )


def _first_lag_estimates(
    spec: HawkesSpec,
    source: RandomSource,
    horizon: float,
    deltas: Sequence[float],
    support: float,
) -> np.ndarray:
    stream = simulate_hawkes(spec, horizon, source)
    estimates = []
    for delta in deltas:
        fit = hawkes_estimator(bin_counts(stream, delta), support, with_covariance=False)
        estimates.append(fit.hhat[0, 0, 0])
    return np.array(estimates)


def bias_study(
    replications: int = 100,
    deltas: Sequence[float] = (1.0, 0.5, 0.1),
    support: float = 5.0,
    horizon: float = 2_000.0,
    eta: float = 0.5,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> BiasStudy:
    """
    Discretization bias of the first-lag estimate for h(t) = exp(-1.1 t).

    The standard error of a point is the spread of the estimate across replications;
    mean_error is the Monte-Carlo error of its mean. The kernel is simulated with a
    cutoff far in its tail; the truth at the first lag is h(delta).
    """
    h = ExpDecayExcitement(scale=1.0, rate=1.1, cutoff=EXP_SIMULATION_CUTOFF)
    spec = univariate_spec(eta, h)
    runs = Parallel(n_jobs=_workers(workers))(
        delayed(_first_lag_estimates)(spec, child, horizon, deltas, support)
        for child in _root(seed).spawn(replications)
    )
    estimates = np.array(runs)

    points = []
    for index, delta in enumerate(deltas):
        truth = float(h.evaluate(delta))
        mean = float(np.mean(estimates[:, index]))
        standard_error = float(np.std(estimates[:, index], ddof=1))
        points.append(
            BiasPoint(
                delta=delta,
                truth=truth,
                mean_estimate=mean,
                bias=mean - truth,
                standard_error=standard_error,
                mean_error=standard_error / math.sqrt(replications),
            )
        )
        logger.info(f"delta={delta}: bias {mean - truth:.4f} (se {standard_error:.4f})")
    return BiasStudy(replications=replications, horizon=horizon, support=support, points=points)


def _selected_support(stream: EventStream, delta0: float, s_max: float) -> Tuple[float, np.ndarray]:
    scan = select_support(bin_counts(stream, delta0), delta0, s_max)
    return scan.s_hat, scan.aic


def _tail_support(
    alpha: float, source: RandomSource, horizon: float, delta0: float, s_max: float
) -> float:
    spec = univariate_spec(
        1.0, ExpDecayExcitement(scale=1.0, rate=alpha, cutoff=EXP_SIMULATION_CUTOFF)
    )
    s_hat, _ = _selected_support(simulate_hawkes(spec, horizon, source), delta0, s_max)
    return s_hat


def support_study(
    delta0s: Sequence[float] = (0.2, 0.4, 0.5),
    s_max: float = 6.0,
    horizon: float = 2_000.0,
    seed: Optional[int] = None,
    decays: Sequence[float] = (1.1, 1.5, 2.0),
    cutoff: float = 3.0,
    tail_horizon: float = 200_000.0,
    tail_delta0: float = 0.5,
    replications: int = 3,
    workers: Optional[int] = None,
) -> SupportStudy:
    """
    AIC support recovery.

    h(t) = exp(-t) on (0, cutoff] is simulated once on the horizon and selected at
    every preliminary bin size. Each untruncated h(t) = exp(-alpha t) is simulated
    `replications` times on tail_horizon and selected at tail_delta0; its point holds
    the median selected support and the ignored tail mass exp(-alpha s_hat) / alpha.
    The estimate of h(t) has standard deviation near (tail_horizon * tail_delta0)^(-1/2).
    """
    root = _root(seed)
    sources = root.spawn(1 + len(decays))

    truncated = univariate_spec(1.0, ExpDecayExcitement(scale=1.0, rate=1.0, cutoff=cutoff))
    stream = simulate_hawkes(truncated, horizon, sources[0])
    points = []
    for delta0 in delta0s:
        s_hat, _ = _selected_support(stream, delta0, s_max)
        points.append(
            SupportPoint(
                label=f"exp(-t) cut at {cutoff:g}",
                delta0=delta0,
                s_hat=s_hat,
                true_support=cutoff,
            )
        )

    jobs = [
        (alpha, child)
        for alpha, source in zip(decays, sources[1:])
        for child in source.spawn(replications)
    ]
    selected = Parallel(n_jobs=_workers(workers))(
        delayed(_tail_support)(alpha, child, tail_horizon, tail_delta0, s_max)
        for alpha, child in jobs
    )
    for index, alpha in enumerate(decays):
        supports = tuple(selected[index * replications : (index + 1) * replications])
        s_hat = float(np.median(supports))
        points.append(
            SupportPoint(
                label=f"exp(-{alpha:g} t)",
                delta0=tail_delta0,
                s_hat=s_hat,
                replicated_s_hat=supports,
                ignored_mass=math.exp(-alpha * s_hat) / alpha,
            )
        )
    for point in points:
        logger.info(f"{point.label} at delta0={point.delta0}: s_hat={point.s_hat}")
    return SupportStudy(
        horizon=horizon,
        tail_horizon=tail_horizon,
        replications=replications,
        s_max=s_max,
        points=points,
    )


def _truncation_replication(
    h21_cutoff: float, source: RandomSource, horizon: float, delta0: float, s_max: float
) -> Tuple[float, np.ndarray]:
    stream = simulate_hawkes(bivariate_example_spec(h21_cutoff), horizon, source)
    return _selected_support(stream, delta0, s_max)


def truncation_discrimination_study(
    seed: Optional[int] = None,
    horizon: float = 20_000.0,
    delta0: float = 0.5,
    s_max: float = 10.0,
    truncation: float = 4.0,
    replications: int = 20,
    workers: Optional[int] = None,
) -> TruncationStudy:
    """
    AIC support on the bivariate example versus its variant with h21 cut at truncation.

    Both models are simulated `replications` times; a single pair of samples
    separates them no better than chance at these window lengths.
    """
    full_source, truncated_source = _root(seed).spawn(2)
    jobs = [(BIVARIATE_H21_CUTOFF, child) for child in full_source.spawn(replications)] + [
        (truncation, child) for child in truncated_source.spawn(replications)
    ]
    runs = Parallel(n_jobs=_workers(workers))(
        delayed(_truncation_replication)(cut, child, horizon, delta0, s_max)
        for cut, child in jobs
    )
    full, truncated = runs[:replications], runs[replications:]
    study = TruncationStudy(
        horizon=horizon,
        delta0=delta0,
        s_max=s_max,
        replications=replications,
        s_hat_full=tuple(s_hat for s_hat, _ in full),
        s_hat_truncated=tuple(s_hat for s_hat, _ in truncated),
        aic_full=full[0][1],
        aic_truncated=truncated[0][1],
    )
    logger.info(
        f"Mean selected support: full {study.mean_s_hat_full:.3f}, "
        f"truncated {study.mean_s_hat_truncated:.3f}"
    )
    return study


def _diagnostics_replication(
    spec: HawkesSpec, wrong: HawkesSpec, source: RandomSource, horizon: float
) -> np.ndarray:
    stream = simulate_hawkes(spec, horizon, source)
    rows = []
    for model in (spec, wrong):
        residuals = time_change_residuals(stream, model.eta, model, workers=1)
        rows.append([ks_exp1(r)[1] for r in residuals] + [r.size for r in residuals])
    return np.array(rows)


def diagnostics_study(
    replications: int = 200,
    horizon: float = 2_000.0,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> DiagnosticsStudy:
    """KS rejection rates at 5% for the true bivariate model and for it with eta halved."""
    spec = bivariate_example_spec()
    wrong = spec.model_copy(update={"eta": spec.eta / 2.0})
    runs = np.array(
        Parallel(n_jobs=_workers(workers))(
            delayed(_diagnostics_replication)(spec, wrong, child, horizon)
            for child in _root(seed).spawn(replications)
        )
    )
    d = spec.d
    true_rate = tuple(float(value) for value in np.mean(runs[:, 0, :d] < 0.05, axis=0))
    wrong_rate = tuple(float(value) for value in np.mean(runs[:, 1, :d] < 0.05, axis=0))
    logger.info(f"KS rejection: true model {true_rate}, eta halved {wrong_rate}")
    return DiagnosticsStudy(
        replications=replications,
        horizon=horizon,
        true_model_rejection=true_rate,
        wrong_model_rejection=wrong_rate,
        mean_residuals=tuple(int(value) for value in np.mean(runs[:, 0, d:], axis=0)),
    )


def inar_identity_study(
    n: int = 100_000, seed: Optional[int] = None, batches: int = 100
) -> InarIdentityStudy:
    """
    INAR(2) with a0 = 1, A = (0.25, 0.25) against its closed-form moments.

    Stationary mean (I - sum A)^{-1} a0 = 2, residual variance equal to the same
    value and uncorrelated residuals. The standard error of the mean uses batch means.
    """
    spec = InarSpec(a0=[1.0], coefficients=[[[0.25]], [[0.25]]])
    x = simulate_inar(spec, n, _root(seed))
    expected = float(spec.stationary_mean()[0])

    series = x[:, 0].astype(float)
    batch_means = series[: n - n % batches].reshape(batches, -1).mean(axis=1)
    residuals = inar_residuals(spec, x)[:, 0]
    squared = (residuals - residuals.mean()) ** 2

    return InarIdentityStudy(
        n=n,
        expected_mean=expected,
        sample_mean=float(series.mean()),
        mean_standard_error=float(batch_means.std(ddof=1) / math.sqrt(batches)),
        expected_residual_variance=expected,
        residual_variance=float(squared.mean()),
        variance_standard_error=float(squared.std(ddof=1) / math.sqrt(squared.size)),
        residual_autocorrelation=acf(residuals, nlags=5, fft=True)[1:],
        autocorrelation_bound=4.0 / math.sqrt(residuals.size),
    )
