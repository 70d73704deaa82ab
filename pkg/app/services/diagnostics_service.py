"""
Time-change diagnostics service.

Transforms the interarrival times of every component through the integrated
conditional intensity of a model, then tests the transformed times against Exp(1)
(Kolmogorov-Smirnov) and for serial dependence (Ljung-Box).

The intensity integral is computed three ways, picked from the model:

* compensator: all components non-negative with closed-form cumulatives, so the
  integral is a difference of compensator values;
* piecewise: all components piecewise constant, so the intensity is constant between
  shifted breakpoints and max(., 0) can be applied exactly;
* quadrature: adaptive quadrature of the clamped intensity otherwise.
"""

import logging
import math
from typing import Callable, List, Optional, Protocol, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate
from scipy.stats import expon, kstwobign, ks_1samp
from statsmodels.stats.diagnostic import acorr_ljungbox

from app.config import settings
from app.core.exceptions import InsufficientEventsException, InvalidParameterException
from app.schemas.diagnostics import (
    ChunkedKs,
    ComponentDiagnostics,
    DiagnosticsReport,
    IntegrationMethod,
)
from app.schemas.events import EventStream
from app.schemas.hawkes import ExcitementBase

logger = logging.getLogger(__name__)

# evaluation times handled per block when pairing them with past events
_PAIR_BLOCK = 256


class ExcitementModel(Protocol):
    """Anything exposing d x d excitement components (HawkesSpec, SmoothedExcitement)."""

    @property
    def d(self) -> int: ...

    @property
    def max_support(self) -> float: ...

    def component(self, i: int, j: int) -> ExcitementBase: ...


def _lagged_sum(
    source: np.ndarray,
    at: np.ndarray,
    support: float,
    func: Callable[[np.ndarray], np.ndarray],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    For every t in at: sum of func(t - T) over source events t - support <= T < t.

    Returns the sums and the number of source events strictly before t - support.
    """
    before = (
        np.searchsorted(source, at - support, side="left")
        if math.isfinite(support)
        else np.zeros(at.size, dtype=np.int64)
    )
    recent = np.searchsorted(source, at, side="left")
    sums = np.zeros(at.size)
    for start in range(0, at.size, _PAIR_BLOCK):
        stop = min(start + _PAIR_BLOCK, at.size)
        lo, hi = before[start:stop], recent[start:stop]
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            continue
        owner = np.repeat(np.arange(stop - start), counts)
        offsets = np.repeat(lo - (np.cumsum(counts) - counts), counts)
        index = np.arange(total) + offsets
        values = func(at[start:stop][owner] - source[index])
        sums[start:stop] = np.bincount(owner, weights=values, minlength=stop - start)
    return sums, before


def intensity(
    stream: EventStream, eta: np.ndarray, model: ExcitementModel, i: int, at: np.ndarray
) -> np.ndarray:
    """
    Unclamped conditional intensity of component i (0-based) at the given times.

    eta_i + sum_j sum_{T^(j) < t} h_{i,j}(t - T^(j)).
    """
    at = np.atleast_1d(np.asarray(at, dtype=float))
    total = np.full(at.size, float(eta[i]))
    for j in range(model.d):
        h = model.component(i, j)
        if h.support == 0:
            continue
        sums, _ = _lagged_sum(stream.times[j], at, h.support, h.evaluate)
        total += sums
    return total


def _compensator(
    stream: EventStream, eta: np.ndarray, model: ExcitementModel, i: int, at: np.ndarray
) -> np.ndarray:
    """Integral of the intensity of component i from t_start to each time in at."""
    total = float(eta[i]) * (at - stream.t_start)
    for j in range(model.d):
        h = model.component(i, j)
        if h.support == 0:
            continue
        sums, before = _lagged_sum(stream.times[j], at, h.support, h.cumulative)
        total += sums
        if math.isfinite(h.support):
            total += before * float(h.cumulative(h.support))
    return total


def _piecewise_compensator(
    stream: EventStream, eta: np.ndarray, model: ExcitementModel, i: int, at: np.ndarray
) -> np.ndarray:
    """
    Exact integral of max(intensity, 0) from the first time in at, for piecewise
    constant components.
    """
    knots = [at]
    for j in range(model.d):
        h = model.component(i, j)
        if h.support == 0:
            continue
        shifted = stream.times[j][:, None] + h.breakpoints()[None, :]
        knots.append(shifted.ravel())
    knots = np.unique(np.concatenate(knots))
    knots = knots[(knots >= at.min()) & (knots <= at.max())]
    if knots.size < 2:
        return np.zeros(at.size)

    midpoints = 0.5 * (knots[:-1] + knots[1:])
    levels = np.maximum(intensity(stream, eta, model, i, midpoints), 0.0)
    areas = np.concatenate([[0.0], np.cumsum(levels * np.diff(knots))])
    return np.interp(at, knots, areas)


def _quadrature_residuals(
    stream: EventStream,
    eta: np.ndarray,
    model: ExcitementModel,
    i: int,
    kept: np.ndarray,
    abs_tol: float,
) -> np.ndarray:
    def clamped(t: float) -> float:
        return max(float(intensity(stream, eta, model, i, np.array([t]))[0]), 0.0)

    residuals = np.empty(kept.size - 1)
    for k, (a, b) in enumerate(zip(kept[:-1], kept[1:])):
        inside = np.concatenate([times[(times > a) & (times < b)] for times in stream.times])
        points = np.unique(inside)[:50] if inside.size else None
        residuals[k] = integrate.quad(clamped, a, b, epsabs=abs_tol, points=points, limit=200)[0]
    return residuals


def integration_method(eta: np.ndarray, model: ExcitementModel) -> IntegrationMethod:
    """Exact compensator, exact piecewise integral, or adaptive quadrature."""
    components = [model.component(i, j) for i in range(model.d) for j in range(model.d)]
    if np.all(np.asarray(eta) >= 0) and all(h.nonnegative and h.closed_form for h in components):
        return "compensator"
    if all(h.piecewise_constant for h in components):
        return "piecewise"
    return "quadrature"


def default_burn_in(model: ExcitementModel) -> float:
    """One excitement support of history; 0 for untruncated models."""
    support = model.max_support
    if not math.isfinite(support):
        logger.warning("Model has unbounded support; no events discarded as burn-in")
        return 0.0
    return float(support)


def time_change_residuals(
    stream: EventStream,
    eta: Sequence[float],
    model: ExcitementModel,
    burn_in: Optional[float] = None,
    abs_tol: Optional[float] = None,
    workers: Optional[int] = None,
) -> List[np.ndarray]:
    """
    Integrated intensity between consecutive events of every component.

    Under the correct model the residuals are i.i.d. Exp(1). Events at or before
    t_start + burn_in serve as history only.

    Args:
        stream: Observed events
        eta: Baseline vector
        model: HawkesSpec or SmoothedExcitement
        burn_in: Discarded prefix (default: the model's largest support)
        abs_tol: Absolute tolerance of the quadrature path (default DIAGNOSTICS_ABS_TOL)
        workers: Components processed in parallel (default WORKERS)

    Returns:
        One residual array per component, of length (events after burn-in) - 1

    Raises:
        InsufficientEventsException: If a component keeps fewer than 2 events
    """
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (model.d,) or model.d != stream.d:
        raise InvalidParameterException(
            message="Stream, baseline and model dimensions differ",
            details={"stream": stream.d, "eta": list(eta.shape), "model": model.d},
        )
    burn_in = default_burn_in(model) if burn_in is None else burn_in
    abs_tol = settings.DIAGNOSTICS_ABS_TOL if abs_tol is None else abs_tol
    workers = settings.WORKERS if workers is None else workers
    method = integration_method(eta, model)

    def component_residuals(i: int) -> np.ndarray:
        times = stream.times[i]
        kept = times[times > stream.t_start + burn_in]
        if kept.size < 2:
            raise InsufficientEventsException(
                message="Too few events after burn-in",
                details={"component": i + 1, "events": int(kept.size), "burn_in": burn_in},
            )
        if method == "quadrature":
            return _quadrature_residuals(stream, eta, model, i, kept, abs_tol)
        compensator = _compensator if method == "compensator" else _piecewise_compensator
        return np.maximum(np.diff(compensator(stream, eta, model, i, kept)), 0.0)

    residuals = Parallel(n_jobs=workers, prefer="threads")(
        delayed(component_residuals)(i) for i in range(model.d)
    )
    logger.debug(f"Time-change residuals by {method}: {[r.size for r in residuals]}")
    return residuals


def _as_sample(residuals: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    sample = np.asarray(residuals, dtype=float).ravel()
    if sample.size == 0:
        raise InsufficientEventsException(message="No residuals to test")
    return sample


def ks_exp1(residuals: Union[Sequence[float], np.ndarray]) -> Tuple[float, float]:
    """
    One-sample KS statistic against Exp(1) and its asymptotic Kolmogorov p-value.

    Returns:
        (D, p-value) with p-value = P(K > D sqrt(m))
    """
    sample = _as_sample(residuals)
    statistic = float(ks_1samp(sample, expon.cdf).statistic)
    p_value = float(kstwobign.sf(statistic * math.sqrt(sample.size)))
    return statistic, p_value


def serial_independence(
    residuals: Union[Sequence[float], np.ndarray], lags: Optional[int] = None
) -> Tuple[float, float]:
    """
    Ljung-Box portmanteau test over the given number of lags.

    Raises:
        InsufficientEventsException: If there are not more residuals than lags, or they
            are constant
    """
    lags = settings.DIAGNOSTICS_LAGS if lags is None else lags
    if lags < 1:
        raise InvalidParameterException(message="lags must be at least 1", details={"lags": lags})
    sample = _as_sample(residuals)
    if sample.size <= lags:
        raise InsufficientEventsException(
            message="Need more residuals than lags",
            details={"residuals": sample.size, "lags": lags}
        )
    if np.ptp(sample) == 0:
        raise InsufficientEventsException(message="Constant residuals have no autocorrelation")
    table = acorr_ljungbox(sample, lags=[lags], return_df=True)
    return float(table["lb_stat"].iloc[-1]), float(table["lb_pvalue"].iloc[-1])


def qq_pairs(residuals: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """(theoretical, empirical) pairs with Exp(1) quantiles at (i - 0.5) / m."""
    sample = np.sort(_as_sample(residuals))
    m = sample.size
    theoretical = expon.ppf((np.arange(1, m + 1) - 0.5) / m)
    return np.column_stack([theoretical, sample])


def chunked_ks(
    residuals: Union[Sequence[float], np.ndarray], chunk: Optional[int] = None
) -> ChunkedKs:
    """KS p-values of consecutive chunks of the given size; a shorter tail is left out."""
    chunk = settings.DIAGNOSTICS_CHUNK if chunk is None else chunk
    if chunk < 1:
        raise InvalidParameterException(
            message="chunk must be at least 1", details={"chunk": chunk}
        )
    sample = _as_sample(residuals)
    blocks = sample.size // chunk
    if blocks == 0:
        raise InsufficientEventsException(
            message="Fewer residuals than one chunk",
            details={"residuals": sample.size, "chunk": chunk}
        )
    p_values = np.array(
        [ks_exp1(sample[k * chunk : (k + 1) * chunk])[1] for k in range(blocks)]
    )
    return ChunkedKs(
        chunk=chunk,
        p_values=p_values,
        median_p_value=float(np.median(p_values)),
        rejected_fraction=float(np.mean(p_values < 0.05)),
    )


def diagnose(
    stream: EventStream,
    eta: Sequence[float],
    model: ExcitementModel,
    lags: Optional[int] = None,
    burn_in: Optional[float] = None,
    chunk: Optional[int] = None,
    workers: Optional[int] = None,
) -> DiagnosticsReport:
    """
    Full per-component report: residuals, KS, Ljung-Box, QQ pairs, optional chunk KS.

    Ljung-Box is left empty for components with too few or constant residuals; KS
    failures propagate.
    """
    lags = settings.DIAGNOSTICS_LAGS if lags is None else lags
    burn_in = default_burn_in(model) if burn_in is None else burn_in
    eta = np.asarray(eta, dtype=float)
    all_residuals = time_change_residuals(stream, eta, model, burn_in=burn_in, workers=workers)

    components = []
    for i, residuals in enumerate(all_residuals):
        statistic, p_value = ks_exp1(residuals)
        try:
            lb_statistic, lb_p_value = serial_independence(residuals, lags)
        except InsufficientEventsException as exc:
            logger.warning(f"Ljung-Box skipped for component {i + 1}: {exc.message}")
            lb_statistic = lb_p_value = None
        chunked = None
        if chunk is not None:
            try:
                chunked = chunked_ks(residuals, chunk)
            except InsufficientEventsException as exc:
                logger.warning(f"Chunked KS skipped for component {i + 1}: {exc.message}")
        components.append(
            ComponentDiagnostics(
                component=i + 1,
                events_used=residuals.size + 1,
                residuals=residuals,
                ks_statistic=statistic,
                ks_p_value=p_value,
                ljung_box_statistic=lb_statistic,
                ljung_box_p_value=lb_p_value,
                qq=qq_pairs(residuals),
                chunked=chunked,
            )
        )
        logger.info(
            f"Component {i + 1}: {residuals.size} residuals, KS D={statistic:.4f} p={p_value:.4f}"
        )

    return DiagnosticsReport(
        method=integration_method(eta, model),
        burn_in=burn_in,
        lags=lags,
        components=components,
    )
