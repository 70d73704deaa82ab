"""
Simulation service layer.

Seeded generators for multivariate INAR(p) sequences and multivariate Hawkes
processes. The Hawkes generator uses the cluster (immigrant/offspring)
representation: immigrants are homogeneous Poisson, and every event spawns an
inhomogeneous Poisson process of direct offspring per target component, drawn by
thinning against the maximum of the excitement on its support.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from app.config import settings
from app.core.exceptions import InvalidParameterException, RejectedSpecException
from app.core.random_source import RandomLike, as_generator, spawn_generators
from app.schemas.events import EventStream
from app.schemas.hawkes import HawkesSpec, InarSpec
from app.schemas.simulation import Genealogy
from app.services.hawkes_model_service import require_stable, spectral_radius

logger = logging.getLogger(__name__)


def thin(alpha: float, y: int, rng: RandomLike) -> int:
    """
    One draw of the thinning alpha o Y = sum_{k=1}^{Y} xi_k, xi_k ~ Poisson(alpha).

    The sum of y independent Poisson(alpha) variables is drawn directly as
    Poisson(alpha * y); the empty sum (y = 0) is 0.

    Args:
        alpha: Thinning coefficient >= 0
        y: Count >= 0
        rng: Random source or generator

    Returns:
        Non-negative integer draw
    """
    if alpha < 0 or y < 0:
        raise InvalidParameterException(
            message="Thinning needs alpha >= 0 and y >= 0", details={"alpha": alpha, "y": y}
        )
    if y == 0 or alpha == 0:
        return 0
    return int(as_generator(rng).poisson(alpha * y))


def require_stable_inar(spec: InarSpec, tol: Optional[float] = None) -> float:
    """
    Spectral radius of sum A_k, which must lie below 1 - tol.

    Raises:
        RejectedSpecException: If the INAR spec is not stable
    """
    tol = settings.STABILITY_TOL if tol is None else tol
    radius = spectral_radius(spec.coefficient_sum)
    if not radius < 1.0 - tol:
        raise RejectedSpecException(
            message="INAR spec is not stable: spectral radius of sum A_k must be below 1",
            details={"spectral_radius": radius},
        )
    return radius


def simulate_inar(
    spec: InarSpec,
    n: int,
    rng: RandomLike,
    burn_in: Optional[int] = None,
) -> np.ndarray:
    """
    Simulate X_n = sum_k A_k (*) X_{n-k} + eps_n with Poisson(a0) innovations.

    Given the past, component i of sum_k A_k (*) X_{n-k} is a sum of independent
    Poisson thinnings, hence Poisson((sum_k A_k X_{n-k})_i); together with the
    innovation it is drawn as a single Poisson variable.

    Args:
        spec: Stable INAR(p) spec
        n: Number of returned steps
        rng: Random source or generator
        burn_in: Discarded steps after the zero presample (default 10 * p)

    Returns:
        Integer array of shape (n, d)

    Raises:
        RejectedSpecException: If the spec is not stable
    """
    if n < 1:
        raise InvalidParameterException(message="n must be at least 1", details={"n": n})
    require_stable_inar(spec)
    burn_in = settings.INAR_BURN_IN_FACTOR * spec.p if burn_in is None else burn_in
    if burn_in < 0:
        raise InvalidParameterException(
            message="burn_in must be >= 0", details={"burn_in": burn_in}
        )

    generator = as_generator(rng)
    p, d = spec.p, spec.d
    A = np.stack(spec.coefficients)
    total = burn_in + n
    x = np.zeros((total + p, d), dtype=np.int64)
    for t in range(p, total + p):
        rate = spec.a0 + np.einsum("kij,kj->i", A, x[t - p : t][::-1])
        x[t] = generator.poisson(rate)

    logger.debug(f"Simulated INAR({p}) with d={d}, n={n}, burn_in={burn_in}")
    return x[p + burn_in :]


def inar_residuals(spec: InarSpec, x: np.ndarray) -> np.ndarray:
    """
    u_n = X_n - a0 - sum_k A_k X_{n-k} for n = p+1..len(x).

    Returns:
        Float array of shape (len(x) - p, d)
    """
    x = np.asarray(x, dtype=float)
    p = spec.p
    predicted = np.tile(spec.a0, (x.shape[0] - p, 1))
    for k, A in enumerate(spec.coefficients, start=1):
        predicted += x[p - k : x.shape[0] - k] @ A.T
    return x[p:] - predicted


def simulate_hawkes_with_genealogy(
    spec: HawkesSpec,
    horizon: float,
    rng: RandomLike,
    burn_in: Optional[float] = None,
) -> Tuple[EventStream, Genealogy]:
    """
    Cluster simulation of a Hawkes process on (0, horizon].

    Generation starts empty at time 0; the first burn_in seconds are simulated and
    discarded, and the remaining events are shifted back onto (0, horizon].

    Args:
        spec: Stable Hawkes model with finite supports
        horizon: Window length T
        rng: Random source or generator
        burn_in: Discarded prefix (default HAWKES_BURN_IN_FACTOR * max support)

    Returns:
        Event stream and the aggregated branching record

    Raises:
        RejectedSpecException: If the model is unstable or has unbounded support
    """
    if not horizon > 0:
        raise InvalidParameterException(message="horizon must be positive", details={"T": horizon})
    require_stable(spec)
    if burn_in is None:
        burn_in = settings.HAWKES_BURN_IN_FACTOR * spec.max_support
    if burn_in < 0:
        raise InvalidParameterException(
            message="burn_in must be >= 0", details={"burn_in": burn_in}
        )

    d = spec.d
    end = burn_in + horizon
    streams = spawn_generators(rng, d + d * d)
    immigrant_streams, offspring_streams = streams[:d], streams[d:]

    bounds = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            h = spec.component(i, j)
            if h.support > 0:
                bounds[i, j] = h.max_value(settings.THINNING_GRID_POINTS) * settings.THINNING_SAFETY

    generation: List[np.ndarray] = []
    immigrants = np.zeros(d, dtype=np.int64)
    for i in range(d):
        count = immigrant_streams[i].poisson(spec.eta[i] * end)
        # uniform on (0, end]
        generation.append(end * (1.0 - immigrant_streams[i].random(count)))
        immigrants[i] = count

    collected: List[List[np.ndarray]] = [[times] for times in generation]
    offspring = np.zeros((d, d), dtype=np.int64)
    parents = np.zeros(d, dtype=np.int64)
    generations = 0

    while any(times.size for times in generation):
        generations += 1
        following: List[List[np.ndarray]] = [[] for _ in range(d)]
        for j in range(d):
            parent_times = generation[j]
            parents[j] += parent_times.size
            if parent_times.size == 0:
                continue
            for i in range(d):
                bound = bounds[i, j]
                if bound == 0:
                    continue
                h = spec.component(i, j)
                stream = offspring_streams[i * d + j]
                candidates = stream.poisson(bound * h.support, size=parent_times.size)
                lags = h.support * (1.0 - stream.random(candidates.sum()))
                accepted = stream.random(lags.size) * bound < h.evaluate(lags)
                owner = np.repeat(np.arange(parent_times.size), candidates)[accepted]
                offspring[i, j] += int(accepted.sum())
                births = parent_times[owner] + lags[accepted]
                following[i].append(births[births <= end])
        generation = [
            np.concatenate(parts) if parts else np.empty(0) for parts in following
        ]
        for i in range(d):
            collected[i].append(generation[i])

    times = []
    for parts in collected:
        events = np.sort(np.concatenate(parts))
        events = events[events > burn_in] - burn_in
        times.append(np.minimum(events, horizon))

    stream = EventStream(times=tuple(times), t_start=0.0, t_end=horizon)
    genealogy = Genealogy(
        offspring_totals=offspring,
        parent_totals=parents,
        immigrant_totals=immigrants,
        generations=generations,
    )
    logger.info(
        f"Simulated Hawkes process on (0, {horizon}] after burn-in {burn_in}: "
        f"{list(stream.counts)} events, {generations} generations"
    )
    return stream, genealogy


def simulate_hawkes(
    spec: HawkesSpec,
    horizon: float,
    rng: RandomLike,
    burn_in: Optional[float] = None,
) -> EventStream:
    """Cluster simulation of a Hawkes process; see simulate_hawkes_with_genealogy."""
    stream, _ = simulate_hawkes_with_genealogy(spec, horizon, rng, burn_in)
    return stream
