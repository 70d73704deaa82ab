"""
Event-stream service layer.

Deduplication, the bin-count transformation that feeds every estimator, and CSV
ingestion of `component_index,timestamp` rows.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from app.core.exceptions import (
    InputFormatException,
    InvalidParameterException,
    WindowTooShortException,
)
from app.schemas.events import BinCountSequence, DedupeResult, EventStream

logger = logging.getLogger(__name__)

# Bin edges are matched at this many decimals of a bin width so that millisecond data
# at e.g. delta = 0.01 does not slip into the neighbouring bin through rounding noise.
_EDGE_DECIMALS = 9


def dedupe(stream: EventStream) -> DedupeResult:
    """
    Collapse consecutive equal timestamps per component.

    Args:
        stream: Event stream

    Returns:
        Deduplicated stream and the number of removed timestamps per component
    """
    kept = []
    removed = []
    for component in stream.times:
        if component.size == 0:
            kept.append(component)
            removed.append(0)
            continue
        keep = np.concatenate([[True], np.diff(component) != 0])
        kept.append(component[keep])
        removed.append(int(component.size - keep.sum()))

    if any(removed):
        logger.info(f"Removed duplicate timestamps per component: {removed}")

    return DedupeResult(
        stream=EventStream(times=tuple(kept), t_start=stream.t_start, t_end=stream.t_end),
        removed=tuple(removed),
    )


def bin_count_total(length: float, delta: float) -> int:
    """n = floor(T / delta) with edge rounding."""
    return int(np.floor(np.round(length / delta, _EDGE_DECIMALS)))


def bin_counts(stream: EventStream, delta: float) -> BinCountSequence:
    """
    Count events per right-closed bin (t_start + (k-1)delta, t_start + k delta].

    Args:
        stream: Event stream
        delta: Bin width

    Returns:
        n = floor(T / delta) count vectors; tail events beyond n * delta are dropped
        and reported per component

    Raises:
        InvalidParameterException: If delta is not positive
        WindowTooShortException: If the window is shorter than one bin
    """
    if not delta > 0:
        raise InvalidParameterException(
            message="Bin width must be positive", details={"delta": delta}
        )
    if stream.length < delta:
        raise WindowTooShortException(
            message="Observation window is shorter than one bin",
            details={"window": stream.length, "delta": delta},
        )

    n = bin_count_total(stream.length, delta)
    counts = np.zeros((n, stream.d), dtype=np.int64)
    dropped = []
    for i, component in enumerate(stream.times):
        ratio = np.round((component - stream.t_start) / delta, _EDGE_DECIMALS)
        index = np.maximum(np.ceil(ratio).astype(np.int64), 1)
        inside = index <= n
        counts[:, i] = np.bincount(index[inside] - 1, minlength=n)[:n]
        dropped.append(int((~inside).sum()))

    if any(dropped):
        logger.warning(f"Dropped tail events beyond {n} bins of width {delta}: {dropped}")

    return BinCountSequence(
        delta=delta, counts=counts, t_start=stream.t_start, dropped_tail=tuple(dropped)
    )


def preliminary_bin_size(stream: EventStream) -> float:
    """
    Bin width giving about one event per bin and component.

    Args:
        stream: Event stream

    Returns:
        Window length divided by the mean number of events per component
    """
    mean_events = sum(stream.counts) / stream.d
    if mean_events < 1:
        raise InvalidParameterException(message="Stream holds no events")
    return stream.length / mean_events


def read_events_csv(
    path: Union[str, Path],
    d: Optional[int] = None,
    t_start: Optional[float] = None,
    t_end: Optional[float] = None,
) -> EventStream:
    """
    Read `component_index,timestamp` rows (1-based components, optional header).

    Args:
        path: CSV file
        d: Number of components; defaults to the largest index present
        t_start: Window start; defaults to 0
        t_end: Window end; defaults to the largest timestamp

    Returns:
        Event stream with sorted timestamps per component

    Raises:
        InputFormatException: If rows cannot be parsed or indices are invalid
    """
    try:
        frame = pd.read_csv(
            path,
            header=0 if _has_header(path) else None,
            comment="#",
            skipinitialspace=True,
            float_precision="round_trip",
        )
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=[0, 1])
    except pd.errors.ParserError as e:
        raise InputFormatException(
            message=f"Cannot parse events file: {e}", details={"path": str(path)}
        )

    if frame.shape[1] != 2:
        raise InputFormatException(
            message="Events file must have exactly two columns", details={"path": str(path)}
        )

    try:
        components = pd.to_numeric(frame.iloc[:, 0]).to_numpy()
        timestamps = pd.to_numeric(frame.iloc[:, 1]).to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise InputFormatException(
            message=f"Non-numeric value in events file: {e}", details={"path": str(path)}
        )

    if components.size and (
        np.any(np.mod(components, 1) != 0) or components.min() < 1
    ):
        raise InputFormatException(message="Component indices must be integers >= 1")
    components = components.astype(np.int64)

    d = d or (int(components.max()) if components.size else 1)
    if components.size and components.max() > d:
        raise InputFormatException(
            message="Component index exceeds the declared dimension",
            details={"d": d, "max_index": int(components.max())},
        )

    t_start = 0.0 if t_start is None else t_start
    if t_end is None:
        t_end = float(timestamps.max()) if timestamps.size else t_start + 1.0

    times = tuple(np.sort(timestamps[components == i]) for i in range(1, d + 1))
    try:
        stream = EventStream(times=times, t_start=t_start, t_end=t_end)
    except ValueError as e:
        raise InputFormatException(
            message=f"Invalid event stream: {e}", details={"path": str(path)}
        )

    logger.info(f"Read {sum(stream.counts)} events in {d} components from {path}")
    return stream


def events_frame(stream: EventStream) -> pd.DataFrame:
    """`component_index,timestamp` rows sorted by time, ties by component."""
    components = np.concatenate(
        [np.full(component.size, i, dtype=np.int64) for i, component in enumerate(stream.times, 1)]
    )
    timestamps = np.concatenate(stream.times)
    order = np.lexsort((components, timestamps))
    frame = pd.DataFrame({"component_index": components[order], "timestamp": timestamps[order]})
    return frame


def write_events_csv(stream: EventStream, path: Union[str, Path]) -> None:
    events_frame(stream).to_csv(path, index=False, lineterminator="\n")


def _has_header(path: Union[str, Path]) -> bool:
    """True when the first data line carries a non-numeric timestamp field."""
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            fields = line.split("#", 1)[0].strip().split(",")
            if fields != [""]:
                return not _is_number(fields[-1])
    return False


def _is_number(value) -> bool:
    try:
        float(value)
    except (TypeError, ValueError):
        return False
    return True
