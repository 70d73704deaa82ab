"""
`select-support` and `select-binsize`: tuning-parameter scans.
"""

import argparse
import logging

import numpy as np
import pandas as pd

from app.commands.common import (
    add_events_arguments,
    add_output_argument,
    add_workers_argument,
    finish,
    float_list,
    load_events,
)
from app.commands.fit import scan_table
from app.core.artifacts import ArtifactWriter
from app.core.exceptions import SelectionFailedException
from app.schemas.run_config import RunConfig
from app.schemas.selection import BinSizeScan
from app.services.event_service import bin_counts, preliminary_bin_size
from app.services.selection_service import select_bin_size, select_support

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    support = subparsers.add_parser("select-support", help="AIC scan over the support")
    add_events_arguments(support)
    support.add_argument(
        "--delta0", type=float, default=None, help="Preliminary bin size (default: ~1 event/bin)"
    )
    support.add_argument("--s-max", type=float, required=True, help="Largest support scanned")
    add_workers_argument(support)
    add_output_argument(support)
    support.set_defaults(handler=run_support)

    binsize = subparsers.add_parser("select-binsize", help="Baseline stabilization scan")
    add_events_arguments(binsize)
    binsize.add_argument("--s", dest="support", type=float, required=True, help="Support s")
    binsize.add_argument(
        "--deltas", type=float_list, required=True, help="Decreasing bin sizes, comma separated"
    )
    binsize.add_argument("--level", type=float, default=None, help="Confidence level")
    add_workers_argument(binsize)
    add_output_argument(binsize)
    binsize.set_defaults(handler=run_binsize)


def run_support(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="select-support",
        inputs={"events": args.events},
        output_dir=args.out,
        delta0=args.delta0,
        s_max=args.s_max,
        dimension=args.d,
        dedupe=args.dedupe,
        workers=args.workers,
    )
    stream = load_events(args)
    delta0 = config.delta0 or preliminary_bin_size(stream)
    writer = ArtifactWriter(config.output_dir)
    try:
        scan = select_support(bin_counts(stream, delta0), delta0, config.s_max, config.workers)
    except SelectionFailedException as exc:
        candidates = np.asarray(exc.details["candidates"])
        writer.write_table(
            "support_scan.csv",
            pd.DataFrame({"p": candidates, "s": candidates * delta0, "aic": exc.details["aic"]}),
        )
        writer.write_manifest(config.model_copy(update={"delta0": delta0}))
        raise

    writer.write_table("support_scan.csv", scan_table(scan))
    writer.write_json(
        "support_selection.json",
        {"delta0": delta0, "p_hat": scan.p_hat, "s_hat": scan.s_hat, "excluded": scan.degenerate},
    )
    return finish(writer, config.model_copy(update={"delta0": delta0}))


def binsize_table(scan: BinSizeScan) -> pd.DataFrame:
    rows = []
    for candidate in scan.candidates:
        for i, (eta, half) in enumerate(zip(candidate.eta_hat, candidate.half_width), start=1):
            rows.append(
                {
                    "delta": candidate.delta,
                    "i": i,
                    "eta_hat": eta,
                    "half_width": half,
                    "ci_low": eta - half,
                    "ci_high": eta + half,
                }
            )
    return pd.DataFrame(rows)


def run_binsize(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="select-binsize",
        inputs={"events": args.events},
        output_dir=args.out,
        support=args.support,
        deltas=args.deltas,
        level=args.level,
        dimension=args.d,
        dedupe=args.dedupe,
        workers=args.workers,
    )
    stream = load_events(args)
    scan = select_bin_size(stream, config.support, config.deltas, config.workers, config.level)

    writer = ArtifactWriter(config.output_dir)
    writer.write_table("binsize_scan.csv", binsize_table(scan))
    writer.write_model("binsize_selection.json", scan)
    return finish(writer, config)
