"""
`fit` and `smooth`: the Hawkes estimator and its smoothed curves.
"""

import argparse
import logging

import numpy as np
import pandas as pd

from app.commands.common import (
    add_events_arguments,
    add_output_argument,
    finish,
    load_document,
    load_events,
)
from app.config import settings
from app.core.artifacts import ArtifactWriter
from app.core.exceptions import InvalidParameterException
from app.schemas.fit import HawkesFit
from app.schemas.run_config import RunConfig
from app.schemas.selection import AicScan
from app.services.cls_service import fit_to_grid_rows, hawkes_estimator
from app.services.event_service import bin_counts
from app.services.hawkes_model_service import branching_from_fit
from app.services.selection_service import select_support
from app.services.smoothing_service import box_smooth, smoothed_rows

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("fit", help="Estimate excitement and baseline from events")
    add_events_arguments(parser)
    parser.add_argument("--delta", type=float, required=True, help="Bin width")
    parser.add_argument("--s", dest="support", type=float, default=None, help="Support s")
    parser.add_argument(
        "--s-max", type=float, default=None, help="Select s by AIC up to this bound instead"
    )
    parser.add_argument("--level", type=float, default=None, help="Confidence level")
    parser.add_argument("--sparse", action="store_true", help="Sparse design matrix")
    parser.add_argument("--emit-smoothed", action="store_true", help="Also write smoothed curves")
    parser.add_argument("--tau", type=float, default=None, help="Box smoother window")
    add_output_argument(parser)
    parser.set_defaults(handler=run)

    smooth = subparsers.add_parser("smooth", help="Box-smooth a fitted excitement")
    smooth.add_argument("--fit", required=True, help="HawkesFit JSON")
    smooth.add_argument("--tau", type=float, required=True, help="Window width")
    smooth.add_argument("--step", type=float, default=None, help="Evaluation grid step")
    add_output_argument(smooth)
    smooth.set_defaults(handler=run_smooth)


def scan_table(scan: AicScan) -> pd.DataFrame:
    return pd.DataFrame(
        {"p": scan.candidates, "s": scan.candidates * scan.delta0, "aic": scan.aic}
    )


def run(args: argparse.Namespace) -> int:
    if (args.support is None) == (args.s_max is None):
        raise InvalidParameterException(message="Give exactly one of --s and --s-max")
    config = RunConfig(
        command="fit",
        inputs={"events": args.events},
        output_dir=args.out,
        delta=args.delta,
        support=args.support,
        s_max=args.s_max,
        level=args.level,
        sparse=args.sparse,
        emit_smoothed=args.emit_smoothed,
        tau=args.tau,
        dimension=args.d,
        dedupe=args.dedupe,
    )
    stream = load_events(args)
    bc = bin_counts(stream, config.delta)
    writer = ArtifactWriter(config.output_dir)

    support = config.support
    if support is None:
        scan = select_support(bc, config.delta, config.s_max)
        writer.write_table("support_scan.csv", scan_table(scan))
        support = scan.s_hat

    fit = hawkes_estimator(bc, support, sparse=config.sparse)
    level = settings.CI_LEVEL if config.level is None else config.level
    branching = branching_from_fit(fit, level)

    writer.write_model("fit.json", fit)
    writer.write_table("estimates.csv", fit_to_grid_rows(fit, level))
    writer.write_json(
        "branching.json",
        {
            "matrix": branching.matrix.tolist(),
            "half_width": branching.half_width.tolist(),
            "level": branching.level,
            "spectral_radius": branching.spectral_radius,
            "formatted": branching.formatted(),
            "eta_hat": fit.eta_hat.tolist(),
        },
    )
    if config.emit_smoothed:
        writer.write_table("smoothed.csv", smoothed_rows(box_smooth(fit, config.tau)))
    logger.info(
        f"K_hat spectral radius {branching.spectral_radius:.4f}; "
        f"branching {np.round(branching.matrix, 4).tolist()}"
    )
    return finish(writer, config)


def run_smooth(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="smooth", inputs={"fit": args.fit}, output_dir=args.out, tau=args.tau
    )
    fit = load_document(args.fit, HawkesFit)
    smoothed = box_smooth(fit, config.tau)
    grid = None
    if args.step is not None:
        if not args.step > 0:
            raise InvalidParameterException(message="--step must be positive")
        grid = np.arange(0.0, fit.support + 0.5 * args.step, args.step)
    writer = ArtifactWriter(config.output_dir)
    writer.write_table("smoothed.csv", smoothed_rows(smoothed, grid))
    return finish(writer, config)
