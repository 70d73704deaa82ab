"""
`diagnose`: time-change goodness-of-fit report for a fitted or a known model.
"""

import argparse
import logging

import pandas as pd

from app.commands.common import (
    add_events_arguments,
    add_output_argument,
    add_workers_argument,
    finish,
    load_document,
    load_events,
)
from app.config import settings
from app.core.artifacts import ArtifactWriter
from app.core.exceptions import InvalidParameterException
from app.schemas.diagnostics import DiagnosticsReport
from app.schemas.fit import HawkesFit
from app.schemas.hawkes import HawkesSpec
from app.schemas.run_config import RunConfig
from app.services.diagnostics_service import diagnose
from app.services.smoothing_service import box_smooth

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("diagnose", help="Time-change residual diagnostics")
    add_events_arguments(parser)
    model = parser.add_mutually_exclusive_group(required=True)
    model.add_argument("--fit", help="HawkesFit JSON (box-smoothed with --tau)")
    model.add_argument("--spec", help="HawkesSpec JSON of a known model")
    parser.add_argument("--tau", type=float, default=None, help="Smoother window (default: delta)")
    parser.add_argument("--lags", type=int, default=settings.DIAGNOSTICS_LAGS)
    parser.add_argument("--burn-in", type=float, default=None, help="History-only prefix")
    parser.add_argument(
        "--chunk", type=int, default=None, help="KS per chunk of this many residuals"
    )
    add_workers_argument(parser)
    add_output_argument(parser)
    parser.set_defaults(handler=run)


def qq_table(report: DiagnosticsReport) -> pd.DataFrame:
    frames = [
        pd.DataFrame(
            {
                "component": component.component,
                "theoretical": component.qq[:, 0],
                "empirical": component.qq[:, 1],
            }
        )
        for component in report.components
    ]
    return pd.concat(frames, ignore_index=True)


def chunk_table(report: DiagnosticsReport) -> pd.DataFrame:
    rows = [
        {"component": component.component, "chunk": index, "p_value": p_value}
        for component in report.components
        if component.chunked is not None
        for index, p_value in enumerate(component.chunked.p_values, start=1)
    ]
    return pd.DataFrame(rows, columns=["component", "chunk", "p_value"])


def run(args: argparse.Namespace) -> int:
    inputs = {"events": args.events}
    inputs.update({"fit": args.fit} if args.fit else {"spec": args.spec})
    config = RunConfig(
        command="diagnose",
        inputs=inputs,
        output_dir=args.out,
        tau=args.tau,
        lags=args.lags,
        burn_in=args.burn_in,
        chunk=args.chunk,
        dimension=args.d,
        dedupe=args.dedupe,
        workers=args.workers,
    )
    if args.spec and args.tau is not None:
        raise InvalidParameterException(message="--tau only applies to --fit")

    stream = load_events(args)
    if args.fit:
        fit = load_document(args.fit, HawkesFit)
        model = box_smooth(fit, config.tau or fit.delta)
        eta = fit.eta_hat
    else:
        model = load_document(args.spec, HawkesSpec)
        eta = model.eta

    report = diagnose(
        stream,
        eta,
        model,
        lags=config.lags,
        burn_in=config.burn_in,
        chunk=config.chunk,
        workers=config.workers,
    )

    writer = ArtifactWriter(config.output_dir)
    writer.write_model("diagnostics.json", report)
    writer.write_table("qq.csv", qq_table(report))
    if config.chunk is not None:
        writer.write_table("chunks.csv", chunk_table(report))
    return finish(writer, config)
