"""
`replicate`: Monte-Carlo studies.
"""

import argparse
import logging
from typing import Any, Callable, Dict

from app.commands.common import add_output_argument, add_workers_argument, finish
from app.config import settings
from app.core.artifacts import ArtifactWriter
from app.schemas.run_config import RunConfig
from app.services import experiment_service

logger = logging.getLogger(__name__)

STUDIES: Dict[str, Callable[..., Any]] = {
    "coverage": experiment_service.coverage_study,
    "variance-scaling": experiment_service.variance_scaling_study,
    "bias": experiment_service.bias_study,
    "support": experiment_service.support_study,
    "truncation": experiment_service.truncation_discrimination_study,
    "diagnostics": experiment_service.diagnostics_study,
    "inar": experiment_service.inar_identity_study,
}

# studies that take a replication count and a worker count
_REPLICATED = {"coverage", "bias", "support", "truncation", "diagnostics"}


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("replicate", help="Run a Monte-Carlo study")
    parser.add_argument("--study", required=True, choices=sorted(STUDIES))
    parser.add_argument("--replications", type=int, default=None)
    parser.add_argument("--T", dest="horizon", type=float, default=None, help="Window length")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    add_workers_argument(parser)
    add_output_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="replicate",
        output_dir=args.out,
        study=args.study,
        replications=args.replications,
        horizon=args.horizon,
        seed=args.seed,
        workers=args.workers,
    )
    kwargs: Dict[str, Any] = {"seed": config.seed}
    if config.study in _REPLICATED:
        kwargs["workers"] = config.workers
        if config.replications is not None:
            kwargs["replications"] = config.replications
    elif config.replications is not None:
        logger.warning(f"--replications is ignored by the {config.study} study")
    if config.horizon is not None:
        if config.study == "inar":
            kwargs["n"] = int(config.horizon)
        else:
            kwargs["horizon"] = config.horizon

    logger.info(f"Running {config.study} study with {kwargs}")
    result = STUDIES[config.study](**kwargs)

    writer = ArtifactWriter(config.output_dir)
    writer.write_model(f"{config.study}.json", result)
    return finish(writer, config)
