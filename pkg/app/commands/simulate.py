"""
`simulate`: draw an event stream from a Hawkes spec.
"""

import argparse
import logging

from app.commands.common import add_output_argument, finish, load_document
from app.config import settings
from app.core.artifacts import ArtifactWriter
from app.core.random_source import RandomSource
from app.schemas.hawkes import HawkesSpec
from app.schemas.run_config import RunConfig
from app.services.event_service import events_frame
from app.services.hawkes_model_service import require_stable
from app.services.simulation_service import simulate_hawkes_with_genealogy

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="Simulate a Hawkes process from a spec")
    parser.add_argument("--spec", required=True, help="HawkesSpec JSON")
    parser.add_argument("--T", dest="horizon", type=float, required=True, help="Window length")
    parser.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    parser.add_argument("--algorithm", default=settings.RNG_ALGORITHM, help="numpy bit generator")
    parser.add_argument("--burn-in", type=float, default=None, help="Discarded prefix (seconds)")
    add_output_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = RunConfig(
        command="simulate",
        inputs={"spec": args.spec},
        output_dir=args.out,
        horizon=args.horizon,
        burn_in=args.burn_in,
        seed=args.seed,
        algorithm=args.algorithm,
    )
    spec = load_document(args.spec, HawkesSpec)
    branching = require_stable(spec)
    source = RandomSource(seed=args.seed, algorithm=args.algorithm)

    stream, genealogy = simulate_hawkes_with_genealogy(spec, args.horizon, source, args.burn_in)

    writer = ArtifactWriter(config.output_dir)
    writer.write_table("events.csv", events_frame(stream))
    writer.write_json(
        "simulation.json",
        {
            "spec": spec.model_dump(mode="json"),
            "seed": args.seed,
            "algorithm": args.algorithm,
            "horizon": args.horizon,
            "burn_in": args.burn_in,
            "branching_matrix": branching.matrix.tolist(),
            "spectral_radius": branching.spectral_radius,
            "events": list(stream.counts),
        },
    )
    writer.write_model("genealogy.json", genealogy)
    return finish(writer, config)
