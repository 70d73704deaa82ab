"""
Helpers shared by the command modules: argument groups, input loading and the
config/manifest bookkeeping every run goes through.
"""

import argparse
import logging
from pathlib import Path
from typing import List, Type, TypeVar

from pydantic import BaseModel, ValidationError

from app.config import settings
from app.core.artifacts import ArtifactWriter
from app.core.exceptions import InputFormatException
from app.schemas.events import EventStream
from app.schemas.run_config import RunConfig
from app.services.event_service import dedupe, read_events_csv

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)


def float_list(value: str) -> List[float]:
    """Comma separated floats, e.g. '0.5,0.1,0.05'."""
    items = [item for item in value.split(",") if item.strip()]
    try:
        return [float(item) for item in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {value!r}")


def add_output_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out", default=settings.OUTPUT_DIR, help="Output directory (default: %(default)s)"
    )


def add_events_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--events", required=True, help="Events CSV (component_index,timestamp)")
    parser.add_argument("--d", type=int, default=None, help="Number of components")
    parser.add_argument("--t-start", type=float, default=None, help="Window start (default 0)")
    parser.add_argument(
        "--t-end", type=float, default=None, help="Window end (default: last event)"
    )
    parser.add_argument("--dedupe", action="store_true", help="Collapse repeated timestamps")


def add_workers_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workers",
        type=int,
        default=settings.WORKERS,
        help="Parallel workers (default: %(default)s)",
    )


def load_events(args: argparse.Namespace) -> EventStream:
    stream = read_events_csv(args.events, d=args.d, t_start=args.t_start, t_end=args.t_end)
    if args.dedupe:
        stream = dedupe(stream).stream
    return stream


def load_document(path: str, model: Type[ModelT]) -> ModelT:
    """Parse a JSON document; malformed content is an input error."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        raise InputFormatException(
            message=f"Malformed {model.__name__} document: {first['msg']}",
            details={"path": path, "location": list(first["loc"]), "errors": e.error_count()},
        )


def finish(writer: ArtifactWriter, config: RunConfig) -> int:
    writer.write_manifest(config)
    logger.info(f"{config.command} finished; artifacts in {writer.output_dir}")
    return 0
