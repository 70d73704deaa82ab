"""
Output artifacts of a command-line run.

Every run writes into one directory: JSON documents through pydantic, CSV tables
through pandas (floats in shortest round-trip form) and a manifest holding the
resolved configuration, package versions and checksums of inputs and outputs. Nothing
time-dependent is recorded, so identical runs produce identical directories.
"""

import hashlib
import json
import logging
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd
from pydantic import BaseModel

from app import __version__
from app.config import settings
from app.schemas.run_config import RunConfig

logger = logging.getLogger(__name__)

_PACKAGES = ("numpy", "scipy", "pandas", "statsmodels", "pydantic", "joblib")


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def package_versions() -> Dict[str, str]:
    versions = {settings.APP_NAME: __version__}
    for name in _PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


class ArtifactWriter:
    """Writes the files of one run and remembers them for the manifest."""

    MANIFEST = "manifest.json"

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def _path(self, name: str) -> Path:
        self.written.append(name)
        return self.output_dir / name

    def write_model(self, name: str, model: BaseModel) -> Path:
        path = self._path(name)
        path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_json(self, name: str, document: Any) -> Path:
        path = self._path(name)
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_table(self, name: str, table: pd.DataFrame) -> Path:
        path = self._path(name)
        table.to_csv(path, index=False, lineterminator="\n")
        logger.info(f"Wrote {path}")
        return path

    def write_manifest(self, config: RunConfig) -> Path:
        """Resolved config, versions and checksums of every input and output."""
        inputs = {
            role: {"path": location, "sha256": sha256_file(location)}
            for role, location in sorted(config.inputs.items())
        }
        outputs = {name: sha256_file(self.output_dir / name) for name in sorted(set(self.written))}
        manifest = {
            "config": config.model_dump(mode="json"),
            "environment": settings.APP_ENV,
            "versions": package_versions(),
            "inputs": inputs,
            "outputs": outputs,
        }
        path = self.output_dir / self.MANIFEST
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path
