"""Run manifests and the write-once artifact writer."""

import contextlib
import hashlib
import logging
import typing
from collections import abc
from datetime import datetime, timezone
from pathlib import Path

from attrs import define, field

import labjson
from serial.utils import schema_tag

from clusterlab import __version__
from clusterlab.exceptions import LabException

__all__ = (
    "MANIFEST_NAME",
    "MANIFEST_SCHEMA",
    "ArtifactExistsError",
    "ArtifactRecord",
    "ArtifactWriter",
    "RunManifest",
    "discard_previous",
)

logger = logging.getLogger(__name__)

MANIFEST_NAME: typing.Final = "manifest.json"
MANIFEST_SCHEMA: typing.Final = ("manifest", 1)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@define(auto_exc=True)
class ArtifactExistsError(LabException, FileExistsError):
    """A run tried to write the same artifact twice."""

    path: Path

    def __str__(self) -> str:
        return f"Artifact {self.path} was already written by this run"


@define(kw_only=True)
class ArtifactRecord:
    path: str
    """Relative to the directory holding the manifest."""
    sha256: str
    stage: str
    kind: str


@define(kw_only=True)
class RunManifest:
    command: str
    config: abc.Mapping[str, typing.Any]
    """Resolved configuration, after command-line overrides."""
    seed: int
    version: str = __version__
    started: str = field(factory=_now)
    finished: str | None = None
    artifacts: list[ArtifactRecord] = field(factory=list)
    stages: dict[str, str] = field(factory=dict)
    """Stage name to ``complete``, ``failed: <reason>`` or ``incomplete``."""
    cache_keys: list[str] = field(factory=list)

    @property
    def complete(self) -> bool:
        return all(status == "complete" for status in self.stages.values())

    def to_json(self) -> dict[str, typing.Any]:
        return {
            "schema": schema_tag(*MANIFEST_SCHEMA),
            "command": self.command,
            "config": dict(self.config),
            "seed": self.seed,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "complete": self.complete,
            "stages": dict(self.stages),
            "cache_keys": sorted(set(self.cache_keys)),
            "artifacts": [
                {"path": a.path, "sha256": a.sha256, "stage": a.stage, "kind": a.kind}
                for a in self.artifacts
            ],
        }


@define
class ArtifactWriter:
    """Writes the artifacts of one command below ``root`` and keeps its manifest.

    Each path is written at most once per run; the manifest lists every file written.
    """

    root: Path
    manifest: RunManifest
    _written: set[Path] = field(factory=set, init=False)

    def __attrs_post_init__(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)

    def write_bytes(self, name: str, data: bytes, /, *, stage: str, kind: str) -> Path:
        path = (self.root / name).resolve()
        if path in self._written:
            raise ArtifactExistsError(path)

        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        self._written.add(path)
        self.manifest.artifacts.append(
            ArtifactRecord(
                path=path.relative_to(self.root.resolve()).as_posix(),
                sha256=hashlib.sha256(data).hexdigest(),
                stage=stage,
                kind=kind,
            )
        )
        logger.info("Wrote %s", path)
        return path

    def write_json(self, name: str, obj: object, /, *, stage: str) -> Path:
        data = labjson.dumps(obj, indent=True) + b"\n"
        return self.write_bytes(name, data, stage=stage, kind="json")

    def write_text(self, name: str, text: str, /, *, stage: str, kind: str = "csv") -> Path:
        return self.write_bytes(name, text.encode(), stage=stage, kind=kind)

    @contextlib.contextmanager
    def stage(self, name: str, /) -> abc.Iterator[None]:
        """Mark a stage incomplete while it runs and record how it ended."""
        self.manifest.stages[name] = "incomplete"
        try:
            yield

        except Exception as exc:
            self.manifest.stages[name] = f"failed: {type(exc).__name__}: {exc}"
            raise

        self.manifest.stages[name] = "complete"

    def finish(self) -> Path:
        """Write the manifest; always called, also when a stage failed."""
        self.manifest.finished = _now()
        path = self.root / MANIFEST_NAME
        path.write_bytes(labjson.dumps(self.manifest.to_json(), indent=True) + b"\n")
        return path


def discard_previous(root: Path, /) -> int:
    """Delete the artifacts an earlier run listed in ``root``'s manifest, and the manifest.

    Files the manifest does not list are left alone. Returns the number of files removed.
    """
    path = root / MANIFEST_NAME
    if not path.is_file():
        return 0

    try:
        listed = [entry["path"] for entry in labjson.loads(path.read_bytes())["artifacts"]]

    except (ValueError, KeyError, TypeError) as exc:
        logger.warning("Keeping unreadable manifest %s: %s", path, exc)
        return 0

    removed = 0
    base = root.resolve()
    for name in listed:
        target = (root / name).resolve()
        if target.is_relative_to(base) and target.is_file():
            target.unlink()
            removed += 1

    path.unlink()
    logger.info("Removed %d artifacts of the previous run in %s", removed, root)
    return removed
