"""On-disk cache of DMRG oracle states, keyed by a hash of the request."""

import hashlib
import logging
import typing
from collections import abc
from pathlib import Path

import attrs
from attrs import define

import labjson
from serial.checkpoint import dump_mps, to_mps
from serial.exceptions import DataError
from serial.reports import dump_model

from clusterlab.dmrg import DmrgConfig
from clusterlab.model import CutConfig, ModelParams
from clusterlab.mps import MPSState
from clusterlab.oracle import LowLying, low_lying_states
from clusterlab.rules import DEFAULT_LAB_RULES, LabRules

__all__ = ("OracleCache", "cache_key", "cached_low_lying")

logger = logging.getLogger(__name__)


def cache_key(request: abc.Mapping[str, object], /) -> str:
    """sha256 of the canonical (sorted, compact) JSON of a request."""
    return hashlib.sha256(labjson.dumps(request)).hexdigest()


def _request(p: ModelParams, c: CutConfig, index: int, dmrg: DmrgConfig) -> dict[str, object]:
    return {
        "model": dump_model(p, c),
        "index": index,
        "dmrg": attrs.asdict(dmrg),
    }


@define
class OracleCache:
    root: Path

    def path(self, key: str, /) -> Path:
        return self.root / f"{key}.mps"

    def get(self, key: str, /) -> tuple[MPSState, dict[str, typing.Any]] | None:
        path = self.path(key)
        if not path.is_file():
            return None

        try:
            return to_mps(path.read_bytes(), source=str(path))

        except DataError as exc:
            logger.warning("Ignoring unreadable cache entry %s: %s", path, exc)
            return None

    def put(self, key: str, state: MPSState, /, metadata: abc.Mapping[str, object]) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.path(key).with_suffix(".tmp")
        tmp.write_bytes(dump_mps(state, metadata))
        tmp.replace(self.path(key))


def cached_low_lying(
    p: ModelParams,
    c: CutConfig | None = None,
    /,
    count: int = 1,
    *,
    dmrg: DmrgConfig | None = None,
    cache: OracleCache | None = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> tuple[LowLying, list[str]]:
    """Oracle levels, reusing cached DMRG states. Returns the levels and the cache keys used.

    Exact-diagonalization sizes bypass the cache.
    """
    c = c or CutConfig()
    dmrg = dmrg or DmrgConfig()
    if cache is None or p.L <= rules.limits.EXACT_ORACLE:
        return low_lying_states(p, c, count, dmrg=dmrg, rules=rules), []

    keys = [cache_key(_request(p, c, index, dmrg)) for index in range(count)]
    hits = [cache.get(key) for key in keys]
    if all(hit is not None for hit in hits):
        logger.info("Oracle cache hit for L=%d cut=%s", p.L, c.label)
        entries = typing.cast(list[tuple[MPSState, dict[str, typing.Any]]], hits)
        levels = LowLying(
            states=tuple(state for state, _ in entries),
            energies=tuple(float(meta["energy"]) for _, meta in entries),
            exact=False,
            converged=all(bool(meta["converged"]) for _, meta in entries),
        )
        return levels, keys

    levels = low_lying_states(p, c, count, dmrg=dmrg, rules=rules)
    for key, state, energy in zip(keys, levels.states, levels.energies, strict=True):
        assert isinstance(state, MPSState)
        cache.put(key, state, {"energy": energy, "converged": levels.converged})

    return levels, keys
