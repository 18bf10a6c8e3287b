import functools
from collections import abc

import numpy as np

from .typeshed import IntArray, SeedLike


def _get_display_brackets(cls: type, /) -> tuple[str, str]:
    if cls is tuple:
        return "(", ")"

    if cls is list:
        return "[", "]"

    if cls is set or cls is dict:
        return "{", "}"

    return f"{cls.__name__}<", ">"


def large_collection_repr(obj: abc.Collection[object], /, threshold: int = 20) -> str:
    if len(obj) <= threshold:
        return repr(obj)

    import itertools

    items = ", ".join(map(repr, itertools.islice(obj, threshold)))
    left, right = _get_display_brackets(type(obj))
    return f"{left}{items}, +{len(obj) - threshold} more{right}"


@functools.lru_cache(maxsize=32)
def basis_indices(num_sites: int, /) -> IntArray:
    """Computational basis indices 0..2^L-1. Site 0 is the most significant bit."""
    indices = np.arange(1 << num_sites, dtype=np.int64)
    indices.setflags(write=False)
    return indices


def site_bit(num_sites: int, site: int, /) -> int:
    """Bit mask of a site inside a basis index."""
    return 1 << (num_sites - 1 - site)


def site_mask(num_sites: int, sites: abc.Iterable[int], /) -> int:
    mask = 0
    for site in sites:
        mask |= site_bit(num_sites, site)
    return mask


def bits_of(indices: IntArray, num_sites: int, site: int, /) -> IntArray:
    """0/1 value of a site for each basis index."""
    return (indices >> (num_sites - 1 - site)) & 1


def parity(indices: IntArray, mask: int, /) -> IntArray:
    """Parity of the bits selected by mask, for each index."""
    out = np.zeros_like(indices)
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            out ^= (indices >> bit) & 1
        bit += 1
    return out


def make_rng(seed: SeedLike, /) -> np.random.Generator:
    return np.random.default_rng(seed)


def spawn_seeds(seed: SeedLike, count: int, /) -> list[np.random.SeedSequence]:
    """Independent child seeds; stable for a given parent seed regardless of consumer order."""
    parent = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return parent.spawn(count)
