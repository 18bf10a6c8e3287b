"""Plain-text form of Pauli sums.

One term per line, ``<re>,<im> <site>:<P> <site>:<P> ...``, after a header line
``# L=<sites> hermitian=<true|false>``. Other lines starting with ``#`` and blank lines
are ignored.
"""

import re
from collections import abc

from .exceptions import DataPath, DataValueError, ErrorCollector

from clusterlab.enums.pauli import Pauli
from clusterlab.exceptions import LabException
from clusterlab.pauli import PauliSum, PauliTerm

__all__ = ("dump_pauli_sum", "to_pauli_sum", "to_pauli_term")

_HEADER = re.compile(r"#\s*L=(?P<L>\d+)(?:\s+hermitian=(?P<hermitian>true|false))?\s*$")


def _format_term(term: PauliTerm, /) -> str:
    coefficient = f"{term.coefficient.real!r},{term.coefficient.imag!r}"
    factors = " ".join(f"{site}:{pauli.name}" for site, pauli in term.factors)
    return f"{coefficient} {factors}".rstrip()


def dump_pauli_sum(op: PauliSum, /) -> str:
    lines = [f"# L={op.num_sites} hermitian={str(op.hermitian).lower()}"]
    lines.extend(map(_format_term, op.terms))
    return "\n".join(lines) + "\n"


def to_pauli_term(line: str, /, *, at: DataPath = ()) -> PauliTerm:
    coefficient, *tokens = line.split()
    try:
        re_part, im_part = coefficient.split(",")
        value = complex(float(re_part), float(im_part))

    except ValueError:
        msg = f"Malformed coefficient {coefficient!r}, expected '<re>,<im>'"
        raise DataValueError(msg, at=at) from None

    errors = ErrorCollector()
    factors: list[tuple[int, Pauli]] = []
    for i, token in enumerate(tokens, 1):
        site, sep, symbol = token.partition(":")
        if not sep or not site.isdigit() or symbol.upper() not in Pauli.__members__:
            msg = f"Malformed factor {token!r}, expected '<site>:<I|X|Y|Z>'"
            errors.add(DataValueError(msg, at=(*at, i)))
            continue

        factors.append((int(site), Pauli.of_symbol(symbol)))

    errors.raise_if_any()
    try:
        return PauliTerm(factors=factors, coefficient=value)

    except (LabException, ValueError) as exc:
        raise DataValueError(str(exc), at=at) from None


def to_pauli_sum(text: str | abc.Iterable[str], /, *, source: str = "<text>") -> PauliSum:
    """Parse the text form; every malformed line is reported before failing."""
    lines = text.splitlines() if isinstance(text, str) else list(text)
    errors = ErrorCollector()
    num_sites: int | None = None
    hermitian = False
    terms: list[PauliTerm] = []

    for number, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue

        if line.startswith("#"):
            if num_sites is None and (match := _HEADER.match(line)):
                num_sites = int(match["L"])
                hermitian = match["hermitian"] == "true"
            continue

        with errors:
            terms.append(to_pauli_term(line, at=(source, f"line {number}")))

    if num_sites is None:
        errors.add(DataValueError("Missing '# L=<sites>' header", at=(source,)))

    errors.raise_if_any(f"Problems while parsing Pauli sum from {source}:")
    assert num_sites is not None

    try:
        return PauliSum.of(num_sites, *terms, hermitian=hermitian)

    except LabException as exc:
        errors.add(DataValueError(str(exc), at=(source,)))
        errors.raise_if_any(f"Problems while parsing Pauli sum from {source}:")
        raise
