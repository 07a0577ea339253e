"""Structural triplet serialization for the generation backend.

One triplet renders as ``(aspect<split>opinion<split>polarity)`` and
triplets are joined with `` <join> ``; commas, semicolons and parentheses
inside terms are legal, which is the whole point of using dedicated
separator tokens.  Parsing is total: arbitrary model output never raises,
malformed pieces are dropped or repaired and counted in the diagnostics.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .corpus import Polarity, Triplet

SPLIT_TOKEN = "<split>"
JOIN_TOKEN = "<join>"

_JOIN_RE = re.compile(r"\s*<join>\s*")
_SPLIT_RE = re.compile(r"\s*<split>\s*")


class SerdeError(ValueError):
    """A triplet cannot be serialized unambiguously."""


@dataclass
class ParseDiagnostics:
    dropped_triplets: int = 0
    repaired_triplets: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.dropped_triplets == 0 and self.repaired_triplets == 0


def emit_triplets(triplets) -> str:
    """Render a triplet list; the empty list renders as the empty string."""
    parts = []
    for t in triplets:
        parts.append(f"({t.aspect}{SPLIT_TOKEN}{t.opinion}{SPLIT_TOKEN}"
                     f"{t.polarity.value})")
    return f" {JOIN_TOKEN} ".join(parts)


def assert_serializable(triplets) -> None:
    """Reject terms containing the separator tokens; there is no escaping
    scheme, so such terms cannot round-trip.  Corpus builders call this
    before writing training files."""
    for t in triplets:
        for term in (t.aspect, t.opinion):
            if SPLIT_TOKEN in term or JOIN_TOKEN in term:
                raise SerdeError(
                    f"term contains a reserved separator token: {term!r}")


def parse_triplets(text: str) -> tuple[list[Triplet], ParseDiagnostics]:
    """Fault-tolerant inverse of emit_triplets over arbitrary model output."""
    diags = ParseDiagnostics()
    triplets: list[Triplet] = []
    if text is None or not text.strip():
        return triplets, diags
    for segment in _JOIN_RE.split(text):
        segment = segment.strip()
        if not segment:
            continue
        if segment.startswith("(") and segment.endswith(")"):
            segment = segment[1:-1]
        fields = [f.strip() for f in _SPLIT_RE.split(segment)]
        if len(fields) < 3:
            diags.dropped_triplets += 1
            diags.notes.append(
                f"segment has {len(fields)} field(s), expected 3: {segment!r}")
            continue
        if len(fields) == 3:
            aspect, opinion, polarity_text = fields
        else:
            # over-split output: keep the outer fields, fold the middle
            # back into the opinion
            aspect = fields[0]
            opinion = SPLIT_TOKEN.join(fields[1:-1])
            polarity_text = fields[-1]
            diags.repaired_triplets += 1
            diags.notes.append(
                f"segment had {len(fields)} fields, folded middle into "
                f"opinion: {segment!r}")
        try:
            polarity = Polarity.parse(polarity_text)
        except ValueError:
            diags.dropped_triplets += 1
            diags.notes.append(f"unknown polarity {polarity_text!r}")
            continue
        triplets.append(Triplet(aspect, opinion, polarity))
    return triplets, diags
