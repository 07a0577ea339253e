"""Small text helpers shared across the pipeline (whitespace tokens,
normalized containment/location)."""

from __future__ import annotations

import re
from typing import Optional, Tuple


def ws_tokens(text: str) -> list[str]:
    """Whitespace tokens of ``text``."""
    return text.split()


def norm_space(text: str) -> str:
    """Collapse runs of whitespace to single spaces and strip the ends."""
    return " ".join(text.split())


def norm_key(text: str) -> str:
    """Casefolded, whitespace-normalized form used for surface comparisons."""
    return norm_space(text).casefold()


def contains_normalized(haystack: str, needle: str) -> bool:
    """True if ``needle`` occurs in ``haystack`` ignoring case and
    whitespace runs.  Empty needles never match."""
    return find_normalized(haystack, needle) is not None


def find_normalized(haystack: str, needle: str) -> Optional[Tuple[int, int]]:
    """Character span of the first case-insensitive, whitespace-tolerant
    occurrence of ``needle`` in ``haystack``, or None."""
    needle = norm_space(needle)
    if not needle:
        return None
    pattern = r"\s+".join(re.escape(tok) for tok in needle.split(" "))
    m = re.search(pattern, haystack, flags=re.IGNORECASE)
    if m is None:
        return None
    return m.start(), m.end()


def replace_span(text: str, span: Tuple[int, int], replacement: str) -> str:
    start, end = span
    return text[:start] + replacement + text[end:]
