"""Boundary-aware code-switched corpus construction.

Aspect and opinion spans are wrapped in indexed inline tags
(``<a1>…</a1>``, ``<o1>…</o1>``) before translation so term boundaries
survive the round trip through a translation system; the tags then yield
bilingual parallel term pairs and let individual terms be swapped between
languages without word-alignment tooling.  Also implements the
dictionary-based code-switching baseline (MUSE-style lexicon, per-word
switching at a fixed ratio, static or per-epoch dynamic resampling).
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .backends import Backend, TranslationRequest
from .corpus import Corpus, Sample, Triplet
from .textutil import find_normalized, norm_key, norm_space

logger = logging.getLogger(__name__)

Span = tuple[int, int]
TagKey = tuple[str, int]  # (kind, 1-based index), kind in {"aspect", "opinion"}

_KIND_LETTER = {"aspect": "a", "opinion": "o"}
_LETTER_KIND = {"a": "aspect", "o": "opinion"}

# canonical tags as produced by the tagger
_TAG_RE = re.compile(r"<(/?)([ao])(\d+)>")
# tolerant form used when repairing translator output
_LOOSE_TAG_RE = re.compile(r"<\s*(/?)\s*([aAoO])\s*(\d+)\s*>")


class TaggingError(Exception):
    pass


@dataclass(frozen=True)
class TagEntry:
    kind: str
    index: int
    surface: str
    span: Span  # of the surface inside the tagged text


@dataclass
class TaggedSentence:
    text: str
    entries: dict[TagKey, TagEntry] = field(default_factory=dict)

    def stripped(self) -> str:
        return strip_tags(self.text)


def open_tag(kind: str, index: int) -> str:
    return f"<{_KIND_LETTER[kind]}{index}>"


def close_tag(kind: str, index: int) -> str:
    return f"</{_KIND_LETTER[kind]}{index}>"


def strip_tags(text: str) -> str:
    return _TAG_RE.sub("", text)


def validate_tagged(text: str) -> list[str]:
    """Problems with the tag structure of ``text`` (empty list = valid):
    balance, proper nesting, no crossing, unique indices per kind."""
    problems = []
    stack: list[TagKey] = []
    seen: set[TagKey] = set()
    for m in _TAG_RE.finditer(text):
        closing, letter, num = m.group(1), m.group(2), m.group(3)
        key = (_LETTER_KIND[letter], int(num))
        if not closing:
            if key in seen:
                problems.append(f"duplicate open tag {m.group(0)}")
            seen.add(key)
            stack.append(key)
        else:
            if not stack:
                problems.append(f"unmatched close tag {m.group(0)}")
            elif stack[-1] != key:
                problems.append(
                    f"crossing or misnested close tag {m.group(0)}")
                if key in stack:
                    while stack and stack[-1] != key:
                        stack.pop()
                    if stack:
                        stack.pop()
            else:
                stack.pop()
    for key in stack:
        problems.append(f"unclosed tag {open_tag(*key)}")
    return problems


def parse_tagged(text: str) -> TaggedSentence:
    """Build the index of a canonically tagged sentence.  Entry spans are
    in tag-stripped coordinates."""
    problems = validate_tagged(text)
    if problems:
        raise TaggingError("; ".join(problems))
    stripped = strip_tags(text)
    entries: dict[TagKey, TagEntry] = {}
    opens: dict[TagKey, int] = {}
    out_pos = 0
    last = 0
    for m in _TAG_RE.finditer(text):
        out_pos += m.start() - last
        last = m.end()
        key = (_LETTER_KIND[m.group(2)], int(m.group(3)))
        if not m.group(1):
            opens[key] = out_pos
        else:
            span = (opens[key], out_pos)
            entries[key] = TagEntry(kind=key[0], index=key[1],
                                    surface=stripped[span[0]:span[1]],
                                    span=span)
    return TaggedSentence(text=text, entries=entries)


@dataclass
class TagDiagnostics:
    lossy: bool = False
    unlocatable: list[tuple[int, str]] = field(default_factory=list)
    skipped_overlaps: int = 0
    dropped: list[TagKey] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


@dataclass
class TagOutcome:
    tagged: TaggedSentence
    # per gold triplet: tag key of each side (None when the term is empty)
    triplet_tags: list[dict[str, Optional[TagKey]]]
    diagnostics: TagDiagnostics


def _term_span(sample: Sample, triplet_idx: int, side: str) -> Optional[Span]:
    """Contiguous character span of a term: stored provenance when it is a
    single fragment, otherwise the first normalized occurrence in the text."""
    term = getattr(sample.gold[triplet_idx], side)
    if not term:
        return None
    if sample.spans and triplet_idx < len(sample.spans):
        frags = getattr(sample.spans[triplet_idx], side)
        if frags and len(frags) == 1:
            begin, end = frags[0]
            if norm_key(sample.text[begin:end]) == norm_key(term):
                return (begin, end)
    return find_normalized(sample.text, term)


def tag_sample(sample: Sample) -> TagOutcome:
    """Wrap every locatable term span in indexed tags.

    Duplicate spans across triplets share one tag; overlapping distinct
    spans keep the earlier-starting (ties: longer) one.  Terms without a
    locatable span are recorded so the caller can exclude the sample from
    code-switch building.
    """
    diags = TagDiagnostics()
    if _TAG_RE.search(sample.text):
        raise TaggingError(
            f"sample {sample.id}: text already contains tag-shaped markup")

    span_to_terms: dict[tuple[str, Span], list[tuple[int, str]]] = {}
    triplet_tags: list[dict[str, Optional[TagKey]]] = []
    for i, triplet in enumerate(sample.gold):
        slots: dict[str, Optional[TagKey]] = {"aspect": None, "opinion": None}
        for side in ("aspect", "opinion"):
            term = getattr(triplet, side)
            if not term:
                continue
            span = _term_span(sample, i, side)
            if span is None:
                diags.unlocatable.append((i, side))
                diags.notes.append(
                    f"no locatable span for {side} {term!r}")
                continue
            span_to_terms.setdefault((side, span), []).append((i, side))
        triplet_tags.append(slots)

    # earlier start wins; on ties the longer span, then aspect before opinion
    candidates = sorted(span_to_terms,
                        key=lambda ks: (ks[1][0], -(ks[1][1] - ks[1][0]),
                                        0 if ks[0] == "aspect" else 1))
    kept: list[tuple[str, Span]] = []
    for kind, span in candidates:
        if any(span[0] < e and s < span[1] for _, (s, e) in kept):
            diags.skipped_overlaps += 1
            diags.notes.append(
                f"span {span} ({kind}) overlaps an earlier tagged span")
            for i, side in span_to_terms[(kind, span)]:
                diags.unlocatable.append((i, side))
            continue
        kept.append((kind, span))

    counters = {"aspect": 0, "opinion": 0}
    key_of: dict[tuple[str, Span], TagKey] = {}
    for kind, span in sorted(kept, key=lambda ks: ks[1][0]):
        counters[kind] += 1
        key_of[(kind, span)] = (kind, counters[kind])

    for (kind, span), users in span_to_terms.items():
        key = key_of.get((kind, span))
        if key is None:
            continue
        for i, side in users:
            triplet_tags[i][side] = key

    pieces = []
    cursor = 0
    for kind, span in sorted(kept, key=lambda ks: ks[1][0]):
        key = key_of[(kind, span)]
        pieces.append(sample.text[cursor:span[0]])
        pieces.append(open_tag(*key))
        pieces.append(sample.text[span[0]:span[1]])
        pieces.append(close_tag(*key))
        cursor = span[1]
    pieces.append(sample.text[cursor:])
    tagged = parse_tagged("".join(pieces))
    return TagOutcome(tagged=tagged, triplet_tags=triplet_tags,
                      diagnostics=diags)


def repair_tags(raw: str, expected: set[TagKey]) -> tuple[TaggedSentence, TagDiagnostics]:
    """Normalize translator output back into a valid TaggedSentence.

    Matching is case-insensitive and whitespace-tolerant; for each index
    the first open and the first close after it are paired, everything
    else is removed.  Pairs that cross a kept pair, or whose content is
    empty, are dropped with a diagnostic.
    """
    diags = TagDiagnostics()
    occurrences = list(_LOOSE_TAG_RE.finditer(raw))

    # stripped text and tag positions within it
    stripped_parts = []
    cursor = 0
    positions: list[tuple[TagKey, bool, int]] = []
    out_pos = 0
    for m in occurrences:
        stripped_parts.append(raw[cursor:m.start()])
        out_pos += m.start() - cursor
        cursor = m.end()
        key = (_LETTER_KIND[m.group(2).lower()], int(m.group(3)))
        positions.append((key, bool(m.group(1)), out_pos))
    stripped_parts.append(raw[cursor:])
    stripped = "".join(stripped_parts)

    pairs: dict[TagKey, Span] = {}
    for key in {k for k, _, _ in positions}:
        opens = [pos for k, closing, pos in positions if k == key and not closing]
        closes = [pos for k, closing, pos in positions if k == key and closing]
        start = opens[0] if opens else None
        end = next((c for c in sorted(closes) if start is not None and c >= start),
                   None)
        if start is None or end is None:
            diags.notes.append(f"lost tag pair {open_tag(*key)}")
            diags.dropped.append(key)
            continue
        # trim whitespace that ended up inside the pair
        while start < end and stripped[start].isspace():
            start += 1
        while end > start and stripped[end - 1].isspace():
            end -= 1
        if start == end:
            diags.notes.append(f"empty content for {open_tag(*key)}")
            diags.dropped.append(key)
            continue
        pairs[key] = (start, end)

    # kept pairs must be pairwise disjoint (span-based re-rendering relies
    # on it); earlier-starting wins, ties go to the longer span
    kept: dict[TagKey, Span] = {}
    ordered = sorted(pairs.items(),
                     key=lambda kv: (kv[1][0], -(kv[1][1] - kv[1][0]), kv[0]))
    for key, span in ordered:
        if any(span[0] < e and s < span[1] for s, e in kept.values()):
            diags.notes.append(
                f"overlapping tag pair {open_tag(*key)} dropped")
            diags.dropped.append(key)
            continue
        kept[key] = span

    # re-render canonical tags around the kept spans
    events: list[tuple[int, int, int, str]] = []
    for key, (start, end) in kept.items():
        length = end - start
        # at equal positions: closes before opens; outer opens first,
        # inner closes first
        events.append((start, 1, -length, open_tag(*key)))
        events.append((end, 0, length, close_tag(*key)))
    events.sort()
    out = []
    cursor = 0
    for pos, _, _, tag in events:
        out.append(stripped[cursor:pos])
        out.append(tag)
        cursor = pos
    out.append(stripped[cursor:])
    repaired = parse_tagged("".join(out))

    lost = expected - set(repaired.entries)
    for key in sorted(lost):
        if key not in diags.dropped:
            diags.dropped.append(key)
            diags.notes.append(f"tag pair {open_tag(*key)} missing from output")
    diags.lossy = bool(lost)
    return repaired, diags


def translate_tagged(tagged: TaggedSentence, translator: Backend,
                     source_lang: str, target_lang: str) -> tuple[TaggedSentence, TagDiagnostics]:
    """Translate a tagged sentence and repair whatever came back."""
    request = TranslationRequest(
        texts=(tagged.text,), source_lang=source_lang,
        target_lang=target_lang, preserve_tags=True)
    response = translator.translate(request)
    return repair_tags(response.outputs[0], set(tagged.entries))


@dataclass(frozen=True)
class ParallelTermPair:
    source_term: str
    target_term: str
    kind: str
    sample_id: str
    source_lang: str
    target_lang: str


def extract_parallel_terms(original: TaggedSentence, translated: TaggedSentence,
                           sample_id: str = "", source_lang: str = "",
                           target_lang: str = "") -> list[ParallelTermPair]:
    """One bilingual phrase pair per tag index surviving on both sides."""
    pairs = []
    for key in sorted(original.entries):
        if key not in translated.entries:
            continue
        src = norm_space(original.entries[key].surface)
        tgt = norm_space(translated.entries[key].surface)
        if not src or not tgt:
            continue
        pairs.append(ParallelTermPair(
            source_term=src, target_term=tgt, kind=key[0],
            sample_id=sample_id, source_lang=source_lang,
            target_lang=target_lang))
    return pairs


# ---------------------------------------------------------------------------
# corpus builders
# ---------------------------------------------------------------------------

MODE_CT = "CT"
MODE_CSW = "CSW"
MODE_DICT_CSW = "DICT_CSW"


@dataclass
class SwitchRecord:
    kind: str
    index: int
    original: str
    replacement: str
    language: str


@dataclass
class CswSample(Sample):
    mode: str = ""
    switches: list[SwitchRecord] = field(default_factory=list)


@dataclass
class BuildDiagnostics:
    excluded_samples: list[str] = field(default_factory=list)
    dropped_triplets: int = 0
    notes: list[str] = field(default_factory=list)


def _sample_rng(seed: int, sample_id: str, extra: str = "") -> random.Random:
    digest = hashlib.sha256(f"{seed}:{extra}:{sample_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _render_with_contents(tagged: TaggedSentence,
                          contents: dict[TagKey, str]) -> str:
    """Tag-stripped sentence with each tagged span replaced by the given
    content (defaults to its current surface)."""
    stripped = tagged.stripped()
    spans = sorted(((entry.span, key) for key, entry in tagged.entries.items()),
                   key=lambda it: it[0][0], reverse=True)
    for (start, end), key in spans:
        stripped = stripped[:start] + contents.get(key, tagged.entries[key].surface) + stripped[end:]
    return stripped


def build_csw_corpus(corpus: Corpus, translator: Backend, target_lang: str,
                     switch_rate: float = 0.5, seed: int = 0,
                     strict: bool = True,
                     modes: Sequence[str] = (MODE_CT, MODE_CSW),
                     ) -> tuple[Corpus, list[ParallelTermPair], BuildDiagnostics]:
    """Translate a corpus with boundary tags and emit CT and/or CSW samples.

    CT samples are fully translated (sentence and gold terms); CSW samples
    start from the translation and switch each tagged term back to its
    source form with probability ``switch_rate``.  Polarity is copied
    unchanged.  In strict mode a sample losing any tag pair in translation
    is excluded; lenient mode keeps it and drops the affected triplets.
    Deterministic for a fixed (seed, sample id) regardless of call order.
    """
    if not 0.0 <= switch_rate <= 1.0:
        raise ValueError("switch_rate must be in [0, 1]")
    diags = BuildDiagnostics()
    out_samples: list[Sample] = []
    all_pairs: list[ParallelTermPair] = []

    for sample in corpus.samples:
        try:
            outcome = tag_sample(sample)
        except TaggingError as exc:
            diags.excluded_samples.append(sample.id)
            diags.notes.append(str(exc))
            continue
        if outcome.diagnostics.unlocatable and strict:
            diags.excluded_samples.append(sample.id)
            diags.notes.append(
                f"{sample.id}: {len(outcome.diagnostics.unlocatable)} "
                "unlocatable term(s)")
            continue

        translated, tdiags = translate_tagged(
            outcome.tagged, translator, corpus.language, target_lang)
        if tdiags.lossy and strict:
            diags.excluded_samples.append(sample.id)
            diags.notes.append(f"{sample.id}: lossy translation "
                               f"({len(tdiags.dropped)} pair(s) lost)")
            continue

        pairs = extract_parallel_terms(
            outcome.tagged, translated, sample_id=sample.id,
            source_lang=corpus.language, target_lang=target_lang)
        all_pairs.extend(pairs)

        src_surface = {key: entry.surface
                       for key, entry in outcome.tagged.entries.items()}
        tgt_surface = {key: entry.surface
                       for key, entry in translated.entries.items()}

        def rebuild_gold(term_of_key) -> tuple[list[Triplet], int]:
            rebuilt: list[Triplet] = []
            dropped = 0
            for i, triplet in enumerate(sample.gold):
                new_terms = {}
                ok = True
                for side in ("aspect", "opinion"):
                    original = getattr(triplet, side)
                    if not original:
                        new_terms[side] = ""
                        continue
                    key = outcome.triplet_tags[i][side]
                    term = term_of_key(key) if key is not None else None
                    if term is None:
                        ok = False
                        break
                    new_terms[side] = term
                if not ok:
                    dropped += 1
                    continue
                rebuilt.append(Triplet(new_terms["aspect"],
                                       new_terms["opinion"],
                                       triplet.polarity))
            return rebuilt, dropped

        if MODE_CT in modes:
            gold, dropped = rebuild_gold(
                lambda key: tgt_surface.get(key))
            diags.dropped_triplets += dropped
            out_samples.append(CswSample(
                id=f"{sample.id}::ct", text=_render_with_contents(translated, {}),
                language=target_lang, gold=gold, spans=None, mode=MODE_CT,
                switches=[]))

        if MODE_CSW in modes:
            rng = _sample_rng(seed, sample.id, "csw")
            switched: dict[TagKey, str] = {}
            records: list[SwitchRecord] = []
            for key in sorted(translated.entries):
                take_source = rng.random() < switch_rate
                if take_source and key in src_surface:
                    switched[key] = src_surface[key]
                    records.append(SwitchRecord(
                        kind=key[0], index=key[1],
                        original=tgt_surface[key],
                        replacement=src_surface[key],
                        language=corpus.language))
            switched_keys = set(switched)

            def csw_term(key):
                if key is None:
                    return None
                if key in switched_keys:
                    return src_surface.get(key)
                return tgt_surface.get(key)

            gold, dropped = rebuild_gold(csw_term)
            diags.dropped_triplets += dropped
            out_samples.append(CswSample(
                id=f"{sample.id}::csw",
                text=_render_with_contents(translated, switched),
                language=target_lang, gold=gold, spans=None, mode=MODE_CSW,
                switches=records))

    out = Corpus(name=f"{corpus.name}-csw", language=target_lang,
                 split=corpus.split, samples=out_samples)
    return out, all_pairs, diags


# ---------------------------------------------------------------------------
# dictionary-based baseline
# ---------------------------------------------------------------------------

def load_lexicon(path) -> dict[str, str]:
    """MUSE-style bilingual lexicon: one ``source<TAB>target`` per line.
    The first translation of a repeated source word wins."""
    lexicon: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split("\t") if "\t" in line else line.split(None, 1)
        if len(parts) != 2:
            logger.warning("%s:%d: skipping malformed lexicon line", path, lineno)
            continue
        lexicon.setdefault(parts[0], parts[1])
    return lexicon


_WORD_RE = re.compile(r"\S+")
_EDGE_PUNCT = ".,;:!?\"'()[]{}"


def _lookup_word(word: str, lexicon: dict[str, str]) -> Optional[str]:
    if word in lexicon:
        return lexicon[word]
    bare = word.strip(_EDGE_PUNCT)
    if not bare:
        return None
    for candidate in (bare, bare.lower()):
        if candidate in lexicon:
            return word.replace(bare, lexicon[candidate], 1)
    return None


def build_dict_csw(corpus: Corpus, lexicon: dict[str, str], ratio: float = 0.3,
                   strategy: str = "static", seed: int = 0,
                   epoch: int = 0) -> Corpus:
    """Per-word dictionary code-switching at a fixed switch ratio.

    Every word draws an independent switch decision; words absent from
    the lexicon never switch.  Words straddling a gold term boundary are
    left alone so the gold terms always agree with the sentence.  The
    static strategy ignores ``epoch`` (one fixed corpus); the dynamic one
    resamples the switch pattern per epoch.
    """
    if not lexicon:
        raise ValueError("bilingual lexicon is empty")
    if strategy not in ("static", "dynamic"):
        raise ValueError(f"strategy must be static or dynamic, got {strategy!r}")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("ratio must be in [0, 1]")
    epoch_part = str(epoch) if strategy == "dynamic" else "static"

    out_samples: list[Sample] = []
    for sample in corpus.samples:
        rng = _sample_rng(seed, sample.id, f"dict:{epoch_part}")
        words = [(m.group(0), (m.start(), m.end()))
                 for m in _WORD_RE.finditer(sample.text)]

        term_spans: list[tuple[int, str, Span]] = []
        for i in range(len(sample.gold)):
            for side in ("aspect", "opinion"):
                span = _term_span(sample, i, side)
                if span is not None:
                    term_spans.append((i, side, span))

        def straddles_boundary(word_span: Span) -> bool:
            ws, we = word_span
            for _, _, (ts, te) in term_spans:
                if ws < te and ts < we:  # overlap
                    if not (ts <= ws and we <= te):  # not fully inside
                        return True
            return False

        replacements: list[tuple[Span, str, str]] = []
        for word, span in words:
            draw = rng.random()
            if draw >= ratio:
                continue
            switched = _lookup_word(word, lexicon)
            if switched is None or straddles_boundary(span):
                continue
            replacements.append((span, word, switched))

        text = sample.text
        for (start, end), _, switched in sorted(replacements, reverse=True):
            text = text[:start] + switched + text[end:]

        records = [SwitchRecord(kind="word", index=i, original=orig,
                                replacement=new, language=corpus.language)
                   for i, (_, orig, new) in enumerate(replacements)]

        gold: list[Triplet] = []
        for i, triplet in enumerate(sample.gold):
            new_terms = {}
            for side in ("aspect", "opinion"):
                term = getattr(triplet, side)
                if not term:
                    new_terms[side] = ""
                    continue
                span = next((s for j, sd, s in term_spans
                             if j == i and sd == side), None)
                if span is None:
                    new_terms[side] = term
                    continue
                ts, te = span
                piece = sample.text[ts:te]
                inner = [((ws - ts, we - ts), new)
                         for (ws, we), _, new in replacements
                         if ts <= ws and we <= te]
                for (rs, re_), new in sorted(inner, reverse=True):
                    piece = piece[:rs] + new + piece[re_:]
                new_terms[side] = norm_space(piece)
            gold.append(Triplet(new_terms["aspect"], new_terms["opinion"],
                                triplet.polarity))

        out_samples.append(CswSample(
            id=f"{sample.id}::dict", text=text, language=corpus.language,
            gold=gold, spans=None, mode=MODE_DICT_CSW, switches=records))

    return Corpus(name=f"{corpus.name}-dictcsw", language=corpus.language,
                  split=corpus.split, samples=out_samples)
