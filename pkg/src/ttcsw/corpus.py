"""ASTE data model and SemEval-2022 task 10 ingestion.

Loads the structured-sentiment JSON releases (per-split ``train.json`` /
``dev.json`` / ``test.json``, each a list of records with ``sent_id``,
``text`` and ``opinions``) into a flat triplet corpus: Target annotations
become aspect terms, Polar_expression annotations become opinion terms,
Source and Intensity are dropped.  Also owns the normalized JSONL corpus
file format used by every other stage.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .textutil import norm_space

logger = logging.getLogger(__name__)

FORMAT_NAME = "ttcsw-corpus"
FORMAT_VERSION = 1

SPLITS = ("train", "validation", "test")

# file names as distributed by the shared task
_SPLIT_FILES = {
    "train": ("train.json",),
    "validation": ("dev.json", "validation.json"),
    "test": ("test.json",),
}


class CorpusError(Exception):
    """Fatal ingestion / corpus-file problem."""


class Polarity(Enum):
    POS = "POS"
    NEG = "NEG"
    NEU = "NEU"
    NONE = "NONE"

    @classmethod
    def parse(cls, label: str) -> "Polarity":
        """Case-insensitive polarity parse; raises ValueError on anything
        that is not a known surface form."""
        key = label.strip().casefold()
        try:
            return _POLARITY_ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown polarity label: {label!r}") from None


_POLARITY_ALIASES = {
    "pos": Polarity.POS,
    "positive": Polarity.POS,
    "neg": Polarity.NEG,
    "negative": Polarity.NEG,
    "neu": Polarity.NEU,
    "neutral": Polarity.NEU,
    "none": Polarity.NONE,
}


@dataclass(frozen=True)
class Triplet:
    """(aspect term, opinion term, polarity); terms may be empty."""

    aspect: str
    opinion: str
    polarity: Polarity

    def __post_init__(self):
        object.__setattr__(self, "aspect", self.aspect.strip())
        object.__setattr__(self, "opinion", self.opinion.strip())

    @property
    def is_empty(self) -> bool:
        return self.aspect == "" and self.opinion == ""


EMPTY_TRIPLET = Triplet("", "", Polarity.NONE)

Span = tuple[int, int]


@dataclass(frozen=True)
class TermSpans:
    """Character-offset provenance for one triplet; each side is a tuple of
    (begin, end) fragments in document order, or None when unknown."""

    aspect: Optional[tuple[Span, ...]] = None
    opinion: Optional[tuple[Span, ...]] = None


@dataclass
class Sample:
    id: str
    text: str
    language: str
    gold: list[Triplet] = field(default_factory=list)
    spans: Optional[list[TermSpans]] = None


@dataclass
class Corpus:
    name: str
    language: str
    split: str
    samples: list[Sample] = field(default_factory=list)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise CorpusError(f"split must be one of {SPLITS}, got {self.split!r}")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class StatsReport:
    """Table-style dataset statistics.  Aspect/opinion counts are per
    non-empty triplet slot; the unique/fragment variants are kept as
    diagnostics because the counting convention for multi-span terms is
    not pinned down by the source tables."""

    n_sentences: int = 0
    n_aspects: int = 0
    n_opinions: int = 0
    n_triplets: int = 0
    n_empty_samples: int = 0
    n_unique_aspect_spans: int = 0
    n_unique_opinion_spans: int = 0
    n_aspect_fragments: int = 0
    n_opinion_fragments: int = 0

    @property
    def empty_label_rate(self) -> float:
        if self.n_sentences == 0:
            return 0.0
        return self.n_empty_samples / self.n_sentences

    def __add__(self, other: "StatsReport") -> "StatsReport":
        return StatsReport(*(a + b for a, b in
                             zip(_stats_fields(self), _stats_fields(other))))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["empty_label_rate"] = self.empty_label_rate
        return d


def _stats_fields(r: StatsReport) -> tuple[int, ...]:
    return (r.n_sentences, r.n_aspects, r.n_opinions, r.n_triplets,
            r.n_empty_samples, r.n_unique_aspect_spans,
            r.n_unique_opinion_spans, r.n_aspect_fragments,
            r.n_opinion_fragments)


@dataclass
class IngestDiagnostics:
    malformed_records: int = 0
    skipped_triplets: int = 0
    bad_spans: int = 0
    notes: list[str] = field(default_factory=list)


def _parse_annotation(node, text: str, diags: IngestDiagnostics):
    """One Target/Polar_expression annotation -> (term, span fragments).

    The annotation is ``[[fragment texts...], ["begin:end", ...]]``.
    Fragments are joined in document order with a single space; zero
    fragments yield the empty term.
    """
    if not node or not isinstance(node, (list, tuple)) or len(node) != 2:
        return "", None
    texts, offsets = node
    frags = []
    for frag_text, offset in zip(texts, offsets):
        try:
            begin_s, _, end_s = str(offset).partition(":")
            begin, end = int(begin_s), int(end_s)
        except ValueError:
            diags.bad_spans += 1
            diags.notes.append(f"unparseable offset {offset!r}")
            continue
        frags.append((begin, end, str(frag_text)))
    frags.sort(key=lambda f: f[0])
    term = " ".join(norm_space(f[2]) for f in frags if norm_space(f[2]))
    spans = []
    for begin, end, frag_text in frags:
        if norm_space(text[begin:end]) != norm_space(frag_text):
            diags.bad_spans += 1
            diags.notes.append(
                f"span {begin}:{end} does not match fragment {frag_text!r}")
            continue
        spans.append((begin, end))
    return term, tuple(spans) if spans else None


def ingest_semeval(dir_path, language: str, split: str = "train",
                   name: Optional[str] = None) -> Corpus:
    """Load one split of a SemEval-2022 task 10 dataset directory."""
    dir_path = Path(dir_path)
    if split not in SPLITS:
        raise CorpusError(f"split must be one of {SPLITS}, got {split!r}")
    for candidate in _SPLIT_FILES[split]:
        path = dir_path / candidate
        if path.exists():
            break
    else:
        raise CorpusError(
            f"missing {split} file in {dir_path} "
            f"(looked for {', '.join(_SPLIT_FILES[split])})")

    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: not valid JSON ({exc})") from exc

    diags = IngestDiagnostics()
    samples = []
    for record in records:
        sample = _ingest_record(record, language, diags)
        if sample is not None:
            samples.append(sample)
    if diags.malformed_records or diags.skipped_triplets or diags.bad_spans:
        logger.warning(
            "%s: skipped %d malformed records, %d triplets, %d bad spans",
            path, diags.malformed_records, diags.skipped_triplets,
            diags.bad_spans)
    return Corpus(name=name or dir_path.name, language=language,
                  split=split, samples=samples)


def _ingest_record(record, language: str, diags: IngestDiagnostics):
    if not isinstance(record, dict) or "text" not in record:
        diags.malformed_records += 1
        return None
    text = record["text"]
    sent_id = str(record.get("sent_id", "")) or f"anon-{id(record)}"
    gold: list[Triplet] = []
    spans: list[TermSpans] = []
    for opinion in record.get("opinions") or []:
        if not isinstance(opinion, dict):
            diags.malformed_records += 1
            continue
        try:
            polarity = Polarity.parse(opinion.get("Polarity", ""))
        except ValueError as exc:
            diags.skipped_triplets += 1
            diags.notes.append(f"{sent_id}: {exc}")
            continue
        aspect, aspect_spans = _parse_annotation(
            opinion.get("Target"), text, diags)
        op_term, opinion_spans = _parse_annotation(
            opinion.get("Polar_expression"), text, diags)
        gold.append(Triplet(aspect, op_term, polarity))
        spans.append(TermSpans(aspect=aspect_spans, opinion=opinion_spans))
    return Sample(id=sent_id, text=text, language=language,
                  gold=gold, spans=spans)


def ingest_semeval_all(dir_path, language: str,
                       name: Optional[str] = None) -> dict[str, Corpus]:
    """All available splits of a dataset directory, keyed by split."""
    out = {}
    for split in SPLITS:
        try:
            out[split] = ingest_semeval(dir_path, language, split, name=name)
        except CorpusError:
            continue
    if not out:
        raise CorpusError(f"no split files found in {dir_path}")
    return out


def corpus_stats(corpus_or_samples) -> StatsReport:
    """Counts over a Corpus (or any iterable of Samples)."""
    samples: Iterable[Sample]
    if isinstance(corpus_or_samples, Corpus):
        samples = corpus_or_samples.samples
    else:
        samples = corpus_or_samples
    report = StatsReport()
    for sample in samples:
        report.n_sentences += 1
        if not sample.gold:
            report.n_empty_samples += 1
        unique_aspects: set = set()
        unique_opinions: set = set()
        for i, triplet in enumerate(sample.gold):
            report.n_triplets += 1
            term_spans = (sample.spans[i] if sample.spans
                          and i < len(sample.spans) else TermSpans())
            if triplet.aspect:
                report.n_aspects += 1
                key = term_spans.aspect or ("text", triplet.aspect)
                unique_aspects.add(key)
                report.n_aspect_fragments += (
                    len(term_spans.aspect) if term_spans.aspect else 1)
            if triplet.opinion:
                report.n_opinions += 1
                key = term_spans.opinion or ("text", triplet.opinion)
                unique_opinions.add(key)
                report.n_opinion_fragments += (
                    len(term_spans.opinion) if term_spans.opinion else 1)
        report.n_unique_aspect_spans += len(unique_aspects)
        report.n_unique_opinion_spans += len(unique_opinions)
    return report


# ---------------------------------------------------------------------------
# normalized corpus file (JSONL, one record per line, header record first)
# ---------------------------------------------------------------------------

def _sample_to_record(sample: Sample) -> dict:
    record = {
        "id": sample.id,
        "text": sample.text,
        "language": sample.language,
        "gold": [
            {"aspect": t.aspect, "opinion": t.opinion,
             "polarity": t.polarity.value}
            for t in sample.gold
        ],
    }
    if sample.spans is not None:
        record["spans"] = [
            {"aspect": [list(s) for s in ts.aspect] if ts.aspect else None,
             "opinion": [list(s) for s in ts.opinion] if ts.opinion else None}
            for ts in sample.spans
        ]
    return record


def _sample_from_record(record: dict) -> Sample:
    gold = [
        Triplet(t["aspect"], t["opinion"], Polarity.parse(t["polarity"]))
        for t in record.get("gold", [])
    ]
    spans = None
    if "spans" in record and record["spans"] is not None:
        spans = [
            TermSpans(
                aspect=tuple(tuple(s) for s in ts["aspect"]) if ts.get("aspect") else None,
                opinion=tuple(tuple(s) for s in ts["opinion"]) if ts.get("opinion") else None,
            )
            for ts in record["spans"]
        ]
    return Sample(id=record["id"], text=record["text"],
                  language=record["language"], gold=gold, spans=spans)


def export_corpus(corpus: Corpus, path, header_extra: Optional[dict] = None) -> None:
    """Write the normalized corpus file; the first line is a header record."""
    path = Path(path)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": corpus.name,
        "language": corpus.language,
        "split": corpus.split,
    }
    if header_extra:
        header.update(header_extra)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for sample in corpus.samples:
            fh.write(json.dumps(_sample_to_record(sample), ensure_ascii=False) + "\n")
    tmp.replace(path)


def import_corpus(path) -> Corpus:
    path = Path(path)
    samples = []
    header = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed line ({exc})") from exc
            if header is None:
                if record.get("format") != FORMAT_NAME:
                    raise CorpusError(
                        f"{path}:{lineno}: not a {FORMAT_NAME} file")
                if record.get("version") != FORMAT_VERSION:
                    raise CorpusError(
                        f"{path}:{lineno}: unsupported version "
                        f"{record.get('version')!r} (expected {FORMAT_VERSION})")
                header = record
                continue
            try:
                samples.append(_sample_from_record(record))
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: malformed record ({exc})") from exc
    if header is None:
        raise CorpusError(f"{path}: empty corpus file (no header)")
    return Corpus(name=header["name"], language=header["language"],
                  split=header["split"], samples=samples)


def concat_samples(corpora: Sequence[Corpus]) -> list[Sample]:
    out: list[Sample] = []
    for corpus in corpora:
        out.extend(corpus.samples)
    return out
