"""Training examples for the bilingual term alignment model.

Each example is ``chunk <SEP> query_term`` with the gold counterpart term
as label, or the literal ``None`` when the chunk does not contain it.
Long sentences are cut into sliding-window chunks; a fixed fraction of
examples get their query replaced by a random vocabulary token (label
``None``) as additional negatives.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .corpus import Corpus
from .csw import CswSample, MODE_CSW, MODE_DICT_CSW, ParallelTermPair
from .textutil import contains_normalized

SEP_TOKEN = "<SEP>"
NONE_LABEL = "None"


@dataclass
class ExampleMeta:
    sample_id: str
    kind: str
    direction: str  # "src2tgt": query is source-language, answer target
    corrupted: bool = False


@dataclass
class AlignmentExample:
    chunk: str
    query: str
    label: Optional[str]  # None -> the literal "None" on disk
    meta: ExampleMeta

    @property
    def input_text(self) -> str:
        return f"{self.chunk} {SEP_TOKEN} {self.query}"

    @property
    def label_text(self) -> str:
        return self.label if self.label is not None else NONE_LABEL


def chunk_sentence(text: str, window_len: int, stride: Optional[int] = None) -> list[str]:
    """Sliding-window chunks of at most ``window_len`` whitespace tokens,
    consecutive starts ``stride`` tokens apart, final partial chunk
    included.  A sentence that already fits yields itself verbatim."""
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if stride is None:
        stride = max(1, window_len // 2)
    if not 1 <= stride <= window_len:
        raise ValueError("stride must be in [1, window_len]")
    tokens = text.split()
    if len(tokens) <= window_len:
        return [text]
    return [" ".join(tokens[start:start + window_len])
            for start in range(0, len(tokens), stride)]


@dataclass
class AlignBuildDiagnostics:
    missing_sentences: int = 0
    notes: list[str] = field(default_factory=list)


def _sentence_index(corpora: Iterable[Corpus]) -> dict[tuple[str, str], str]:
    """(base sample id, language) -> sentence text.  Code-switched samples
    are skipped: alignment examples need monolingual sentences."""
    index: dict[tuple[str, str], str] = {}
    for corpus in corpora:
        for sample in corpus.samples:
            if isinstance(sample, CswSample) and sample.mode in (MODE_CSW,
                                                                 MODE_DICT_CSW):
                continue
            base_id = sample.id.split("::")[0]
            index.setdefault((base_id, sample.language), sample.text)
    return index


def _vocabulary(corpora: Iterable[Corpus]) -> list[str]:
    vocab: set[str] = set()
    for corpus in corpora:
        for sample in corpus.samples:
            vocab.update(sample.text.split())
    return sorted(vocab)


def build_alignment_examples(pairs: list[ParallelTermPair],
                             corpora: Iterable[Corpus],
                             window_len: int = 128,
                             stride: Optional[int] = None,
                             corrupt_rate: float = 0.1,
                             seed: int = 0,
                             ) -> tuple[list[AlignmentExample], AlignBuildDiagnostics]:
    """Windowed positives plus the two negative classes.

    For every parallel pair both directions are emitted: chunks of the
    source sentence queried with the target term (label = source term when
    the chunk contains it) and vice versa.  A ``corrupt_rate`` fraction of
    all examples, chosen by quota under the seed, get their query replaced
    with a random vocabulary token and label ``None``.
    """
    if not 0.0 <= corrupt_rate <= 1.0:
        raise ValueError("corrupt_rate must be in [0, 1]")
    corpora = list(corpora)
    index = _sentence_index(corpora)
    diags = AlignBuildDiagnostics()
    examples: list[AlignmentExample] = []

    for pair in pairs:
        directions = (
            (pair.source_lang, pair.target_term, pair.source_term, "tgt2src"),
            (pair.target_lang, pair.source_term, pair.target_term, "src2tgt"),
        )
        for sentence_lang, query, gold, direction in directions:
            sentence = index.get((pair.sample_id, sentence_lang))
            if sentence is None:
                diags.missing_sentences += 1
                diags.notes.append(
                    f"no {sentence_lang} sentence for sample {pair.sample_id}")
                continue
            for chunk in chunk_sentence(sentence, window_len, stride):
                label = gold if contains_normalized(chunk, gold) else None
                examples.append(AlignmentExample(
                    chunk=chunk, query=query, label=label,
                    meta=ExampleMeta(sample_id=pair.sample_id, kind=pair.kind,
                                     direction=direction)))

    quota = round(corrupt_rate * len(examples))
    if quota > 0:
        vocab = _vocabulary(corpora)
        if not vocab:
            raise ValueError("cannot corrupt queries: corpus vocabulary is empty")
        rng = random.Random(seed)
        for idx in sorted(rng.sample(range(len(examples)), quota)):
            example = examples[idx]
            example.query = rng.choice(vocab)
            example.label = None
            example.meta.corrupted = True
    return examples, diags


def write_alignment_examples(examples: list[AlignmentExample], path,
                             header_extra: Optional[dict] = None) -> None:
    path = Path(path)
    header = {"format": "ttcsw-align-examples", "version": 1}
    if header_extra:
        header.update(header_extra)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for ex in examples:
            record = {
                "input_text": ex.input_text,
                "label": ex.label_text,
                "meta": {
                    "sample_id": ex.meta.sample_id,
                    "kind": ex.meta.kind,
                    "direction": ex.meta.direction,
                    "corrupted": ex.meta.corrupted,
                },
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    tmp.replace(path)
