"""Test-time augmentation: translate the input, align candidate phrases,
build code-switched variants, predict on all of them, and vote.

The unmodified target-language input always participates as one voting
list, so augmentation can only refine the baseline prediction, and a
backend failure degrades to that baseline instead of aborting (unless
strict mode is on).
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .align_data import SEP_TOKEN
from .backends import ALIGN_NONE, Backend, BackendError, GenerationRequest, \
    TranslationRequest
from .corpus import Corpus, Polarity, Sample, Triplet
from .metrics import sim
from .serde import parse_triplets
from .textutil import contains_normalized, find_normalized, norm_key, \
    replace_span, ws_tokens

logger = logging.getLogger(__name__)

Span = tuple[int, int]

TGT_WITH_SRC_PHRASE = "TGT_WITH_SRC_PHRASE"
SRC_WITH_TGT_PHRASE = "SRC_WITH_TGT_PHRASE"


@dataclass(frozen=True)
class TtaConfig:
    max_ngram: int = 3
    top_k_phrases: int = 10
    n_candidates: int = 10
    vote_threshold: float = 0.5
    min_support_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.max_ngram < 1:
            raise ValueError("max_ngram must be >= 1")
        if self.top_k_phrases < 1:
            raise ValueError("top_k_phrases must be >= 1")
        if not 0.0 < self.vote_threshold <= 1.0:
            raise ValueError("vote_threshold must be in (0, 1]")
        if not 0.0 <= self.min_support_fraction <= 1.0:
            raise ValueError("min_support_fraction must be in [0, 1]")


@dataclass(frozen=True)
class AlignedPhrase:
    phrase: str
    source_side: str  # "src" | "tgt": which sentence the phrase came from
    phrase_span: Span  # within its own sentence
    aligned_text: str
    aligned_span: Optional[Span]  # within the opposite sentence
    length_tokens: int

    @property
    def src_text(self) -> str:
        return self.phrase if self.source_side == "src" else self.aligned_text

    @property
    def tgt_text(self) -> str:
        return self.aligned_text if self.source_side == "src" else self.phrase


@dataclass(frozen=True)
class AugmentedInput:
    sentence: str
    type: str
    provenance: AlignedPhrase


@dataclass
class CandidateList:
    triplets: list[Triplet]
    n_unalignable: int = 0
    source: str = "plain"


def enumerate_phrases(sentence: str, max_ngram: int) -> list[tuple[str, Span]]:
    """All contiguous 1..max_ngram token phrases with their character
    spans, position-major, deduplicated keeping the first occurrence."""
    if max_ngram < 1:
        raise ValueError("max_ngram must be >= 1")
    tokens: list[tuple[str, Span]] = []
    offset = 0
    for token in sentence.split():
        start = sentence.index(token, offset)
        tokens.append((token, (start, start + len(token))))
        offset = start + len(token)
    phrases: list[tuple[str, Span]] = []
    seen: set[str] = set()
    for i in range(len(tokens)):
        for n in range(1, max_ngram + 1):
            if i + n > len(tokens):
                break
            span = (tokens[i][1][0], tokens[i + n - 1][1][1])
            phrase = sentence[span[0]:span[1]]
            if phrase in seen:
                continue
            seen.add(phrase)
            phrases.append((phrase, span))
    return phrases


def _is_none_answer(answer: str) -> bool:
    return answer.strip() in ("", ALIGN_NONE)


def select_candidates(s_tgt: str, s_src: str, aligner: Backend,
                      cfg: TtaConfig, target_lang: Optional[str] = None,
                      ) -> list[AlignedPhrase]:
    """Query the aligner for every phrase of both sentences against the
    opposite one; keep answers that are not `None`, rank by token length
    (ties: earlier position), return the pooled top k."""
    src_phrases = enumerate_phrases(s_src, cfg.max_ngram)
    tgt_phrases = enumerate_phrases(s_tgt, cfg.max_ngram)
    queries = [f"{s_tgt} {SEP_TOKEN} {phrase}" for phrase, _ in src_phrases]
    queries += [f"{s_src} {SEP_TOKEN} {phrase}" for phrase, _ in tgt_phrases]
    if not queries:
        return []
    response = aligner.generate(GenerationRequest(
        inputs=tuple(queries), task="align", target_lang_hint=target_lang))

    candidates: list[AlignedPhrase] = []
    sides = ([("src", s_tgt, p) for p in src_phrases]
             + [("tgt", s_src, p) for p in tgt_phrases])
    for (side, opposite, (phrase, span)), answer in zip(sides, response.outputs):
        if _is_none_answer(answer):
            continue
        aligned = answer.strip()
        candidates.append(AlignedPhrase(
            phrase=phrase, source_side=side, phrase_span=span,
            aligned_text=aligned,
            aligned_span=find_normalized(opposite, aligned),
            length_tokens=len(ws_tokens(phrase))))
    candidates.sort(key=lambda p: (-p.length_tokens, p.phrase_span[0],
                                   0 if p.source_side == "src" else 1))
    return candidates[:cfg.top_k_phrases]


def build_augmented_inputs(s_tgt: str, s_src: str,
                           phrases: Sequence[AlignedPhrase],
                           n_candidates: int) -> list[AugmentedInput]:
    """One substitution per augmented sentence, two types per phrase
    (target sentence carrying the source-language text and vice versa),
    alternating in phrase rank order and truncated to ``n_candidates``."""
    augmented: list[AugmentedInput] = []
    for phrase in phrases:
        if phrase.aligned_span is None:
            logger.debug("phrase %r: aligned text not locatable, skipped",
                         phrase.phrase)
            continue
        if phrase.source_side == "src":
            tgt_variant = replace_span(s_tgt, phrase.aligned_span, phrase.phrase)
            src_variant = replace_span(s_src, phrase.phrase_span,
                                       phrase.aligned_text)
        else:
            tgt_variant = replace_span(s_tgt, phrase.phrase_span,
                                       phrase.aligned_text)
            src_variant = replace_span(s_src, phrase.aligned_span, phrase.phrase)
        augmented.append(AugmentedInput(tgt_variant, TGT_WITH_SRC_PHRASE, phrase))
        augmented.append(AugmentedInput(src_variant, SRC_WITH_TGT_PHRASE, phrase))
    return augmented[:n_candidates]


def align_candidates(raw_triplets: Sequence[Triplet], input_type: str,
                     s_tgt: str, aligner: Backend,
                     provenance: Optional[AlignedPhrase] = None,
                     target_lang: Optional[str] = None) -> CandidateList:
    """Map candidate triplet terms into the target language.

    Terms matching the substituted phrase map back through the known
    pair without an aligner call; terms already present in the target
    sentence are left alone; everything else is queried, and a `None`
    answer keeps the original term but flags it unalignable.
    """
    to_query: dict[str, None] = {}
    for triplet in raw_triplets:
        for term in (triplet.aspect, triplet.opinion):
            if not term:
                continue
            if provenance is not None and norm_key(term) == norm_key(provenance.src_text):
                continue
            if contains_normalized(s_tgt, term):
                continue
            to_query[term] = None

    answers: dict[str, str] = {}
    if to_query:
        queries = [f"{s_tgt} {SEP_TOKEN} {term}" for term in to_query]
        response = aligner.generate(GenerationRequest(
            inputs=tuple(queries), task="align", target_lang_hint=target_lang))
        answers = dict(zip(to_query, response.outputs))

    result = CandidateList(triplets=[], source=input_type)

    def map_term(term: str) -> str:
        if not term:
            return term
        if provenance is not None and norm_key(term) == norm_key(provenance.src_text):
            return provenance.tgt_text
        if contains_normalized(s_tgt, term):
            return term
        answer = answers.get(term, ALIGN_NONE)
        if _is_none_answer(answer):
            result.n_unalignable += 1
            return term
        return answer.strip()

    for triplet in raw_triplets:
        result.triplets.append(Triplet(map_term(triplet.aspect),
                                       map_term(triplet.opinion),
                                       triplet.polarity))
    return result


def vote(candidate_lists: Sequence[Sequence[Triplet]], cfg: TtaConfig) -> list[Triplet]:
    """Cluster triplets across candidate lists and keep the well-supported
    clusters.

    Two triplets belong together when their polarities match and the
    symmetric non-polar similarity min(sim(a,b), sim(b,a)) reaches the
    vote threshold (clusters are the connected components, so the result
    does not depend on list order).  A cluster survives with support from
    at least ceil(min_support_fraction * #lists) distinct lists; its
    representative takes the most frequent surface string per slot (ties:
    longer, then lexicographically smaller).
    """
    if not candidate_lists:
        return []
    if len(candidate_lists) == 1:
        # a single voter: nothing to reconcile
        return list(candidate_lists[0])
    instances: list[tuple[int, int, Triplet]] = []
    for list_idx, triplets in enumerate(candidate_lists):
        for pos, triplet in enumerate(triplets):
            instances.append((list_idx, pos, triplet))
    if not instances:
        return []

    parent = list(range(len(instances)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for i in range(len(instances)):
        for j in range(i + 1, len(instances)):
            t1, t2 = instances[i][2], instances[j][2]
            if t1.polarity != t2.polarity:
                continue
            if min(sim(t1, t2, ignore_polarity=True),
                   sim(t2, t1, ignore_polarity=True)) >= cfg.vote_threshold:
                union(i, j)

    clusters: dict[int, list[int]] = {}
    for i in range(len(instances)):
        clusters.setdefault(find(i), []).append(i)

    needed = max(1, math.ceil(cfg.min_support_fraction * len(candidate_lists)))
    survivors = []
    for members in clusters.values():
        support = len({instances[i][0] for i in members})
        if support < needed:
            continue
        first = min((instances[i][0], instances[i][1]) for i in members)
        survivors.append((first, members))
    survivors.sort()

    def pick_surface(values: list[str]) -> str:
        counts = Counter(values)
        return sorted(counts, key=lambda v: (-counts[v], -len(v), v))[0]

    output = []
    for _, members in survivors:
        triplets = [instances[i][2] for i in members]
        output.append(Triplet(
            pick_surface([t.aspect for t in triplets]),
            pick_surface([t.opinion for t in triplets]),
            triplets[0].polarity))
    return output


@dataclass
class TtaDiagnostics:
    n_augmented: int = 0
    n_unalignable: int = 0
    fell_back: bool = False


@dataclass
class TtaPrediction:
    id: str
    triplets: list[Triplet] = field(default_factory=list)
    diagnostics: TtaDiagnostics = field(default_factory=TtaDiagnostics)


def predict_plain(samples: Sequence[Sample], generator: Backend,
                  target_lang: Optional[str] = None) -> list[list[Triplet]]:
    """Run the generation backend on raw sentences (no augmentation)."""
    if not samples:
        return []
    response = generator.generate(GenerationRequest(
        inputs=tuple(s.text for s in samples), task="aste",
        target_lang_hint=target_lang))
    return [parse_triplets(output)[0] for output in response.outputs]


def tta_predict(sample: Sample, translator: Backend, aligner: Backend,
                generator: Backend, cfg: TtaConfig,
                source_lang: str = "en", strict: bool = False) -> TtaPrediction:
    """Full augmentation pipeline for one target-language sample."""
    target_lang = sample.language
    plain = predict_plain([sample], generator, target_lang)[0]
    prediction = TtaPrediction(id=sample.id, triplets=plain)
    try:
        s_src = translator.translate(TranslationRequest(
            texts=(sample.text,), source_lang=target_lang,
            target_lang=source_lang)).outputs[0]
        phrases = select_candidates(sample.text, s_src, aligner, cfg,
                                    target_lang)
        augmented = build_augmented_inputs(sample.text, s_src, phrases,
                                           cfg.n_candidates)
        prediction.diagnostics.n_augmented = len(augmented)
        candidate_lists: list[Sequence[Triplet]] = [plain]
        if augmented:
            response = generator.generate(GenerationRequest(
                inputs=tuple(a.sentence for a in augmented), task="aste",
                target_lang_hint=target_lang))
            for aug, output in zip(augmented, response.outputs):
                parsed, _ = parse_triplets(output)
                aligned = align_candidates(parsed, aug.type, sample.text,
                                           aligner, provenance=aug.provenance,
                                           target_lang=target_lang)
                prediction.diagnostics.n_unalignable += aligned.n_unalignable
                candidate_lists.append(aligned.triplets)
        prediction.triplets = vote(candidate_lists, cfg)
    except BackendError as exc:
        if strict:
            raise
        logger.warning("sample %s: augmentation failed (%s); falling back "
                       "to the plain prediction", sample.id, exc)
        prediction.triplets = plain
        prediction.diagnostics.fell_back = True
    return prediction


def tta_predict_corpus(corpus: Corpus, translator: Backend, aligner: Backend,
                       generator: Backend, cfg: TtaConfig,
                       source_lang: str = "en", strict: bool = False,
                       jobs: int = 1) -> list[TtaPrediction]:
    """tta_predict over a corpus; results ordered by input position even
    when fanned out over a thread pool."""
    if jobs <= 1:
        return [tta_predict(s, translator, aligner, generator, cfg,
                            source_lang, strict) for s in corpus.samples]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(tta_predict, s, translator, aligner, generator,
                               cfg, source_lang, strict)
                   for s in corpus.samples]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# predictions file
# ---------------------------------------------------------------------------

PREDICTIONS_FORMAT = "ttcsw-predictions"


def write_predictions(predictions: Sequence[TtaPrediction], path,
                      header_extra: Optional[dict] = None) -> None:
    path = Path(path)
    header = {"format": PREDICTIONS_FORMAT, "version": 1}
    if header_extra:
        header.update(header_extra)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for pred in predictions:
            record = {
                "id": pred.id,
                "triplets": [{"aspect": t.aspect, "opinion": t.opinion,
                              "polarity": t.polarity.value}
                             for t in pred.triplets],
                "diagnostics": {
                    "n_augmented": pred.diagnostics.n_augmented,
                    "n_unalignable": pred.diagnostics.n_unalignable,
                    "fell_back": pred.diagnostics.fell_back,
                },
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    tmp.replace(path)


def read_predictions(path) -> list[TtaPrediction]:
    path = Path(path)
    predictions = []
    header = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if header is None:
                if record.get("format") != PREDICTIONS_FORMAT:
                    raise ValueError(f"{path}:{lineno}: not a predictions file")
                header = record
                continue
            diag_record = record.get("diagnostics", {})
            predictions.append(TtaPrediction(
                id=record["id"],
                triplets=[Triplet(t["aspect"], t["opinion"],
                                  Polarity.parse(t["polarity"]))
                          for t in record["triplets"]],
                diagnostics=TtaDiagnostics(
                    n_augmented=diag_record.get("n_augmented", 0),
                    n_unalignable=diag_record.get("n_unalignable", 0),
                    fell_back=diag_record.get("fell_back", False))))
    if header is None:
        raise ValueError(f"{path}: empty predictions file")
    return predictions
