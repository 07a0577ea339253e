"""Weighted overlap-based precision/recall/F1 for triplet extraction.

Partial credit comes from word overlap between paired terms instead of
exact span matching: each predicted triplet is paired with its most
similar gold triplet (precision side) and vice versa (recall side).
An empty triplet list on either side is replaced by a single empty
triplet before scoring, so predicting nothing on a sample with no gold
annotations counts as an exact match.  The non-polar (NP) variants skip
the polarity gate and measure term boundaries only.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass, field

from .corpus import Corpus, EMPTY_TRIPLET, Triplet

_PUNCT = string.punctuation


@dataclass(frozen=True)
class MetricsConfig:
    """The two scoring conventions that the source tables do not pin down,
    kept as switches for sensitivity checks."""

    # divide a lone non-empty slot by len(X1) instead of 2*len(X1)
    renormalize_single_slot: bool = True
    # a sample with empty gold contributes an empty triplet to the recall
    # denominator (symmetric empty convention)
    empty_gold_in_recall: bool = True


DEFAULT_CONFIG = MetricsConfig()


def term_tokens(term: str) -> list[str]:
    """Normalized word tokens: lowercase, whitespace split, surrounding
    punctuation stripped (pure-punctuation tokens are kept whole so a term
    never normalizes to zero tokens)."""
    tokens = []
    for raw in term.casefold().split():
        stripped = raw.strip(_PUNCT)
        tokens.append(stripped if stripped else raw)
    return tokens


def overlap(a: str, b: str) -> int:
    """Multiset intersection size of the normalized tokens of a and b."""
    counts_a = Counter(term_tokens(a))
    counts_b = Counter(term_tokens(b))
    return sum((counts_a & counts_b).values())


def sim(t1: Triplet, t2: Triplet, ignore_polarity: bool = False,
        config: MetricsConfig = DEFAULT_CONFIG) -> float:
    """Similarity of t2 to t1 in [0, 1]; t1's term lengths set the
    denominators, so sim is asymmetric."""
    if not ignore_polarity and t1.polarity != t2.polarity:
        return 0.0
    if t1.is_empty:
        return 1.0 if t2.is_empty else 0.0
    if t1.aspect and t1.opinion:
        return (overlap(t1.opinion, t2.opinion) / (2 * len(term_tokens(t1.opinion)))
                + overlap(t1.aspect, t2.aspect) / (2 * len(term_tokens(t1.aspect))))
    if t1.aspect:
        x1, x2 = t1.aspect, t2.aspect
    else:
        x1, x2 = t1.opinion, t2.opinion
    denom = len(term_tokens(x1))
    if not config.renormalize_single_slot:
        denom *= 2
    return overlap(x1, x2) / denom


@dataclass
class MetricsReport:
    """wP/wR/wF1 with their non-polar variants, as fractions in [0, 1].

    n_pred_triplets / n_gold_triplets are the precision and recall
    denominators after the empty-triplet convention.
    """

    wP: float = 0.0
    wR: float = 0.0
    wF1: float = 0.0
    NP_wP: float = 0.0
    NP_wR: float = 0.0
    NP_wF1: float = 0.0
    n_pred_triplets: int = 0
    n_gold_triplets: int = 0
    n_samples: int = 0

    def to_dict(self) -> dict:
        return {
            "wP": self.wP, "wR": self.wR, "wF1": self.wF1,
            "NP_wP": self.NP_wP, "NP_wR": self.NP_wR, "NP_wF1": self.NP_wF1,
            "n_pred_triplets": self.n_pred_triplets,
            "n_gold_triplets": self.n_gold_triplets,
            "n_samples": self.n_samples,
        }


def _f1(p: float, r: float) -> float:
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass
class _Accumulator:
    p_num: float = 0.0
    p_den: int = 0
    r_num: float = 0.0
    r_den: int = 0

    def precision(self) -> float:
        return self.p_num / self.p_den if self.p_den else 0.0

    def recall(self) -> float:
        return self.r_num / self.r_den if self.r_den else 0.0


def weighted_scores(predictions, golds, ignore_polarity: bool = False,
                    config: MetricsConfig = DEFAULT_CONFIG) -> MetricsReport:
    """Corpus-level weighted scores.

    predictions/golds: sequences of (sample_id, triplet list) pairs (or
    dicts keyed by sample id), matched up by id.  The polar and non-polar
    families are both computed; with ignore_polarity=True the polar
    fields also skip the gate (for boundary-only evaluation).
    """
    pred_map = _as_ordered_pairs(predictions)
    gold_map = _as_ordered_pairs(golds)
    if [i for i, _ in pred_map] != [i for i, _ in gold_map]:
        pred_ids = {i for i, _ in pred_map}
        gold_ids = {i for i, _ in gold_map}
        raise ValueError(
            "prediction/gold sample ids do not match "
            f"(only in predictions: {sorted(pred_ids - gold_ids)[:5]}, "
            f"only in gold: {sorted(gold_ids - pred_ids)[:5]})")

    polar = _Accumulator()
    nonpolar = _Accumulator()
    for (_, preds), (_, gold) in zip(pred_map, gold_map):
        preds = list(preds) if preds else [EMPTY_TRIPLET]
        gold_for_p = list(gold) if gold else [EMPTY_TRIPLET]
        if gold:
            gold_for_r = list(gold)
        else:
            gold_for_r = [EMPTY_TRIPLET] if config.empty_gold_in_recall else []
        for acc, gate in ((polar, ignore_polarity), (nonpolar, True)):
            for t in preds:
                acc.p_num += max(sim(t, g, gate, config) for g in gold_for_p)
                acc.p_den += 1
            for g in gold_for_r:
                acc.r_num += max(sim(g, t, gate, config) for t in preds)
                acc.r_den += 1

    report = MetricsReport(
        wP=polar.precision(), wR=polar.recall(),
        NP_wP=nonpolar.precision(), NP_wR=nonpolar.recall(),
        n_pred_triplets=polar.p_den, n_gold_triplets=polar.r_den,
        n_samples=len(pred_map),
    )
    report.wF1 = _f1(report.wP, report.wR)
    report.NP_wF1 = _f1(report.NP_wP, report.NP_wR)
    return report


def _as_ordered_pairs(per_sample) -> list[tuple[str, list[Triplet]]]:
    if isinstance(per_sample, dict):
        return list(per_sample.items())
    return [(sample_id, triplets) for sample_id, triplets in per_sample]


def all_null_baseline(corpus: Corpus,
                      config: MetricsConfig = DEFAULT_CONFIG) -> MetricsReport:
    """Score the baseline that predicts an empty list for every sample."""
    golds = [(s.id, s.gold) for s in corpus.samples]
    preds = [(s.id, []) for s in corpus.samples]
    return weighted_scores(preds, golds, config=config)
