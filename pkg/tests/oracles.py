"""Independent brute-force reference for the weighted overlap metrics.

Written before (and kept independent of) ttcsw.metrics.  Everything here
is deliberately naive: explicit loops, exact Fraction arithmetic, no code
shared with the package.  Triplets are plain (aspect, opinion, polarity)
string tuples; polarity is one of "POS", "NEG", "NEU", "NONE".
"""

from fractions import Fraction
import string

_PUNCT = string.punctuation


def ref_tokens(term):
    out = []
    for raw in term.lower().split():
        stripped = raw.strip(_PUNCT)
        out.append(stripped if stripped else raw)
    return out


def ref_overlap(a, b):
    remaining = list(ref_tokens(b))
    n = 0
    for tok in ref_tokens(a):
        if tok in remaining:
            remaining.remove(tok)
            n += 1
    return n


def ref_sim(t1, t2, ignore_polarity=False, half_weight_single_slot=False):
    a1, o1, p1 = t1
    a2, o2, p2 = t2
    if not ignore_polarity and p1 != p2:
        return Fraction(0)
    if a1 == "" and o1 == "":
        return Fraction(1) if (a2 == "" and o2 == "") else Fraction(0)
    score = Fraction(0)
    if a1 != "" and o1 != "":
        score += Fraction(ref_overlap(o1, o2), 2 * len(ref_tokens(o1)))
        score += Fraction(ref_overlap(a1, a2), 2 * len(ref_tokens(a1)))
    else:
        x1, x2 = (a1, a2) if a1 != "" else (o1, o2)
        denom = len(ref_tokens(x1))
        if half_weight_single_slot:
            denom *= 2
        score += Fraction(ref_overlap(x1, x2), denom)
    return score


EMPTY = ("", "", "NONE")


def ref_weighted_scores(predictions, golds, ignore_polarity=False,
                        half_weight_single_slot=False,
                        empty_gold_in_recall=True):
    """Exact wP/wR/wF1 as Fractions.

    predictions/golds: equal-length lists of per-sample triplet lists.
    """
    assert len(predictions) == len(golds)
    p_num = Fraction(0)
    p_den = 0
    r_num = Fraction(0)
    r_den = 0
    for preds, gold in zip(predictions, golds):
        preds = list(preds) if preds else [EMPTY]
        if gold:
            gold_p = list(gold)
            gold_r = list(gold)
        else:
            gold_p = [EMPTY]
            gold_r = [EMPTY] if empty_gold_in_recall else []
        for t in preds:
            best = Fraction(0)
            for g in gold_p:
                s = ref_sim(t, g, ignore_polarity, half_weight_single_slot)
                if s > best:
                    best = s
            p_num += best
            p_den += 1
        for g in gold_r:
            best = Fraction(0)
            for t in preds:
                s = ref_sim(g, t, ignore_polarity, half_weight_single_slot)
                if s > best:
                    best = s
            r_num += best
            r_den += 1
    wp = p_num / p_den if p_den else Fraction(0)
    wr = r_num / r_den if r_den else Fraction(0)
    wf1 = 2 * wp * wr / (wp + wr) if wp + wr else Fraction(0)
    return wp, wr, wf1
