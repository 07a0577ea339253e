import json
import random

import pytest

from ttcsw.backends import FunctionBackend, TableBackend
from ttcsw.corpus import Corpus, Polarity, Sample, TermSpans, Triplet
from ttcsw.serde import emit_triplets

# small bilingual vocabulary for synthetic corpora; the target side is
# Spanish-flavoured, the source side English-flavoured
WORD_PAIRS = [
    ("sushi", "sushi"), ("cinta", "belt"), ("transportadora", "conveyor"),
    ("hotel", "hotel"), ("comida", "food"), ("servicio", "service"),
    ("habitacion", "room"), ("playa", "beach"), ("vista", "view"),
    ("personal", "staff"), ("precio", "price"), ("desayuno", "breakfast"),
]
OPINION_PAIRS = [
    ("recomendable", "recommendable"), ("excelente", "excellent"),
    ("malo", "bad"), ("ruidoso", "noisy"), ("limpio", "clean"),
    ("acogedor", "cozy"), ("caro", "expensive"), ("perfecto", "perfect"),
]
POLARITIES = [Polarity.POS, Polarity.NEG, Polarity.NEU]


def _spans_for(sample: Sample) -> list[TermSpans]:
    spans = []
    for t in sample.gold:
        aspect = sample.text.find(t.aspect) if t.aspect else -1
        opinion = sample.text.find(t.opinion) if t.opinion else -1
        spans.append(TermSpans(
            aspect=((aspect, aspect + len(t.aspect)),) if aspect >= 0 else None,
            opinion=((opinion, opinion + len(t.opinion)),) if opinion >= 0 else None,
        ))
    return spans


def make_bilingual_corpus(n_samples: int, seed: int = 0,
                          empty_every: int = 10):
    """Paired synthetic corpora (target language + its source translation).

    Every sentence carries a unique marker token that survives phrase
    substitution, so oracle generators can key on it.  Returns
    (tgt_corpus, src_texts, phrase_table) where phrase_table maps
    en-phrase <-> es-phrase for the aligner mock.
    """
    rng = random.Random(seed)
    samples = []
    src_texts = {}
    phrase_table = {}
    for i in range(n_samples):
        marker = f"m{i}tok"
        if empty_every and i % empty_every == empty_every - 1:
            tgt = f"{marker} nada que decir aqui"
            src = f"{marker} nothing to say here"
            sample = Sample(id=f"syn{i}", text=tgt, language="es", gold=[])
            sample.spans = []
        else:
            n_triplets = 1 + (i % 2)
            gold = []
            tgt_parts = [marker]
            src_parts = [marker]
            # within a sample, triplets share no aspect or opinion word, so
            # distinct gold triplets never exceed the voting threshold
            used_w: set = set()
            used_o: set = set()
            for _ in range(n_triplets):
                wi = rng.randrange(len(WORD_PAIRS))
                oi = rng.randrange(len(OPINION_PAIRS))
                while wi in used_w or oi in used_o:
                    wi = rng.randrange(len(WORD_PAIRS))
                    oi = rng.randrange(len(OPINION_PAIRS))
                used_w.add(wi)
                used_o.add(oi)
                es_a, en_a = WORD_PAIRS[wi]
                es_o, en_o = OPINION_PAIRS[oi]
                polarity = POLARITIES[(wi + oi) % len(POLARITIES)]
                tgt_parts.append(f"el {es_a} es {es_o}")
                src_parts.append(f"the {en_a} is {en_o}")
                gold.append(Triplet(es_a, es_o, polarity))
                phrase_table[en_a] = es_a
                phrase_table[en_o] = es_o
            tgt = " y ".join([tgt_parts[0] + " " + tgt_parts[1]] + tgt_parts[2:])
            src = " and ".join([src_parts[0] + " " + src_parts[1]] + src_parts[2:])
            sample = Sample(id=f"syn{i}", text=tgt, language="es", gold=gold)
            sample.spans = _spans_for(sample)
        samples.append(sample)
        src_texts[sample.text] = src
    corpus = Corpus(name="synthetic-es", language="es", split="test",
                    samples=samples)
    return corpus, src_texts, phrase_table


def make_tta_backends(corpus, src_texts, phrase_table):
    """Fixture backends: table translator, phrase-table aligner, and a
    generator that answers the gold serialization for any input carrying
    the sample's marker token."""
    import re

    translator = TableBackend(dict(src_texts), name="translator")

    align_table = {}
    for sample in corpus.samples:
        src = src_texts[sample.text]
        for en, es in phrase_table.items():
            if f" {en} " in f" {src} " and f" {es} " in f" {sample.text} ":
                align_table[f"{sample.text} <SEP> {en}"] = es
                align_table[f"{src} <SEP> {es}"] = en
    aligner = TableBackend(align_table, name="aligner")

    by_marker = {re.search(r"m(\d+)tok", s.text).group(1): emit_triplets(s.gold)
                 for s in corpus.samples}

    def generate(text: str) -> str:
        m = re.search(r"m(\d+)tok", text)
        if m is None:
            return ""
        return by_marker.get(m.group(1), "")

    generator = FunctionBackend(generate, name="generator")
    return translator, aligner, generator


@pytest.fixture
def bilingual_corpus():
    return make_bilingual_corpus(20, seed=3)


# ---------------------------------------------------------------------------
# miniature dataset in the shared-task JSON format
# ---------------------------------------------------------------------------

SEMEVAL_TRAIN = [
    {
        "sent_id": "mini-001",
        "text": "Even though the price is decent , I would not recommend this hotel .",
        "opinions": [
            {
                "Source": [[], []],
                "Target": [["this hotel"], ["56:66"]],
                "Polar_expression": [["would not recommend"], ["36:55"]],
                "Polarity": "Negative",
                "Intensity": "Standard",
            },
            {
                "Source": [[], []],
                "Target": [["price"], ["16:21"]],
                "Polar_expression": [["decent"], ["25:31"]],
                "Polarity": "Positive",
                "Intensity": "Standard",
            },
        ],
    },
    {
        "sent_id": "mini-002",
        "text": "Great view , shame about the noisy street below .",
        "opinions": [
            {
                "Source": [[], []],
                "Target": [["view"], ["6:10"]],
                "Polar_expression": [["Great"], ["0:5"]],
                "Polarity": "Positive",
                "Intensity": "Strong",
            },
            {
                "Source": [[], []],
                "Target": [["street"], ["35:41"]],
                "Polar_expression": [["shame", "noisy"], ["13:18", "29:34"]],
                "Polarity": "Negative",
                "Intensity": "Average",
            },
        ],
    },
    {
        "sent_id": "mini-003",
        "text": "We stayed two nights in March .",
        "opinions": [],
    },
    {
        "sent_id": "mini-004",
        "text": "The breakfast was fine .",
        "opinions": [
            {
                "Source": [[], []],
                "Target": [["breakfast"], ["4:13"]],
                "Polar_expression": [["fine"], ["18:22"]],
                "Polarity": "MixedUp",
                "Intensity": "Standard",
            },
            {
                "Source": [[], []],
                "Target": [[], []],
                "Polar_expression": [["fine"], ["18:22"]],
                "Polarity": "Neutral",
                "Intensity": "Standard",
            },
        ],
    },
]

SEMEVAL_TEST = [
    {
        "sent_id": "mini-101",
        "text": "Nothing to report .",
        "opinions": [],
    },
    {
        "sent_id": "mini-102",
        "text": "The staff were friendly .",
        "opinions": [
            {
                "Source": [[], []],
                "Target": [["staff"], ["4:9"]],
                "Polar_expression": [["friendly"], ["15:23"]],
                "Polarity": "Positive",
                "Intensity": "Standard",
            },
        ],
    },
]


@pytest.fixture
def semeval_dir(tmp_path):
    dataset = tmp_path / "mini_en"
    dataset.mkdir()
    (dataset / "train.json").write_text(json.dumps(SEMEVAL_TRAIN), encoding="utf-8")
    (dataset / "dev.json").write_text(json.dumps(SEMEVAL_TEST), encoding="utf-8")
    (dataset / "test.json").write_text(json.dumps(SEMEVAL_TEST), encoding="utf-8")
    return dataset
