import random

from ttcsw.corpus import Corpus, Polarity, Sample, Triplet

WORDS = [("sushi", "sushi"), ("comida", "food"), ("vista", "view"),
         ("playa", "beach"), ("servicio", "service"), ("precio", "price")]
OPINIONS = [("buena", "good"), ("mala", "bad"), ("cara", "pricey"),
            ("perfecta", "perfect")]
POLS = [Polarity.POS, Polarity.NEG, Polarity.NEU]


def make_bilingual_corpus(n, seed=0):
    """Tiny paired corpus mirroring the primary suite's synthetic shape:
    unique marker token per sentence, disjoint terms within a sample."""
    rng = random.Random(seed)
    samples, src_texts, phrase_table = [], {}, {}
    for i in range(n):
        marker = f"m{i}tok"
        if i % 5 == 4:
            sample = Sample(f"srv{i}", f"{marker} sin opiniones", "es", [])
            src_texts[sample.text] = f"{marker} no opinions"
        else:
            wi = rng.randrange(len(WORDS))
            oi = rng.randrange(len(OPINIONS))
            es_a, en_a = WORDS[wi]
            es_o, en_o = OPINIONS[oi]
            tgt = f"{marker} la {es_a} es {es_o}"
            src = f"{marker} the {en_a} is {en_o}"
            sample = Sample(f"srv{i}", tgt, "es",
                            [Triplet(es_a, es_o, POLS[(wi + oi) % 3])])
            src_texts[tgt] = src
            phrase_table[en_a] = es_a
            phrase_table[en_o] = es_o
        samples.append(sample)
    corpus = Corpus("server-int", "es", "test", samples)
    return corpus, src_texts, phrase_table
