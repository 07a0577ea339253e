"""Command-line entry point.

Verbs: ingest, stats, build-csw, build-dict-csw, build-align, predict,
tta, eval, sweep.  Exit codes: 0 success, 1 usage error, 2 data error,
3 backend error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import align_data, csw, metrics, report, tta
from .backends import (AlwaysNoneAligner, Backend, BackendError, CacheMissError,
                       DictTranslator, HttpBackend, IdentityBackend,
                       TableBackend, with_cache)
from .config import ConfigError, RunConfig
from .corpus import (Corpus, CorpusError, concat_samples, corpus_stats,
                     export_corpus, import_corpus, ingest_semeval,
                     ingest_semeval_all)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class UsageError(Exception):
    pass


def make_backend(spec: str | None, cfg: RunConfig, replay: bool = False) -> Backend:
    """Build a backend from a CLI spec string.

    Specs: ``http:<url>`` (or a bare URL), ``identity``/``echo``,
    ``none``, ``table:<path>`` (JSON lookup table), ``dict:<path>``
    (word lexicon).  Falls back to the configured backend URL.
    """
    if spec is None:
        spec = cfg.backend_url
    if not spec:
        raise UsageError("no backend given (flag, config backend_url or "
                         "TTCSW_BACKEND_URL)")
    if spec in ("identity", "echo"):
        backend: Backend = IdentityBackend()
    elif spec == "none":
        backend = AlwaysNoneAligner()
    elif spec.startswith("table:"):
        backend = TableBackend.from_file(spec[len("table:"):])
    elif spec.startswith("dict:"):
        backend = DictTranslator(csw.load_lexicon(spec[len("dict:"):]))
    elif spec.startswith(("http://", "https://")):
        backend = HttpBackend(spec, auth_token=cfg.auth_token,
                              timeout=cfg.timeout, retries=cfg.retries,
                              max_batch=cfg.max_batch)
    elif spec.startswith("http:"):
        backend = HttpBackend(spec[len("http:"):], auth_token=cfg.auth_token,
                              timeout=cfg.timeout, retries=cfg.retries,
                              max_batch=cfg.max_batch)
    else:
        raise UsageError(f"unrecognized backend spec: {spec!r}")
    if cfg.cache_dir:
        backend = with_cache(backend, cfg.cache_dir, replay=replay)
    elif replay:
        raise UsageError("--replay requires a cache dir")
    return backend


def _load_corpus(path: str) -> Corpus:
    return import_corpus(path)


def _gold_pairs(corpus: Corpus):
    return [(s.id, s.gold) for s in corpus.samples]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ingest(args, cfg: RunConfig) -> int:
    corpus = ingest_semeval(args.input_dir, args.language, args.split,
                            name=args.dataset)
    export_corpus(corpus, args.out, header_extra=cfg.artifact_header())
    print(f"wrote {len(corpus)} samples to {args.out}")
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    if args.corpus:
        corpora = [_load_corpus(args.corpus)]
        name = corpora[0].name
    else:
        if not args.input_dir:
            raise UsageError("stats needs --corpus or --input-dir")
        if args.split == "all":
            corpora = list(ingest_semeval_all(
                args.input_dir, args.language, name=args.dataset).values())
        else:
            corpora = [ingest_semeval(args.input_dir, args.language,
                                      args.split, name=args.dataset)]
        name = args.dataset or Path(args.input_dir).name
    stats = corpus_stats(concat_samples(corpora))
    print(f"dataset: {name}")
    print(f"  sentences:        {stats.n_sentences}")
    print(f"  aspect terms:     {stats.n_aspects}")
    print(f"  opinion terms:    {stats.n_opinions}")
    print(f"  triplets:         {stats.n_triplets}")
    print(f"  empty-label rate: {100.0 * stats.empty_label_rate:.1f}%")
    if args.json:
        payload = dict(cfg.artifact_header(dataset=name), **stats.to_dict())
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n",
                                   encoding="utf-8")
    return EXIT_OK


def cmd_build_csw(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus)
    translator = make_backend(args.translator, cfg, replay=args.replay)
    modes = tuple(m.strip().upper() for m in args.modes.split(","))
    out, pairs, diags = csw.build_csw_corpus(
        corpus, translator, args.target_lang, switch_rate=args.switch_rate,
        seed=cfg.seed, strict=cfg.strict or args.strict, modes=modes)
    export_corpus(out, args.out, header_extra=cfg.artifact_header())
    if args.pairs_out:
        _write_pairs(pairs, args.pairs_out)
    if args.provenance_out:
        _write_provenance(out, args.provenance_out)
    print(f"wrote {len(out)} samples ({len(pairs)} parallel pairs, "
          f"{len(diags.excluded_samples)} samples excluded)")
    return EXIT_OK


def _write_pairs(pairs, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "ttcsw-parallel-pairs", "version": 1})
                 + "\n")
        for pair in pairs:
            fh.write(json.dumps({
                "source_term": pair.source_term, "target_term": pair.target_term,
                "kind": pair.kind, "sample_id": pair.sample_id,
                "source_lang": pair.source_lang, "target_lang": pair.target_lang,
            }, ensure_ascii=False) + "\n")
    tmp.replace(path)


def _read_pairs(path) -> list[csw.ParallelTermPair]:
    pairs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if lineno == 1 and record.get("format") == "ttcsw-parallel-pairs":
                continue
            pairs.append(csw.ParallelTermPair(**record))
    return pairs


def _write_provenance(corpus: Corpus, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "ttcsw-csw-provenance", "version": 1})
                 + "\n")
        for sample in corpus.samples:
            if not isinstance(sample, csw.CswSample):
                continue
            fh.write(json.dumps({
                "id": sample.id, "mode": sample.mode,
                "switches": [{"kind": s.kind, "index": s.index,
                              "original": s.original,
                              "replacement": s.replacement,
                              "language": s.language}
                             for s in sample.switches],
            }, ensure_ascii=False) + "\n")
    tmp.replace(path)


def cmd_build_dict_csw(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus)
    lexicon = csw.load_lexicon(args.lexicon)
    out = csw.build_dict_csw(corpus, lexicon, ratio=args.ratio,
                             strategy=args.strategy, seed=cfg.seed,
                             epoch=args.epoch)
    export_corpus(out, args.out, header_extra=cfg.artifact_header(
        ratio=args.ratio, strategy=args.strategy, epoch=args.epoch))
    if args.provenance_out:
        _write_provenance(out, args.provenance_out)
    print(f"wrote {len(out)} samples to {args.out}")
    return EXIT_OK


def cmd_build_align(args, cfg: RunConfig) -> int:
    pairs = _read_pairs(args.pairs)
    corpora = [_load_corpus(p) for p in args.corpora]
    examples, diags = align_data.build_alignment_examples(
        pairs, corpora, window_len=args.window_len, stride=args.stride,
        corrupt_rate=args.corrupt_rate, seed=cfg.seed)
    align_data.write_alignment_examples(
        examples, args.out, header_extra=cfg.artifact_header())
    n_corrupted = sum(1 for e in examples if e.meta.corrupted)
    print(f"wrote {len(examples)} examples ({n_corrupted} corrupted, "
          f"{diags.missing_sentences} directions skipped)")
    return EXIT_OK


def cmd_predict(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus)
    generator = make_backend(args.generator, cfg, replay=args.replay)
    triplet_lists = tta.predict_plain(corpus.samples, generator,
                                      target_lang=corpus.language)
    predictions = [tta.TtaPrediction(id=s.id, triplets=triplets)
                   for s, triplets in zip(corpus.samples, triplet_lists)]
    tta.write_predictions(predictions, args.out,
                          header_extra=cfg.artifact_header(mode=args.mode))
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return EXIT_OK


def _tta_config(args, cfg: RunConfig) -> tta.TtaConfig:
    return tta.TtaConfig(
        max_ngram=args.max_ngram, top_k_phrases=args.top_k_phrases,
        n_candidates=args.n_candidates, vote_threshold=args.vote_threshold,
        min_support_fraction=args.min_support_fraction, seed=cfg.seed)


def cmd_tta(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus)
    translator = make_backend(args.translator, cfg, replay=args.replay)
    aligner = make_backend(args.aligner, cfg, replay=args.replay)
    generator = make_backend(args.generator, cfg, replay=args.replay)
    tta_cfg = _tta_config(args, cfg)
    predictions = tta.tta_predict_corpus(
        corpus, translator, aligner, generator, tta_cfg,
        source_lang=cfg.source_lang, strict=cfg.strict or args.strict,
        jobs=max(1, args.jobs or cfg.jobs))
    tta.write_predictions(predictions, args.out,
                          header_extra=cfg.artifact_header(
                              tta={"max_ngram": tta_cfg.max_ngram,
                                   "top_k_phrases": tta_cfg.top_k_phrases,
                                   "n_candidates": tta_cfg.n_candidates,
                                   "vote_threshold": tta_cfg.vote_threshold,
                                   "min_support_fraction":
                                       tta_cfg.min_support_fraction}))
    print(f"wrote {len(predictions)} predictions to {args.out}")
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    gold = _load_corpus(args.gold)
    if args.all_null:
        result = metrics.all_null_baseline(gold, config=_metrics_config(args))
        name = f"{gold.name}:all-null"
    else:
        if not args.predictions:
            raise UsageError("eval needs --predictions or --all-null")
        predictions = tta.read_predictions(args.predictions)
        result = metrics.weighted_scores(
            [(p.id, p.triplets) for p in predictions], _gold_pairs(gold),
            config=_metrics_config(args))
        name = gold.name
    print(report.render_metrics_table({name: result}))
    if args.out:
        report.write_metrics_report(
            {name: result}, args.out, header=cfg.artifact_header(),
            figures=not args.no_figures)
    return EXIT_OK


def _metrics_config(args) -> metrics.MetricsConfig:
    return metrics.MetricsConfig(
        renormalize_single_slot=not args.half_weight_single_slot,
        empty_gold_in_recall=not args.no_empty_gold_in_recall)


def cmd_sweep(args, cfg: RunConfig) -> int:
    corpus = _load_corpus(args.corpus)
    translator = make_backend(args.translator, cfg, replay=args.replay)
    aligner = make_backend(args.aligner, cfg, replay=args.replay)
    generator = make_backend(args.generator, cfg, replay=args.replay)
    gold = _gold_pairs(corpus)
    rows = []
    for max_ngram in _int_list(args.max_ngrams):
        for n_candidates in _int_list(args.n_candidates):
            tta_cfg = tta.TtaConfig(
                max_ngram=max_ngram, top_k_phrases=args.top_k_phrases,
                n_candidates=n_candidates,
                vote_threshold=args.vote_threshold,
                min_support_fraction=args.min_support_fraction,
                seed=cfg.seed)
            predictions = tta.tta_predict_corpus(
                corpus, translator, aligner, generator, tta_cfg,
                source_lang=cfg.source_lang, strict=cfg.strict,
                jobs=max(1, args.jobs or cfg.jobs))
            result = metrics.weighted_scores(
                [(p.id, p.triplets) for p in predictions], gold)
            rows.append({"max_ngram": max_ngram, "n_candidates": n_candidates,
                         "wP": result.wP, "wR": result.wR, "wF1": result.wF1,
                         "NP_wP": result.NP_wP, "NP_wR": result.NP_wR,
                         "NP_wF1": result.NP_wF1})
            print(f"max_ngram={max_ngram} n_candidates={n_candidates} "
                  f"wF1={100.0 * result.wF1:.1f}")
    report.write_sweep_report(rows, args.out, header=cfg.artifact_header(),
                              figures=not args.no_figures)
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttcsw",
        description="Cross-lingual ASTE toolkit: code-switched corpus "
                    "construction, test-time augmentation and evaluation.")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="override config seed")
    parser.add_argument("--cache-dir", help="backend response cache directory")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a SemEval-2022 task 10 dataset")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--language", required=True)
    p.add_argument("--split", default="train",
                   choices=("train", "validation", "test"))
    p.add_argument("--dataset", help="dataset name for reports")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("--corpus", help="normalized corpus file")
    p.add_argument("--input-dir", help="raw dataset directory")
    p.add_argument("--language", default="en")
    p.add_argument("--split", default="all",
                   choices=("train", "validation", "test", "all"))
    p.add_argument("--dataset")
    p.add_argument("--json", help="write machine-readable stats here")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("build-csw", help="boundary-aware code-switched corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--target-lang", required=True)
    p.add_argument("--translator", help="backend spec")
    p.add_argument("--switch-rate", type=float, default=0.5)
    p.add_argument("--modes", default="ct,csw")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--replay", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--pairs-out", help="parallel term pairs file")
    p.add_argument("--provenance-out", help="switched-term side file")
    p.set_defaults(fn=cmd_build_csw)

    p = sub.add_parser("build-dict-csw", help="dictionary-based baseline corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--ratio", type=float, default=0.3)
    p.add_argument("--strategy", default="static", choices=("static", "dynamic"))
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--provenance-out")
    p.set_defaults(fn=cmd_build_dict_csw)

    p = sub.add_parser("build-align", help="alignment-model training examples")
    p.add_argument("--pairs", required=True)
    p.add_argument("--corpora", nargs="+", required=True)
    p.add_argument("--window-len", type=int, default=128)
    p.add_argument("--stride", type=int)
    p.add_argument("--corrupt-rate", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build_align)

    p = sub.add_parser("predict", help="plain generation on a corpus (no TTA)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--generator", help="backend spec")
    p.add_argument("--mode", default="CL", choices=("CL", "CT", "CSW"))
    p.add_argument("--replay", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("tta", help="test-time augmentation pipeline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--translator")
    p.add_argument("--aligner")
    p.add_argument("--generator")
    p.add_argument("--max-ngram", type=int, default=3)
    p.add_argument("--top-k-phrases", type=int, default=10)
    p.add_argument("--n-candidates", type=int, default=10)
    p.add_argument("--vote-threshold", type=float, default=0.5)
    p.add_argument("--min-support-fraction", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--replay", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_tta)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True, help="gold corpus file")
    p.add_argument("--predictions")
    p.add_argument("--all-null", action="store_true",
                   help="score the empty-prediction baseline")
    p.add_argument("--half-weight-single-slot", action="store_true",
                   help="keep the 1/2 factor when one slot is empty")
    p.add_argument("--no-empty-gold-in-recall", action="store_true",
                   help="empty-gold samples do not count in the recall "
                        "denominator")
    p.add_argument("--out", help="report basename (.tsv/.json/.png)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("sweep", help="grid over max_ngram x n_candidates")
    p.add_argument("--corpus", required=True)
    p.add_argument("--translator")
    p.add_argument("--aligner")
    p.add_argument("--generator")
    p.add_argument("--max-ngrams", default="1,2,3")
    p.add_argument("--n-candidates", default="5,10")
    p.add_argument("--top-k-phrases", type=int, default=10)
    p.add_argument("--vote-threshold", type=float, default=0.5)
    p.add_argument("--min-support-fraction", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument("--replay", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.cache_dir:
            cfg.cache_dir = args.cache_dir
        return args.fn(args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CacheMissError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
