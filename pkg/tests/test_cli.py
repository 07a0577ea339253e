import json

import pytest

from ttcsw.cli import main
from ttcsw.corpus import export_corpus, import_corpus
from ttcsw.serde import emit_triplets

from .conftest import make_bilingual_corpus, make_tta_backends


@pytest.fixture
def corpus_file(tmp_path, bilingual_corpus):
    corpus, _, _ = bilingual_corpus
    path = tmp_path / "corpus.jsonl"
    export_corpus(corpus, path)
    return path


def table_file(tmp_path, name, table):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(table, ensure_ascii=False), encoding="utf-8")
    return path


@pytest.fixture
def mock_backend_files(tmp_path, bilingual_corpus):
    from ttcsw.backends import TableBackend
    from ttcsw.tta import TtaConfig, build_augmented_inputs, select_candidates

    corpus, src_texts, phrase_table = bilingual_corpus
    translator = table_file(tmp_path, "translator", src_texts)
    align_table = {}
    for sample in corpus.samples:
        src = src_texts[sample.text]
        for en, es in phrase_table.items():
            if f" {en} " in f" {src} " and f" {es} " in f" {sample.text} ":
                align_table[f"{sample.text} <SEP> {en}"] = es
                align_table[f"{src} <SEP> {es}"] = en
    aligner = table_file(tmp_path, "aligner", align_table)

    # the generator table answers the gold serialization for the plain
    # sentence and for every augmented variant the pipeline can build
    gen_table = {}
    aligner_backend = TableBackend(align_table)
    cfg = TtaConfig()
    for sample in corpus.samples:
        gold = emit_triplets(sample.gold)
        gen_table[sample.text] = gold
        s_src = src_texts[sample.text]
        phrases = select_candidates(sample.text, s_src, aligner_backend, cfg)
        for aug in build_augmented_inputs(sample.text, s_src, phrases,
                                          cfg.n_candidates):
            gen_table[aug.sentence] = gold
    generator = table_file(tmp_path, "generator", gen_table)
    return translator, aligner, generator


class TestIngestStats:
    def test_ingest_then_stats(self, semeval_dir, tmp_path, capsys):
        out = tmp_path / "mini.jsonl"
        assert main(["ingest", "--input-dir", str(semeval_dir),
                     "--language", "en", "--split", "train",
                     "--out", str(out)]) == 0
        assert import_corpus(out).split == "train"

        stats_json = tmp_path / "stats.json"
        assert main(["stats", "--corpus", str(out),
                     "--json", str(stats_json)]) == 0
        captured = capsys.readouterr().out
        assert "sentences:        4" in captured
        payload = json.loads(stats_json.read_text(encoding="utf-8"))
        assert payload["n_sentences"] == 4
        assert payload["n_aspects"] == 4
        assert payload["n_opinions"] == 5

    def test_stats_all_splits(self, semeval_dir, capsys):
        assert main(["stats", "--input-dir", str(semeval_dir),
                     "--language", "en", "--split", "all"]) == 0
        assert "sentences:        8" in capsys.readouterr().out

    def test_missing_dir_is_data_error(self, tmp_path):
        assert main(["ingest", "--input-dir", str(tmp_path / "nope"),
                     "--language", "en", "--out",
                     str(tmp_path / "x.jsonl")]) == 2


class TestBuildCommands:
    def test_build_csw_identity_deterministic(self, corpus_file, tmp_path):
        out1 = tmp_path / "csw1.jsonl"
        out2 = tmp_path / "csw2.jsonl"
        for out in (out1, out2):
            assert main(["--seed", "7", "build-csw",
                         "--corpus", str(corpus_file),
                         "--target-lang", "en", "--translator", "identity",
                         "--switch-rate", "0.5", "--out", str(out),
                         "--pairs-out", str(out) + ".pairs"]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_build_csw_switch_rate_zero_equals_ct(self, corpus_file, tmp_path):
        out = tmp_path / "csw.jsonl"
        assert main(["build-csw", "--corpus", str(corpus_file),
                     "--target-lang", "en", "--translator", "identity",
                     "--switch-rate", "0", "--out", str(out)]) == 0
        corpus = import_corpus(out)
        ct = [s for s in corpus.samples if s.id.endswith("::ct")]
        csw = [s for s in corpus.samples if s.id.endswith("::csw")]
        assert [(s.text, s.gold) for s in ct] == [(s.text, s.gold) for s in csw]

    def test_build_dict_csw(self, corpus_file, tmp_path):
        lexicon = tmp_path / "lex.tsv"
        lexicon.write_text("sushi\tsushi-en\nhotel\thotel-en\n",
                           encoding="utf-8")
        out = tmp_path / "dict.jsonl"
        assert main(["--seed", "3", "build-dict-csw",
                     "--corpus", str(corpus_file), "--lexicon", str(lexicon),
                     "--ratio", "0.3", "--strategy", "dynamic", "--epoch", "1",
                     "--out", str(out),
                     "--provenance-out", str(out) + ".prov"]) == 0
        assert import_corpus(out)

    def test_build_align(self, corpus_file, tmp_path):
        csw_out = tmp_path / "csw.jsonl"
        pairs = tmp_path / "pairs.jsonl"
        assert main(["build-csw", "--corpus", str(corpus_file),
                     "--target-lang", "en", "--translator", "identity",
                     "--out", str(csw_out), "--pairs-out", str(pairs)]) == 0
        out = tmp_path / "align.jsonl"
        assert main(["--seed", "1", "build-align", "--pairs", str(pairs),
                     "--corpora", str(corpus_file), str(csw_out),
                     "--window-len", "16", "--corrupt-rate", "0.1",
                     "--out", str(out)]) == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert json.loads(lines[0])["format"] == "ttcsw-align-examples"
        assert len(lines) > 1


class TestPredictTtaEval:
    def test_predict_eval_roundtrip(self, corpus_file, mock_backend_files,
                                    tmp_path, capsys):
        _, _, generator = mock_backend_files
        pred = tmp_path / "pred.jsonl"
        assert main(["predict", "--corpus", str(corpus_file),
                     "--generator", f"table:{generator}",
                     "--out", str(pred)]) == 0
        report_base = tmp_path / "report"
        assert main(["eval", "--gold", str(corpus_file),
                     "--predictions", str(pred),
                     "--out", str(report_base)]) == 0
        out = capsys.readouterr().out
        assert " 100.0" in out
        assert (tmp_path / "report.tsv").exists()
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "report.png").exists()

    def test_eval_all_null(self, corpus_file, tmp_path, capsys):
        assert main(["eval", "--gold", str(corpus_file), "--all-null",
                     "--out", str(tmp_path / "allnull"), "--no-figures"]) == 0
        assert (tmp_path / "allnull.tsv").exists()
        assert not (tmp_path / "allnull.png").exists()
        payload = json.loads((tmp_path / "allnull.json").read_text("utf-8"))
        report = payload["reports"]["synthetic-es:all-null"]
        # 2 of 20 synthetic samples have empty gold
        assert report["wP"] == pytest.approx(0.1)

    def test_tta_replay_and_byte_identical(self, corpus_file,
                                           mock_backend_files, tmp_path):
        translator, aligner, generator = mock_backend_files
        cache = tmp_path / "cache"
        args_common = [
            "--seed", "11", "--cache-dir", str(cache), "tta",
            "--corpus", str(corpus_file),
            "--translator", f"table:{translator}",
            "--aligner", f"table:{aligner}",
            "--generator", f"table:{generator}",
        ]
        out1 = tmp_path / "tta1.jsonl"
        assert main(args_common + ["--out", str(out1)]) == 0
        out2 = tmp_path / "tta2.jsonl"
        assert main(args_common + ["--replay", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_tta_scores_perfect_with_oracle(self, corpus_file,
                                            mock_backend_files, tmp_path,
                                            capsys):
        translator, aligner, generator = mock_backend_files
        pred = tmp_path / "tta.jsonl"
        assert main(["tta", "--corpus", str(corpus_file),
                     "--translator", f"table:{translator}",
                     "--aligner", f"table:{aligner}",
                     "--generator", f"table:{generator}",
                     "--out", str(pred)]) == 0
        assert main(["eval", "--gold", str(corpus_file),
                     "--predictions", str(pred)]) == 0
        assert " 100.0" in capsys.readouterr().out

    def test_replay_cold_cache_is_backend_error(self, corpus_file,
                                                mock_backend_files, tmp_path):
        translator, aligner, generator = mock_backend_files
        assert main(["--cache-dir", str(tmp_path / "cold"), "tta",
                     "--corpus", str(corpus_file),
                     "--translator", f"table:{translator}",
                     "--aligner", f"table:{aligner}",
                     "--generator", f"table:{generator}",
                     "--replay", "--out", str(tmp_path / "x.jsonl")]) == 3


class TestSweep:
    def test_grid_rows_and_files(self, corpus_file, mock_backend_files,
                                 tmp_path):
        translator, aligner, generator = mock_backend_files
        out = tmp_path / "sweep"
        assert main(["sweep", "--corpus", str(corpus_file),
                     "--translator", f"table:{translator}",
                     "--aligner", f"table:{aligner}",
                     "--generator", f"table:{generator}",
                     "--max-ngrams", "1,2,3", "--n-candidates", "5,10",
                     "--out", str(out)]) == 0
        lines = (tmp_path / "sweep.tsv").read_text("utf-8").splitlines()
        assert len(lines) == 7  # header + 6 grid points
        assert (tmp_path / "sweep.png").exists()

    def test_deterministic_with_cache(self, corpus_file, mock_backend_files,
                                      tmp_path):
        translator, aligner, generator = mock_backend_files
        outputs = []
        for name in ("s1", "s2"):
            out = tmp_path / name
            assert main(["--cache-dir", str(tmp_path / "cache"), "sweep",
                         "--corpus", str(corpus_file),
                         "--translator", f"table:{translator}",
                         "--aligner", f"table:{aligner}",
                         "--generator", f"table:{generator}",
                         "--max-ngrams", "1,2", "--n-candidates", "5",
                         "--no-figures", "--out", str(out)]) == 0
            outputs.append((tmp_path / f"{name}.tsv").read_bytes())
        assert outputs[0] == outputs[1]


class TestUsageErrors:
    def test_unknown_backend_spec(self, corpus_file, tmp_path):
        assert main(["predict", "--corpus", str(corpus_file),
                     "--generator", "martian",
                     "--out", str(tmp_path / "x.jsonl")]) == 1

    def test_missing_backend(self, corpus_file, tmp_path):
        assert main(["predict", "--corpus", str(corpus_file),
                     "--out", str(tmp_path / "x.jsonl")]) == 1

    def test_eval_needs_predictions_or_all_null(self, corpus_file):
        assert main(["eval", "--gold", str(corpus_file)]) == 1
