"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import os
import random
import time
from contextlib import contextmanager

import numpy as np
import pytest
from conftest import SYNTHETIC_CORPUS, endpoint, fixture_asr, fixture_mt
from mockserver import MockServer
from oracles import edit_graph_distances
from test_pipeline import clip_echo, tone_clips, write_long_wav

from codeswitch_eval.bench import degradation, measure_latency, measure_throughput
from codeswitch_eval.cli import main
from codeswitch_eval.corpus import AudioRef, Corpus, Segment, load_corpus, validate_corpus
from codeswitch_eval.metrics.bleu import corpus_bleu
from codeswitch_eval.metrics.edit import levenshtein, word_errors
from codeswitch_eval.metrics.meteor import meteor, meteor_details
from codeswitch_eval.metrics.report import HIGHER, MetricReport, MetricScore, strip_metadata
from codeswitch_eval.metrics.scoring import rank_order, rank_systems
from codeswitch_eval.pipeline import Cascade, batch_run, cascade, read_checkpoint, transcribe
from codeswitch_eval.preprocess.audio import AudioClip, mel_spectrogram, resample_audio
from codeswitch_eval.preprocess.text import normalize_text
from codeswitch_eval.tokenize.bpe import decode, encode, is_space_token, tokenize, train_bpe
from codeswitch_eval.tokenize.demo import load_demo_model

SAMPLE_SENTENCE = "أنا أحب التفاح"
PUBLISHED_BLEU = [8.6, 26.2, 34.3, 37.5, 38, 38.2, 52.27, 53.01, 53.64]

ARABIC = [chr(c) for c in range(0x0621, 0x064B)] + ["ى", "ة", "ـ", "،", "؟", "٣"]
LATIN = list("abcdefghijklmnopqrstuvwxyzABCXYZ0123456789.,!?:;()[]<>/-_'\"")
EMOJI = ["😀", "👍🏽", "🇪🇬", "❤️", "🧑‍💻", "🙏", ":)", ":-(", ";)"]
OTHER = [" ", "  ", "\t", "\n", "é", "ß", "中", "‍", "́", "www.x.com", "http://a.b/c", "[noise]"]


def random_mixed(rng, max_len=30):
    pools = [ARABIC, LATIN, EMOJI, OTHER]
    out = []
    for _ in range(rng.randint(0, max_len)):
        pool = pools[rng.choices(range(4), (5, 4, 1, 2))[0]]
        out.append(rng.choice(pool))
    if rng.random() < 0.2:  # arbitrary code points, surrogates excluded
        out.append(chr(rng.choice([rng.randint(0x20, 0xD7FF), rng.randint(0xE000, 0x10FFFF)])))
    return "".join(out)


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def check(number, title):
        ok = False
        try:
            yield
            ok = True
        finally:
            with capsys.disabled():
                print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}: {title}")

    return check


def test_01_metric_oracle_equivalence(criterion):
    with criterion(1, "DP Levenshtein (char and word) equals exhaustive edit search, < 60 s"):
        start = time.perf_counter()
        nodes, dist = edit_graph_distances(("a", "b", "c"), 6)
        chars = ["".join(n) for n in nodes]
        words = [" ".join({"a": "x", "b": "yy", "c": "ز"}[s] for s in n) for n in nodes]
        n = len(nodes)
        bad_char = bad_word = 0
        for i in range(n):
            for j in range(n):
                d = dist[i, j]
                bad_char += levenshtein(chars[i], chars[j]) != d
                bad_word += word_errors(words[i], words[j])[0] != d
        elapsed = time.perf_counter() - start
        assert n == sum(3 ** k for k in range(7))
        assert bad_char == 0 and bad_word == 0
        assert elapsed < 60, f"{elapsed:.1f} s"


def test_02_bleu_correctness(criterion):
    with criterion(2, "BLEU identity = 100, zero overlap = 0, 'the cat sat' closed form"):
        rng = random.Random(2)
        vocab = "the cat sat on a mat , . ! قطة على 3.5 meeting".split()
        for _ in range(100):
            corpus = [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 12)))
                      for _ in range(rng.randint(1, 10))]
            assert corpus_bleu(corpus, corpus) == 100.0
        assert corpus_bleu(["dog runs"], ["the cat sat"]) == 0.0
        expected = 100 * math.exp(1 - 6 / 3)  # p1 = p2 = p3 = 1, order 3, BP = e^(1 - 6/3)
        assert abs(corpus_bleu(["the cat sat"], ["the cat sat on the mat"]) - expected) < 1e-6


def test_03_meteor_formula(criterion):
    with criterion(3, "METEOR m=2/chunks=1 gives 0.9375, single-word identity gives 0.5"):
        d = meteor_details("the cat", "the cat")
        assert (d.matches, d.chunks) == (2, 1)
        assert abs(d.score - 0.9375) < 1e-9
        assert abs(meteor("cat", "cat") - 0.5) < 1e-9


def test_04_tokenizer_properties(criterion):
    with criterion(4, "BPE round trip on 10,000 strings, 5-run determinism, 12 vs 5 tokens"):
        rng = random.Random(4)
        lines = [" ".join(rng.choice(["انا", "عندي", "التفاح", "meeting", "بكرة", "project", "أحب"])
                          for _ in range(rng.randint(3, 9))) for _ in range(200)]
        models = [train_bpe(lines, 300) for _ in range(5)]
        assert all(m == models[0] for m in models[1:])
        model = models[0]
        for _ in range(10_000):
            text = random_mixed(rng)
            assert decode(model, encode(model, text)) == text, repr(text)
        counts = {name: sum(not is_space_token(t) for t in tokenize(load_demo_model(name), SAMPLE_SENTENCE))
                  for name in ("char_fallback", "arabic_merges")}
        assert counts == {"char_fallback": 12, "arabic_merges": 5}


def test_05_preprocess_invariants(criterion):
    with criterion(5, "normalize idempotent on 10,000 strings, 3000x80 mel, silent clamp, 440 Hz resample"):
        rng = random.Random(5)
        for _ in range(10_000):
            once = normalize_text(random_mixed(rng))
            assert normalize_text(once) == once
        rate = 16000
        t = np.arange(30 * rate) / rate
        assert mel_spectrogram(AudioClip(0.5 * np.sin(2 * np.pi * 440 * t), rate)).shape == (3000, 80)
        silent = mel_spectrogram(AudioClip(np.zeros(30 * rate), rate)).data
        assert silent.shape == (3000, 80) and np.all(silent == silent[0, 0]) and np.isfinite(silent[0, 0])
        for src in (44100, 48000, 8000):
            x = 0.5 * np.sin(2 * np.pi * 440 * np.arange(src) / src)
            y = resample_audio(AudioClip(x, src), 16000).samples
            analytic = 0.5 * np.sin(2 * np.pi * 440 * np.arange(len(y)) / 16000)
            # zero padding past the ends makes the outer half-filter of output differ from an endless sine
            margin = math.ceil(32 * 16000 / src) + 1
            assert np.abs(y - analytic)[margin:-margin].max() < 1e-3, src


def test_06_corpus_checks(criterion, capsys):
    test_file, train_file = os.environ.get("ARZEN_ST_TEST"), os.environ.get("ARZEN_ST_TRAIN")
    if test_file and train_file:
        title = "ArzEn-ST split validation reports 1,402 test / 3,344 train"
        a, b = load_corpus(test_file), load_corpus(train_file)
        corpus, expect = Corpus(a.segments + b.segments, name="arzen-st"), {"test": 1402, "train": 3344}
    else:
        title = "dataset absent: synthetic 20-segment fixture reports 12 test / 8 train"
        corpus, expect = load_corpus(SYNTHETIC_CORPUS), {"test": 12, "train": 8}
    with criterion(6, title):
        report = validate_corpus(corpus, expect)
        assert report.passed, report.deltas
        assert {k: report.split_counts[k] for k in expect} == expect
        assert not validate_corpus(corpus, {k: v + 1 for k, v in expect.items()}).passed


def test_07_pipeline_contracts(criterion, tmp_path, monkeypatch):
    with criterion(7, "clip order, in-flight bound, kill-and-resume, 75 s = 3 ASR + 1 MT calls"):
        with MockServer() as srv:
            answered = []
            srv.state.asr_fn = lambda s, r: answered.append(clip_echo(s, r)) or answered[-1]
            srv.state.delay_fn = lambda path, p: (0.3 - 0.1 * int(clip_echo(p["samples"], p["rate"])[4:])
                                                  if path == "audio/transcriptions" else 0)
            out = transcribe(tone_clips(3), endpoint(srv, max_in_flight=3))
            assert answered == ["clip2", "clip1", "clip0"]
            assert [c.text for c in out] == ["clip0", "clip1", "clip2"]

        corpus = load_corpus(SYNTHETIC_CORPUS)
        with MockServer() as srv:
            srv.state.asr_fn, srv.state.mt_fn = fixture_asr(corpus), fixture_mt(corpus)
            srv.state.delay_fn = lambda path, p: 0.01
            asr, mt = endpoint(srv, max_in_flight=8), endpoint(srv, max_in_flight=8)
            reference = batch_run(corpus, asr, mt, "en", tmp_path / "ref.jsonl", max_in_flight=3)
            assert 1 < srv.state.peak <= 3

            real_run, done = Cascade.run, [0]

            def dying_run(self, *a, **kw):
                if done[0] >= len(corpus) // 2:
                    raise KeyboardInterrupt("killed")
                done[0] += 1
                return real_run(self, *a, **kw)

            ck = tmp_path / "ck.jsonl"
            monkeypatch.setattr(Cascade, "run", dying_run)
            with pytest.raises(KeyboardInterrupt):
                batch_run(corpus, asr, mt, "en", ck, max_in_flight=3)
            monkeypatch.setattr(Cascade, "run", real_run)
            with ck.open("a", encoding="utf-8") as f:
                f.write('{"segment_id": "syn')  # torn final write
            assert 0 < len(read_checkpoint(ck)) < len(corpus)
            resumed = batch_run(corpus, asr, mt, "en", ck, max_in_flight=3)
            assert resumed.hypotheses == reference.hypotheses
            assert srv.state.peak <= 3

        write_long_wav(tmp_path / "long.wav", 75.0)
        seg = Segment("long", "test", "x", audio=AudioRef(str(tmp_path / "long.wav"), 75.0))
        with MockServer() as srv:
            srv.state.asr_fn = clip_echo
            cascade(seg, endpoint(srv), endpoint(srv), "en")
            assert srv.state.calls["audio/transcriptions"] == 3
            assert srv.state.calls["chat/completions"] == 1


def test_08_degradation_math(criterion):
    with criterion(8, "full vs Q5 BLEU 53.64 vs 53.01 gives 1.2 % within 0.1 pp"):
        full = MetricReport("full", "en", [MetricScore("bleu", 53.64)], "fp")
        quant = MetricReport("q5", "en", [MetricScore("bleu", 53.01)], "fp")
        pct = 100 * degradation(full, quant)["bleu"]
        assert abs(pct - 1.2) <= 0.1, pct


def test_09_bench_calibration(criterion):
    with criterion(9, "10 tokens/s mock measured within 10 %, 100 ms mock median within 20 ms"):
        with MockServer() as srv:
            srv.state.delay_fn = lambda path, p: 0.2
            srv.state.mt_fn = lambda m: "one two"
            srv.state.usage_tokens = lambda text: 2
            tps = measure_throughput(endpoint(srv), ["p"] * 6, warmup=2).tokens_per_s
            assert abs(tps - 10.0) <= 1.0, tps
        with MockServer() as srv:
            srv.state.delay_fn = lambda path, p: 0.1
            clip = AudioClip(np.zeros(16000 * 30), 16000)
            lat = measure_latency(endpoint(srv), clip, repeats=5).latency_s_per_clip
            assert abs(lat - 0.1) <= 0.02, lat


def test_10_ranking_invariance(criterion):
    with criterion(10, "leaderboard unchanged under x -> 2x+1; published BLEU column ranks 53.64 first"):
        values = {f"sys{i}": v for i, v in enumerate(PUBLISHED_BLEU)}
        before = rank_order(values, HIGHER)
        assert values[before[0]] == 53.64
        assert rank_order({k: 2 * v + 1 for k, v in values.items()}, HIGHER) == before
        reports = [MetricReport(k, "en", [MetricScore("bleu", v)], "fp") for k, v in values.items()]
        assert [e.system_id for e in rank_systems(reports, "bleu")] == before
        # report level, values kept inside the BLEU range
        small = {k: v / 2 for k, v in values.items()}
        mapped = [MetricReport(k, "en", [MetricScore("bleu", 2 * v + 1)], "fp") for k, v in small.items()]
        assert [e.system_id for e in rank_systems(mapped, "bleu")] == before


def _e2e(root, server):
    root.mkdir()
    cfg = root / "harness.toml"
    lines = [f'output_dir = "{root / "out"}"', "[corpus]", f'path = "{SYNTHETIC_CORPUS}"',
             "[pipeline]", "max_in_flight = 4"]
    for role in ("asr", "mt", "embeddings", "grader"):
        lines += [f"[endpoints.{role}]", f'base_url = "{server.url}"', f'model_id = "mock-{role}"',
                  "backoff_s = 0"]
    cfg.write_text("\n".join(lines) + "\n", encoding="utf-8")
    out = root / "out"
    steps = [
        ["pipeline", "-c", cfg, "--target", "en"],
        ["evaluate", "-c", cfg, "--hyp", out / "cascade.en.hyp.jsonl", "--target", "en", "--system-id", "cascade"],
        ["evaluate", "-c", cfg, "--hyp", out / "cascade.asr.hyp.jsonl", "--target", "cs",
         "--system-id", "cascade-asr", "--metrics", "wer,cer,bleu,eed"],
        ["report", "-c", cfg, out / "cascade.en.report.json", "--rank", "bleu"],
    ]
    for argv in steps:
        code = main([str(a) for a in argv])
        assert code == 0, (argv[0], code)
    return out


def test_11_end_to_end_smoke(criterion, tmp_path, capsys):
    with criterion(11, "pipeline -> evaluate -> report on the fixture < 30 s, JSON stable modulo metadata"):
        corpus = load_corpus(SYNTHETIC_CORPUS)
        with MockServer() as srv:
            srv.state.asr_fn, srv.state.mt_fn = fixture_asr(corpus), fixture_mt(corpus)
            srv.state.grade_fn = lambda messages: "Grade: 8"
            outs, times = [], []
            for run in ("a", "b"):
                start = time.perf_counter()
                outs.append(_e2e(tmp_path / run, srv))
                times.append(time.perf_counter() - start)
        assert max(times) < 30, times
        a, b = outs
        names = sorted(p.name for p in a.iterdir() if p.suffix in (".json", ".jsonl") and "checkpoint" not in p.name)
        assert names == sorted(p.name for p in b.iterdir() if p.suffix in (".json", ".jsonl")
                               and "checkpoint" not in p.name)
        assert {"cascade.en.report.json", "cascade-asr.cs.report.json", "report.json", "cascade.en.runlog.json",
                "cascade.en.hyp.jsonl"} <= set(names)
        for name in names:
            if name.endswith(".jsonl"):
                assert (a / name).read_bytes() == (b / name).read_bytes(), name
            else:
                da = json.loads((a / name).read_text(encoding="utf-8"))
                db = json.loads((b / name).read_text(encoding="utf-8"))
                assert "metadata" in da, name
                assert json.dumps(strip_metadata(da), sort_keys=True) == json.dumps(strip_metadata(db), sort_keys=True), name
        report = MetricReport.load(a / "cascade.en.report.json")
        assert all(s.available for s in report.scores), [s.metric for s in report.scores if not s.available]
        assert report.coverage == 1.0
        capsys.readouterr()
