"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``ACCEPTANCE <criterion>: PASS|FAIL (...)`` line to
the terminal before asserting, so ``pytest -v`` shows the measured values.
"""
import math
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from oracles import brute_force_ap
from sgloc.cli import main
from sgloc.data import CorpusSpec, split_corpus, synthesize_corpus
from sgloc.localizer import (
    LocalizerConfig,
    TrainConfig,
    apply_variant,
    evaluate,
    forward,
    init_params,
    predict,
    pseudo_labels,
    relevance_and_topk,
    run_gradcheck_suite,
    train,
)
from sgloc.qa_metrics import Taxonomy, token_accuracy, wups_score
from sgloc.retrieval_metrics import MomentPrediction, moment_map

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
CORPUS = CorpusSpec(n_videos=64, min_frames=32, max_frames=32, snr=4.0, seed=0)
MODEL = LocalizerConfig(d_m=32, k_layers=2, m_heads=4)
TRAINING = TrainConfig(steps=800, batch_size=16, lr=1e-3, seed=0)
ABLATION_SEEDS = 5


@pytest.fixture
def verdict(capsys):
    def emit(criterion: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"{criterion}: {detail}"
    return emit


@pytest.fixture(scope="module")
def corpus_split():
    return split_corpus(synthesize_corpus(CORPUS).samples, 0.25)


@pytest.fixture(scope="module")
def trained(corpus_split):
    train_set, _ = corpus_split
    start = time.perf_counter()
    result = train(train_set, MODEL, TRAINING)
    return result, time.perf_counter() - start


def test_gradient_correctness(verdict):
    report = run_gradcheck_suite(n_configs=100, seed=0)
    ok = report.max_rel_error < 1e-4 and report.seconds < 60
    verdict("gradient correctness", ok,
            f"max rel. error {report.max_rel_error:.2e} over {report.n_entries} entries in "
            f"{report.n_configs} configs, {report.seconds:.1f}s")


def test_mask_semantics(verdict):
    rng = np.random.default_rng(0)
    worst, checked = 0.0, 0
    for _ in range(50):
        heads = int(rng.choice([1, 2, 4]))
        cfg = LocalizerConfig(d_v=int(rng.integers(2, 9)), d_s=int(rng.integers(2, 9)), d_t=int(rng.integers(2, 9)),
                              d_m=heads * int(rng.integers(1, 9)), k_layers=2, m_heads=heads)
        params = init_params(cfg, rng)
        B, n, n_q = int(rng.integers(1, 4)), int(rng.integers(1, 12)), int(rng.integers(1, 5))
        attention = []
        forward(params, rng.normal(size=(B, n, cfg.d_v)) * 3, rng.normal(size=(B, n, cfg.d_s)) * 3,
                rng.normal(size=(B, n_q, cfg.d_t)) * 3, cfg, attention)
        for A in attention:
            worst = max(worst, float(np.abs(A[..., :n, n:2 * n]).max()), float(np.abs(A[..., n:2 * n, :n]).max()))
            checked += 2 * B * heads * n * n
    verdict("mask semantics", worst == 0.0,
            f"max frame<->scene-graph attention {worst!r} over {checked} weights, 50 inputs")


def test_synthetic_retrieval(verdict, corpus_split, trained):
    train_set, test_set = corpus_split
    result, seconds = trained
    report, _ = evaluate(result.params, MODEL, test_set)
    untrained, _ = evaluate(init_params(MODEL, np.random.default_rng(np.random.SeedSequence(0).spawn(3)[0])),
                            MODEL, test_set)
    ok = (seconds <= 120 and report["R1@0.5"] >= 0.90 and report["HIT@1"] >= 0.90
          and untrained["R1@0.5"] <= 0.25)
    verdict("synthetic retrieval", ok,
            f"trained {seconds:.1f}s on {len(train_set)} videos; held-out R1@0.5 {report['R1@0.5']:.3f}, "
            f"HIT@1 {report['HIT@1']:.3f}; untrained R1@0.5 {untrained['R1@0.5']:.3f}")


def test_ablation_direction(verdict, corpus_split):
    train_set, test_set = corpus_split
    variants = {
        "both": MODEL,
        "no-alignment": apply_variant(MODEL, "no-alignment"),
        "no-saliency": apply_variant(MODEL, "no-saliency"),
        "no-mask": replace(MODEL, mask_mode="none"),
    }
    medians = {}
    for label, cfg in variants.items():
        scores = []
        for seed in range(ABLATION_SEEDS):
            result = train(train_set, cfg, replace(TRAINING, seed=seed))
            scores.append(evaluate(result.params, cfg, test_set)[0]["mAP@Avg"])
        medians[label] = float(np.median(scores))
    ok = (medians["both"] >= medians["no-alignment"] and medians["both"] >= medians["no-saliency"]
          and medians["both"] >= medians["no-mask"])
    verdict("ablation direction", ok,
            "median Avg. mAP over 5 seeds: " + ", ".join(f"{k} {v:.4f}" for k, v in medians.items()))


def test_metric_oracles(verdict):
    rng = np.random.default_rng(0)
    worst_map = 0.0
    for _ in range(1000):
        n_pred, n_gt = int(rng.integers(0, 6)), int(rng.integers(1, 4))
        def interval():
            a = int(rng.integers(0, 15))
            return (a, a + int(rng.integers(1, 9)))
        intervals = [interval() for _ in range(n_pred)]
        scores = [float(np.round(rng.uniform(), 1)) for _ in range(n_pred)]
        gts = [interval() for _ in range(n_gt)]
        t = float(rng.choice([0.5, 0.75, 0.3]))
        got = moment_map([MomentPrediction(intervals, scores)], [gts], t)
        worst_map = max(worst_map, abs(got - brute_force_ap(intervals, scores, gts, t)))

    tax = Taxonomy.bundled()
    vocab = sorted(tax.parents) + ["unknownword"]
    worst_wups = 0.0
    for _ in range(500):
        pred = list(rng.choice(vocab, size=int(rng.integers(1, 4))))
        truth = list(rng.choice(vocab, size=int(rng.integers(1, 4))))
        worst_wups = max(worst_wups, abs(wups_score(pred, truth, tax, 0.9) - _wups_oracle(pred, truth, tax)))

    token_examples = [token_accuracy([("basketball player", "basketball player")]),
           token_accuracy([("basketball", "basketball player")]),
           token_accuracy([("player basketball", "basketball player")])]
    ok = worst_map <= 1e-9 and worst_wups <= 1e-12 and token_examples == [1.0, 0.5, 0.0]
    verdict("metric oracles", ok,
            f"mAP max |diff| {worst_map:.1e} over 1000 cases; WUPS@0.9 max |diff| {worst_wups:.1e}; "
            f"token accuracy examples {token_examples}")


def _wups_oracle(pred, truth, tax):
    def chain(t):
        out = [t]
        while tax.parents[t] != t:
            t = tax.parents[t]
            out.append(t)
        return out

    def W(a, b):
        if a not in tax.parents or b not in tax.parents:
            w = 1.0 if a == b else 0.0
        else:
            ca, cb = chain(a), chain(b)
            lcs = next(x for x in ca if x in cb)
            w = 2.0 * len(chain(lcs)) / (len(ca) + len(cb))
        return w if w >= 0.9 else 0.1 * w

    fwd = math.prod(max(W(a, b) for b in truth) for a in pred)
    bwd = math.prod(max(W(a, b) for a in pred) for b in truth)
    return min(fwd, bwd)


def test_pseudo_label_truth_table(verdict):
    r_theta = 0.5
    cases = {
        (True, 0.9): (1, 1.0), (True, 0.1): (0, -1.0),
        (False, 0.9): (0, -1.0), (False, 0.1): (1, 1.0),
        (True, 0.5): (0, -1.0), (False, 0.5): (0, -1.0),
    }
    got = {k: pseudo_labels(k[0], k[1], r_theta) for k in cases}
    verdict("pseudo-label truth table", got == cases,
            "; ".join(f"correct={c} r={r} -> {got[(c, r)]}" for c, r in cases))


def test_relevance_identity(verdict, corpus_split, trained):
    _, test_set = corpus_split
    result, _ = trained
    rng = np.random.default_rng(0)
    checked, exact, stable = 0, True, True
    for params in (result.params, init_params(MODEL, rng)):
        for out in predict(params, MODEL, test_set):
            checked += 1
            exact &= np.array_equal(out.relevance, params["w_f"] * out.f_hat + params["w_s"] * out.s_hat)
            top = out.topk[0]
            for c in (0.5, 2.0, 7.3, 1e3):
                scaled = relevance_and_topk(out.f_hat, out.s_hat, {"w_f": c * params["w_f"],
                                                                  "w_s": c * params["w_s"]}, MODEL.k_frames)
                stable &= scaled.topk[0] == top
    verdict("relevance identity", bool(exact and stable),
            f"{checked} outputs: bit-exact fusion {bool(exact)}, top-1 stable under scaling {bool(stable)}")


def test_train_determinism(verdict, tmp_path):
    overrides = ["--config", str(CONFIGS / "test.cfg"), "--set", "steps=60",
                 "--set", f"data_path={tmp_path / 'corpus.jsonl'}"]
    assert main(["synth", "--out", str(tmp_path)] + overrides) == 0
    outputs = []
    for run in ("a", "b"):
        assert main(["train", "--out", str(tmp_path / run)] + overrides) == 0
        outputs.append(((tmp_path / run / "train.log").read_bytes(),
                        (tmp_path / run / "checkpoint.json").read_bytes()))
    same_log, same_ckpt = outputs[0][0] == outputs[1][0], outputs[0][1] == outputs[1][1]
    verdict("train determinism", same_log and same_ckpt,
            f"log identical {same_log} ({len(outputs[0][0])} bytes), "
            f"checkpoint identical {same_ckpt} ({len(outputs[0][1])} bytes)")
