"""Command-line entry point: synth, train, eval, ablate, gradcheck.

Exit status is 0 on success, 1 on invalid input or configuration and 2 on a
numerical failure (non-finite loss, gradient check over tolerance).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import SampleError, load_dataset, saliency_to_rating, save_dataset, split_corpus, synthesize_corpus
from .data.synth import CorpusSpecError
from .localizer import (
    ConfigError,
    NonFiniteLossError,
    apply_variant,
    evaluate,
    load_checkpoint,
    run_gradcheck_suite,
    save_checkpoint,
    train,
)
from .numerics import EvaluationError, NonFiniteError, NumericsError
from .qa_metrics import Taxonomy, TaxonomyError, token_accuracy, wups_at
from .report import dumps_report, make_report, render_ablation, report_render
from .retrieval_metrics import MomentPrediction, SaliencyGroundTruth, retrieval_report
from .runconfig import RunConfig, RunConfigError
from .tensorio import TensorFileError

log = logging.getLogger("sgloc")

COMMANDS = ("synth", "train", "eval", "ablate", "gradcheck")
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}
MASKS = (("mask", "blocking"), ("no-mask", "none"))


class UsageError(ValueError):
    pass


def _setup_logging():
    level = os.environ.get("LOCALIZER_LOG", "quiet")
    if level not in LOG_LEVELS:
        raise UsageError(f"LOCALIZER_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _ensure_parent(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)


def _held_out(cfg: RunConfig):
    path = cfg.path("data_path")
    if not path.exists():
        raise UsageError(f"dataset {path} does not exist; run 'synth' first or set data_path")
    return split_corpus(load_dataset(path), cfg["test_fraction"])


# ---------------------------------------------------------------- commands

def cmd_synth(cfg: RunConfig) -> int:
    corpus = synthesize_corpus(cfg.corpus_spec())
    out = cfg.path("data_path")
    _ensure_parent(out)
    save_dataset(out, corpus.samples)
    print(f"wrote {len(corpus.samples)} videos to {out}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    train_set, _ = _held_out(cfg)
    lcfg = cfg.localizer_config()
    result = train(train_set, lcfg, cfg.train_config(),
                   on_step=lambda step, b: log.info(b.log_line(step)))
    ckpt, log_path = cfg.path("checkpoint_path"), cfg.path("log_path")
    for p in (ckpt, log_path):
        _ensure_parent(p)
    save_checkpoint(ckpt, result.params, lcfg)
    log_path.write_text(result.log_text())
    last = result.history[-1]
    print(f"trained {len(result.history)} steps on {len(train_set)} videos; final total loss {last.total:.6g}")
    print(f"wrote {ckpt} and {log_path}")
    return 0


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
    return rows


def score_predictions(records: list[dict], samples) -> dict:
    """Retrieval metrics for prediction records against labelled samples (matched by id)."""
    by_id = {}
    for r in records:
        if "query_id" not in r:
            raise UsageError("prediction record without query_id")
        by_id[r["query_id"]] = r
    preds, clip_scores = [], []
    for s in samples:
        r = by_id.get(s.video_id, {})
        preds.append(MomentPrediction([tuple(i) for i in r.get("intervals", [])], r.get("scores", [])))
        clip_scores.append(r.get("clip_scores"))
    gts = [list(s.intervals) for s in samples]
    if samples and all(c is not None for c in clip_scores):
        truths = [SaliencyGroundTruth(tuple(saliency_to_rating(s.s).tolist())) for s in samples]
        return retrieval_report(preds, gts, clip_scores, truths)
    return retrieval_report(preds, gts)


def score_answers(cfg: RunConfig) -> dict | None:
    path = cfg.path("answers_path")
    if path is None:
        return None
    rows = _read_jsonl(path)
    pairs = [(r["prediction"], r["ground_truth"]) for r in rows]
    tax_path = cfg.path("taxonomy_path")
    taxonomy = Taxonomy.load(tax_path) if tax_path is not None else Taxonomy.bundled()
    return {"accuracy": token_accuracy(pairs), "WUPS@0.9": wups_at(pairs, taxonomy, 0.9)}


def cmd_eval(cfg: RunConfig) -> int:
    _, test_set = _held_out(cfg)
    given = cfg.path("predictions_in")
    if given is not None:
        retrieval = score_predictions(_read_jsonl(given), test_set)
    else:
        params, lcfg = load_checkpoint(cfg.path("checkpoint_path"))
        retrieval, records = evaluate(params, lcfg, test_set, cfg["decode_threshold"])
        out = cfg.path("predictions_path")
        _ensure_parent(out)
        out.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    report = make_report(retrieval, score_answers(cfg), len(test_set))
    metrics = cfg.path("metrics_path")
    _ensure_parent(metrics)
    metrics.write_text(dumps_report(report))
    print(report_render(report), end="")
    return 0


def run_ablation(cfg: RunConfig, train_set, test_set):
    """Train and evaluate every score/loss variant with and without the mask over several seeds."""
    base = cfg.localizer_config()
    runs = {}
    for variant in ("both", "no-alignment", "no-saliency"):
        for mask_label, mode in MASKS:
            lcfg = apply_variant(replace(base, mask_mode=mode), variant)
            label = f"{variant}/{mask_label}"
            runs[label] = []
            for i in range(cfg["ablation_seeds"]):
                seed = cfg["seed"] + i
                result = train(train_set, lcfg, cfg.train_config(seed))
                report, _ = evaluate(result.params, lcfg, test_set, cfg["decode_threshold"])
                log.info("%s seed %d: Avg. mAP %.4f", label, seed, report["mAP@Avg"])
                runs[label].append({"seed": seed, **report})
    medians = {label: {k: float(np.median([r[k] for r in rows])) for k in rows[0] if k != "seed"}
               for label, rows in runs.items()}
    return runs, medians


def cmd_ablate(cfg: RunConfig) -> int:
    if cfg["ablation_seeds"] < 1:
        raise UsageError("ablation_seeds must be at least 1")
    train_set, test_set = _held_out(cfg)
    runs, medians = run_ablation(cfg, train_set, test_set)
    table = render_ablation(list(medians.items()))
    text_path, json_path = cfg.path("ablation_path"), cfg.path("ablation_json_path")
    for p in (text_path, json_path):
        _ensure_parent(p)
    text_path.write_text(f"medians over {cfg['ablation_seeds']} seeds\n" + table)
    json_path.write_text(json.dumps({"runs": runs, "medians": medians}, indent=2, sort_keys=True) + "\n")
    print(table, end="")
    return 0


def cmd_gradcheck(cfg: RunConfig) -> int:
    report = run_gradcheck_suite(cfg["gradcheck_configs"], seed=cfg["seed"])
    print(f"max relative error {report.max_rel_error:.3e} over {report.n_entries} entries "
          f"({report.n_skipped} kinked entries redrawn) "
          f"in {report.n_configs} configs ({report.seconds:.1f}s); worst: {report.worst}")
    if not report.max_rel_error < cfg["gradcheck_tol"]:
        print(f"gradient check FAILED: tolerance {cfg['gradcheck_tol']:g}", file=sys.stderr)
        return 2
    return 0


HANDLERS = {"synth": cmd_synth, "train": cmd_train, "eval": cmd_eval, "ablate": cmd_ablate,
            "gradcheck": cmd_gradcheck}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgloc", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--out", type=Path, help="directory that relative artifact paths resolve against")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_logging()
        cfg = RunConfig.from_file(args.config, args.out) if args.config else RunConfig(out_dir=args.out)
        for item in args.set:
            cfg.set_text(item)
        if args.seed is not None:
            cfg.set("seed", args.seed)
        return HANDLERS[args.command](cfg)
    except (NonFiniteLossError, NonFiniteError, EvaluationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (RunConfigError, ConfigError, CorpusSpecError, SampleError, TensorFileError, TaxonomyError,
            NumericsError, UsageError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
