"""Flat ``key = value`` run configuration with a fixed schema."""
from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .data.synth import CorpusSpec
from .localizer.config import LocalizerConfig
from .localizer.training import TrainConfig


class RunConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default)
SCHEMA: dict[str, tuple] = {
    "seed": (int, 0),
    "corpus_seed": (int, 0),
    # corpus
    "n_videos": (int, CorpusSpec.n_videos),
    "min_frames": (int, CorpusSpec.min_frames),
    "max_frames": (int, CorpusSpec.max_frames),
    "l_patch": (int, CorpusSpec.l_patch),
    "n_q": (int, CorpusSpec.n_q),
    "min_interval": (int, CorpusSpec.min_interval),
    "max_interval": (int, CorpusSpec.max_interval),
    "snr": (float, CorpusSpec.snr),
    "query_noise": (float, CorpusSpec.query_noise),
    "test_fraction": (float, 0.25),
    # localizer (d_v, d_s, d_t and k_sg are shared with the corpus)
    "d_v": (int, LocalizerConfig.d_v),
    "d_s": (int, LocalizerConfig.d_s),
    "d_t": (int, LocalizerConfig.d_t),
    "k_sg": (int, LocalizerConfig.k_sg),
    "d_m": (int, LocalizerConfig.d_m),
    "k_layers": (int, LocalizerConfig.k_layers),
    "m_heads": (int, LocalizerConfig.m_heads),
    "k_frames": (int, LocalizerConfig.k_frames),
    "r_theta": (float, LocalizerConfig.r_theta),
    "tau": (float, LocalizerConfig.tau),
    "lambda_a": (float, LocalizerConfig.lambda_a),
    "lambda_intra": (float, LocalizerConfig.lambda_intra),
    "lambda_inter": (float, LocalizerConfig.lambda_inter),
    "mask_mode": (str, LocalizerConfig.mask_mode),
    "widen_negatives": (_bool, LocalizerConfig.widen_negatives),
    "w_f_init": (float, LocalizerConfig.w_f_init),
    "w_s_init": (float, LocalizerConfig.w_s_init),
    # training and evaluation
    "steps": (int, TrainConfig.steps),
    "batch_size": (int, TrainConfig.batch_size),
    "lr": (float, TrainConfig.lr),
    "decode_threshold": (float, 0.5),
    "ablation_seeds": (int, 5),
    "gradcheck_configs": (int, 100),
    "gradcheck_tol": (float, 1e-4),
    # artifact paths, relative ones resolve against --out
    "data_path": (str, "corpus.jsonl"),
    "checkpoint_path": (str, "checkpoint.json"),
    "log_path": (str, "train.log"),
    "predictions_path": (str, "predictions.jsonl"),
    "predictions_in": (str, ""),
    "answers_path": (str, ""),
    "taxonomy_path": (str, ""),
    "metrics_path": (str, "metrics.json"),
    "ablation_path": (str, "ablation.txt"),
    "ablation_json_path": (str, "ablation.json"),
}

PATH_KEYS = tuple(k for k in SCHEMA if k.endswith("_path") or k == "predictions_in")


class RunConfig:
    def __init__(self, values: dict | None = None, out_dir=None):
        self.values = {k: d for k, (_, d) in SCHEMA.items()}
        self.out_dir = Path(out_dir) if out_dir is not None else Path(".")
        for k, v in (values or {}).items():
            self.set(k, v)

    def set(self, key: str, value) -> None:
        if key not in SCHEMA:
            raise RunConfigError(f"unknown config key {key!r}")
        parser = SCHEMA[key][0]
        try:
            if parser is _bool and not isinstance(value, str):
                value = bool(value)
            self.values[key] = parser(value)
        except ValueError as exc:
            raise RunConfigError(f"bad value for {key!r}: {exc}") from None

    def set_text(self, assignment: str, where: str = "--set") -> None:
        key, sep, value = assignment.partition("=")
        if not sep:
            raise RunConfigError(f"{where}: expected key=value, got {assignment!r}")
        self.set(key.strip(), value.strip())

    @classmethod
    def from_file(cls, path, out_dir=None) -> "RunConfig":
        cfg = cls(out_dir=out_dir)
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                cfg.set_text(line, f"{path}:{lineno}")
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def path(self, key: str) -> Path | None:
        text = self.values[key]
        if not text:
            return None
        p = Path(text)
        return p if p.is_absolute() else self.out_dir / p

    def corpus_spec(self) -> CorpusSpec:
        names = {f.name for f in fields(CorpusSpec)} - {"seed"}
        return CorpusSpec(seed=self["corpus_seed"], **{k: self[k] for k in names})

    def localizer_config(self) -> LocalizerConfig:
        names = {f.name for f in fields(LocalizerConfig)}
        return LocalizerConfig(**{k: self[k] for k in names}).validate()

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(steps=self["steps"], batch_size=self["batch_size"], lr=self["lr"],
                           seed=self["seed"] if seed is None else seed)

    def to_text(self) -> str:
        return "".join(f"{k} = {str(v).lower() if isinstance(v, bool) else v}\n" for k, v in self.values.items())
