"""Localizer parameter table, initialisation and checkpoint files."""
from __future__ import annotations

import math

import numpy as np

from ..tensorio import TensorFileError, read_named_tensors, write_named_tensors
from .config import LocalizerConfig

CHECKPOINT_FORMAT = "sgloc-localizer/1"
KERNEL = 3
# unit-norm input tokens project to roughly unit-variance coordinates, on par with the positional table
INPUT_SCALE = 1.0


def param_shapes(cfg: LocalizerConfig) -> dict[str, tuple]:
    d = cfg.d_m
    shapes = {
        "W_xs": (cfg.d_v, d),
        "W_ss": (cfg.d_s, d),
        "W_qp": (cfg.d_t, d),
        "type_X": (d,),
        "type_S": (d,),
        "type_Q": (d,),
        "conv1_w": (KERNEL, 2 * d, d),
        "conv1_b": (d,),
        "conv2_w": (KERNEL, d, 1),
        "conv2_b": (1,),
        "W_c": (d, 1),
        "w_f": (),
        "w_s": (),
    }
    # W_Q/W_K/W_V hold all heads side by side; head m owns columns [m*d_h, (m+1)*d_h)
    for i in range(cfg.k_layers):
        for name in ("W_Q", "W_K", "W_V", "W_O", "W_lin"):
            shapes[f"layer{i}.{name}"] = (d, d)
        for name in ("b_lin", "ln1_g", "ln1_b", "ln2_g", "ln2_b"):
            shapes[f"layer{i}.{name}"] = (d,)
    return shapes


def init_params(cfg: LocalizerConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Fan-in scaled normal weights, unit layer-norm gains, zero biases."""
    cfg.validate()
    params = {}
    for name, shape in param_shapes(cfg).items():
        short = name.split(".")[-1]
        if short in ("ln1_g", "ln2_g"):
            params[name] = np.ones(shape)
        elif short in ("b_lin", "ln1_b", "ln2_b", "conv1_b", "conv2_b"):
            params[name] = np.zeros(shape)
        elif short.startswith("type_"):
            params[name] = rng.normal(scale=0.02, size=shape)
        elif short == "w_f":
            params[name] = np.array(cfg.w_f_init)
        elif short == "w_s":
            params[name] = np.array(cfg.w_s_init)
        elif short in ("W_xs", "W_ss", "W_qp"):
            params[name] = rng.normal(scale=INPUT_SCALE, size=shape)
        elif short.startswith("conv"):
            fan_in = shape[0] * shape[1]
            params[name] = rng.normal(scale=math.sqrt(2.0 / fan_in), size=shape)
        else:
            params[name] = rng.normal(scale=1.0 / math.sqrt(shape[0]), size=shape)
    return params


def check_params(params: dict, cfg: LocalizerConfig) -> None:
    shapes = param_shapes(cfg)
    missing = sorted(set(shapes) - set(params))
    if missing:
        raise KeyError(f"missing localizer parameters: {missing}")
    for name, shape in shapes.items():
        arr = np.asarray(params[name])
        if arr.shape != shape:
            raise ValueError(f"parameter {name!r} has shape {arr.shape}, expected {shape}")
        if not np.isfinite(arr).all():
            raise ValueError(f"parameter {name!r} is not finite")


def save_checkpoint(path, params: dict, cfg: LocalizerConfig) -> None:
    write_named_tensors(path, params, CHECKPOINT_FORMAT, cfg.to_dict())


def load_checkpoint(path) -> tuple[dict, LocalizerConfig]:
    header, _ = read_named_tensors(path, CHECKPOINT_FORMAT)
    try:
        cfg = LocalizerConfig.from_dict(header)
    except (TypeError, ValueError) as exc:
        raise TensorFileError(f"{path}: bad config echo ({exc})") from exc
    _, tensors = read_named_tensors(path, CHECKPOINT_FORMAT, param_shapes(cfg))
    return tensors, cfg
