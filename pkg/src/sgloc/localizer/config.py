from __future__ import annotations

from dataclasses import asdict, dataclass, replace

MASK_MODES = ("blocking", "none", "strict")
VARIANTS = ("both", "no-alignment", "no-saliency")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LocalizerConfig:
    d_v: int = 16
    d_s: int = 16
    d_t: int = 16
    d_m: int = 1024
    k_layers: int = 4
    m_heads: int = 4
    k_sg: int = 8
    k_frames: int = 5
    r_theta: float = 0.5
    tau: float = 0.07
    lambda_a: float = 1.0
    lambda_intra: float = 1.0
    lambda_inter: float = 1.0
    mask_mode: str = "blocking"
    widen_negatives: bool = False
    w_f_init: float = 1.0
    w_s_init: float = 0.125

    def validate(self) -> "LocalizerConfig":
        for name in ("d_v", "d_s", "d_t", "d_m", "k_layers", "m_heads", "k_sg", "k_frames"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_m % self.m_heads:
            raise ConfigError(f"d_m={self.d_m} is not divisible by m_heads={self.m_heads}")
        if not 0.0 < self.r_theta < 1.0:
            raise ConfigError(f"r_theta must lie in (0, 1), got {self.r_theta}")
        if not self.tau > 0.0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        for name in ("lambda_a", "lambda_intra", "lambda_inter"):
            if not getattr(self, name) >= 0.0:
                raise ConfigError(f"{name} must be non-negative")
        if self.mask_mode not in MASK_MODES:
            raise ConfigError(f"mask_mode must be one of {MASK_MODES}, got {self.mask_mode!r}")
        return self

    @property
    def lambdas(self) -> tuple[float, float, float]:
        return (self.lambda_a, self.lambda_intra, self.lambda_inter)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "LocalizerConfig":
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(f"unknown localizer config key(s): {', '.join(extra)}")
        return cls(**doc).validate()


def apply_variant(cfg: LocalizerConfig, variant: str) -> LocalizerConfig:
    """Score/loss ablations.

    ``no-alignment`` drops the foreground head from both the objective and the
    fused relevance; ``no-saliency`` does the same for the contrastive route.
    """
    if variant == "both":
        return cfg
    if variant == "no-alignment":
        return replace(cfg, lambda_a=0.0, w_f_init=0.0)
    if variant == "no-saliency":
        return replace(cfg, lambda_intra=0.0, lambda_inter=0.0, w_s_init=0.0)
    raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
