from .batching import group_by_shape, pooled_arrays
from .config import MASK_MODES, VARIANTS, ConfigError, LocalizerConfig, apply_variant
from .inference import LocalizerOutput, fuse_relevance, predict, pseudo_labels, relevance_and_topk, select_topk
from .losses import (
    alignment_loss,
    eligible_positives,
    inter_contrastive_loss,
    intra_contrastive_loss,
    intra_loss_at,
    negative_mask,
    sample_positive,
    total_loss,
)
from .model import (
    alignment_head,
    assemble_sequence,
    build_attention_mask,
    encoder_forward,
    forward,
    pool_features,
    pool_project,
    positional_encoding,
    question_pool,
    saliency_scores,
)
from .params import CHECKPOINT_FORMAT, check_params, init_params, load_checkpoint, param_shapes, save_checkpoint
from .training import (
    Example,
    LossBreakdown,
    NonFiniteLossError,
    TrainConfig,
    TrainResult,
    loss_and_grads,
    objective,
    train,
    train_step,
)
from .evaluation import evaluate, moments_from_relevance, normalize_scores
from .gradcheck_suite import GradcheckReport, run_gradcheck_suite
