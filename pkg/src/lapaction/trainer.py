"""One-vs-rest training: binary cross-entropy, Adam, early stopping, checkpoints.

A training run is fully determined by its seed: mini-batch order, the
per-clip-per-epoch frame sampling, dropout masks, and parameter
initialization all derive their generators from it, so two runs with the
same configuration produce bit-identical trajectories.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .actions import ActionLabel
from .dataset import Clip, ClipDataset
from .errors import EmptyClassError, LapActionError, ParameterError
from .frames import FrameStore
from .network import BackboneConfig, HeadConfig, init_parameters, model_backward, model_forward
from .network.checkpoint import save_checkpoint
from .sampler import SamplerConfig, sample_indices
from .seeding import derive_seed

_PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 8
    max_epochs: int = 100
    early_stop_patience: int = 20
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ParameterError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.early_stop_patience < 1:
            raise ParameterError(f"patience must be >= 1, got {self.early_stop_patience}")
        if self.batch_size < 1:
            raise ParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ParameterError(f"max_epochs must be >= 1, got {self.max_epochs}")


def bce_loss(probabilities, true_class: int) -> float:
    """-ln p[true_class], with p clamped away from 0 and 1 before the log."""
    p = _checked_probs(probabilities)
    return -math.log(min(max(p[true_class], _PROB_CLAMP), 1.0 - _PROB_CLAMP))


def bce_grad(probabilities, true_class: int) -> np.ndarray:
    """d(loss)/d(probabilities); zero where the clamp is active."""
    p = _checked_probs(probabilities)
    grad = np.zeros_like(p)
    if _PROB_CLAMP < p[true_class] < 1.0 - _PROB_CLAMP:
        grad[true_class] = -1.0 / p[true_class]
    return grad


def _checked_probs(probabilities) -> np.ndarray:
    p = np.asarray(probabilities, dtype=np.float64)
    if p.shape != (2,) or p.min() < -1e-9 or abs(p.sum() - 1.0) > 1e-6:
        raise ParameterError(f"invalid probability vector {p!r}")
    return p


@dataclass
class AdamMoments:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros_like(cls, params):
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(params, grads, moments: AdamMoments, t: int, config: TrainConfig):
    """Bias-corrected Adam update; returns (new params, new moments)."""
    if t < 1:
        raise ParameterError(f"Adam step index must be >= 1, got {t}")
    b1, b2, eps, lr = (
        config.adam_beta1,
        config.adam_beta2,
        config.adam_epsilon,
        config.learning_rate,
    )
    new_params, new_m, new_v = {}, {}, {}
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ParameterError(f"gradient for {key} has shape {g.shape}, parameter {p.shape}")
        m = b1 * moments.m[key] + (1.0 - b1) * g
        v = b2 * moments.v[key] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_params[key] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[key] = m
        new_v[key] = v
    return new_params, AdamMoments(m=new_m, v=new_v)


class EarlyStopper:
    """Tracks the best validation loss and the parameters that produced it."""

    def __init__(self, patience: int):
        if patience < 1:
            raise ParameterError(f"patience must be >= 1, got {patience}")
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch: int | None = None
        self.best_params: dict[str, np.ndarray] | None = None
        self.wait = 0

    def update(self, epoch: int, val_loss: float, params) -> bool:
        """Record one epoch; returns True when the loss strictly improved."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.best_params = {k: v.copy() for k, v in params.items()}
            self.wait = 0
            return True
        self.wait += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.wait >= self.patience


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    history: list[EpochStats]
    best_epoch: int
    best_val_loss: float
    checkpoint_path: Path | None = None


def epoch_clip_order(n_clips: int, epoch: int, rng_seed: int) -> np.ndarray:
    """Seeded shuffle of clip indices; every clip appears exactly once."""
    rng = np.random.default_rng(derive_seed(rng_seed, "epoch-order", epoch))
    return rng.permutation(n_clips)


def _load_training_sequence(clip: Clip, stores, seq_len: int, epoch: int, rng_seed: int):
    cfg = SamplerConfig(
        sequence_length=seq_len,
        mode="random",
        rng_seed=derive_seed(rng_seed, clip.clip_id, epoch),
    )
    indices = sample_indices(clip.length, cfg)
    return stores[clip.video_id].load_frames(clip, indices)


def _validate(pairs, stores, backbone, head, params, seq_len: int):
    losses, correct = [], 0
    center = SamplerConfig(sequence_length=seq_len, mode="center")
    for clip, y in pairs:
        indices = sample_indices(clip.length, center)
        frames = stores[clip.video_id].load_frames(clip, indices)
        fwd = model_forward(frames, backbone, head, params, training=False)
        losses.append(bce_loss(fwd.probabilities, y))
        correct += int(np.argmax(fwd.probabilities) == y)
    return float(np.mean(losses)), correct / len(pairs)


def train_binary(
    dataset: ClipDataset,
    stores: Mapping[str, FrameStore],
    backbone: BackboneConfig,
    head: HeadConfig,
    train_config: TrainConfig,
    sequence_length: int = 20,
    out_dir: str | Path | None = None,
) -> TrainResult:
    """Train one binary classifier with per-epoch resampling and early stopping.

    Requires a balanced train split (run plan_balance + materialize first)
    and a non-empty validation split. The returned parameters are those of
    the best-validation-loss epoch.
    """
    train_pairs = dataset.clips_in("train")
    val_pairs = dataset.clips_in("validation")
    n_target = sum(1 for _, y in train_pairs if y == 1)
    n_rest = len(train_pairs) - n_target
    if n_target != n_rest:
        raise EmptyClassError(
            f"train split is unbalanced ({n_target} target vs {n_rest} rest); "
            f"balance it with plan_balance/materialize before training"
        )
    if not train_pairs:
        raise EmptyClassError("train split is empty")
    if not val_pairs:
        raise EmptyClassError("validation split is empty; early stopping needs one")

    seed = train_config.rng_seed
    params = init_parameters(backbone, head, seed=derive_seed(seed, "init"))
    moments = AdamMoments.zeros_like(params)
    stopper = EarlyStopper(train_config.early_stop_patience)
    history: list[EpochStats] = []
    step = 0

    for epoch in range(1, train_config.max_epochs + 1):
        order = epoch_clip_order(len(train_pairs), epoch, seed)
        epoch_losses = []
        for start in range(0, len(order), train_config.batch_size):
            batch = order[start : start + train_config.batch_size]
            grad_sum: dict[str, np.ndarray] | None = None
            for idx in batch:
                clip, y = train_pairs[idx]
                frames = _load_training_sequence(clip, stores, sequence_length, epoch, seed)
                rng = np.random.default_rng(derive_seed(seed, "dropout", clip.clip_id, epoch))
                fwd = model_forward(frames, backbone, head, params, training=True, rng=rng)
                epoch_losses.append(bce_loss(fwd.probabilities, y))
                grads = model_backward(fwd, backbone, head, params, bce_grad(fwd.probabilities, y))
                if grad_sum is None:
                    grad_sum = grads
                else:
                    for key in grad_sum:
                        grad_sum[key] += grads[key]
            for key in grad_sum:
                grad_sum[key] /= len(batch)
            step += 1
            params, moments = adam_step(params, grad_sum, moments, step, train_config)

        val_loss, val_acc = _validate(val_pairs, stores, backbone, head, params, sequence_length)
        history.append(EpochStats(epoch, float(np.mean(epoch_losses)), val_loss, val_acc))
        stopper.update(epoch, val_loss, params)
        if stopper.should_stop:
            break

    result = TrainResult(
        params=stopper.best_params,
        history=history,
        best_epoch=stopper.best_epoch,
        best_val_loss=stopper.best_loss,
    )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_history(out_dir / "history.csv", history)
        result.checkpoint_path = save_checkpoint(
            out_dir / "checkpoint.npz",
            result.params,
            backbone,
            head,
            meta={
                "target_action": dataset.target_action.value,
                "best_epoch": result.best_epoch,
                "best_val_loss": result.best_val_loss,
                "sequence_length": sequence_length,
            },
        )
    return result


def write_history(path: str | Path, history: Sequence[EpochStats]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "val_accuracy"])
        for row in history:
            writer.writerow(
                [row.epoch, f"{row.train_loss:.6f}", f"{row.val_loss:.6f}", f"{row.val_accuracy:.6f}"]
            )


@dataclass
class TrainAllResult:
    results: dict[ActionLabel, TrainResult] = field(default_factory=dict)
    failures: dict[ActionLabel, str] = field(default_factory=dict)
    summary_path: Path | None = None


def train_all(
    datasets: Mapping[ActionLabel, ClipDataset],
    stores: Mapping[str, FrameStore],
    backbone: BackboneConfig,
    head: HeadConfig,
    train_config: TrainConfig,
    sequence_length: int = 20,
    out_dir: str | Path | None = None,
) -> TrainAllResult:
    """Train one binary model per target action; failures are isolated per action."""
    out = TrainAllResult()
    for action, dataset in datasets.items():
        action_cfg = replace(train_config, rng_seed=derive_seed(train_config.rng_seed, action.value))
        action_dir = Path(out_dir) / action.value if out_dir is not None else None
        try:
            out.results[action] = train_binary(
                dataset, stores, backbone, head, action_cfg,
                sequence_length=sequence_length, out_dir=action_dir,
            )
        except LapActionError as exc:
            out.failures[action] = f"{type(exc).__name__}: {exc}"
    if out_dir is not None:
        summary = {}
        for action, result in out.results.items():
            summary[action.value] = {
                "checkpoint_path": str(result.checkpoint_path),
                "best_epoch": result.best_epoch,
                "best_val_loss": round(result.best_val_loss, 6),
            }
        for action, message in out.failures.items():
            summary[action.value] = {"error": message}
        out.summary_path = Path(out_dir) / "summary.json"
        out.summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return out
