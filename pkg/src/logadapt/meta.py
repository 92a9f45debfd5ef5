"""First-order meta-learning for the windowed LSTM.

Meta-training finds an initialization that adapts to a new system from a
few labeled events: for each source task, the current parameters are
adapted on the task's support split with a few plain gradient-descent
steps, the query-loss gradient is evaluated at the adapted parameters,
and the summed per-task query gradients update the shared initialization
directly (the first-order approximation: no differentiation through the
adaptation). Meta-testing clones the trained initialization, fine-tunes
it on a target task's support split with the same update rule, and
evaluates on the query split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, IO

import numpy as np

from .errors import NoTasks
from .evaluate import DetectionReport, TimingSheet, timed
from .model import (
    AdamWState,
    LstmParams,
    Window,
    adamw_step,
    add_scaled_,
    make_windows,
    sgd_step,
    split_loss_grad,
    split_predict,
    zeros_like_params,
)


@dataclass(frozen=True)
class EmbeddedSplit:
    """A log split ready for the model: embeddings (n, d), labels (n,)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"{self.x.shape[0]} embeddings vs {self.y.shape[0]} labels")

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class EmbeddedTask:
    """A (support, query) pair of embedded splits from one system."""

    task_id: str
    system_id: str
    support: EmbeddedSplit
    query: EmbeddedSplit


@dataclass(frozen=True)
class MetaConfig:
    """Learning-rate, step-count, and windowing settings.

    ``inner_lr`` is the task-level rate used by plain-descent adaptation;
    ``meta_lr`` drives the outer update across tasks. The outer update
    uses AdamW by default with a plain-descent mode available for
    exactness checks; meta-testing fine-tunes with plain descent by
    default.
    """

    inner_lr: float = 0.01
    meta_lr: float = 0.001
    inner_steps: int = 5
    meta_epochs: int = 30
    window_size: int = 100
    seed: int = 0
    class_weighting: str = "balanced"  # or "none"
    outer_optimizer: str = "adamw"  # or "sgd"
    finetune_steps: int | None = None  # defaults to inner_steps
    finetune_optimizer: str = "sgd"  # or "adamw"
    threshold: float = 0.5
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self):
        if not (np.isfinite(self.inner_lr) and self.inner_lr > 0):
            raise ValueError(f"inner_lr must be finite and positive, got {self.inner_lr}")
        if not (np.isfinite(self.meta_lr) and self.meta_lr > 0):
            raise ValueError(f"meta_lr must be finite and positive, got {self.meta_lr}")
        if self.inner_steps < 0:
            raise ValueError(f"inner_steps must be >= 0, got {self.inner_steps}")
        if self.meta_epochs < 1:
            raise ValueError(f"meta_epochs must be >= 1, got {self.meta_epochs}")
        if self.class_weighting not in ("balanced", "none"):
            raise ValueError(f"unknown class weighting {self.class_weighting!r}")
        if self.outer_optimizer not in ("adamw", "sgd"):
            raise ValueError(f"unknown outer optimizer {self.outer_optimizer!r}")
        if self.finetune_optimizer not in ("adamw", "sgd"):
            raise ValueError(f"unknown finetune optimizer {self.finetune_optimizer!r}")

    @property
    def effective_finetune_steps(self) -> int:
        return self.inner_steps if self.finetune_steps is None else self.finetune_steps


def class_weight_pair(labels: np.ndarray, mode: str = "balanced") -> tuple[float, float]:
    """(normal weight, anomalous weight) for a training split.

    Balanced mode uses inverse class frequency, n / (2 * count), flooring
    each class count at 1 so an all-normal or all-anomalous split cannot
    divide by zero.
    """
    if mode == "none":
        return (1.0, 1.0)
    labels = np.asarray(labels, dtype=bool)
    n = labels.size
    pos = max(int(labels.sum()), 1)
    neg = max(n - int(labels.sum()), 1)
    return (n / (2.0 * neg), n / (2.0 * pos))


def _split_windows(split: EmbeddedSplit, k: int) -> list[Window]:
    return make_windows(split.x, split.y, k)


def _fit_split(
    params: LstmParams,
    split: EmbeddedSplit,
    config: MetaConfig,
    steps: int,
    optimizer: str,
    lr: float,
) -> LstmParams:
    """Full-batch gradient steps on one split; returns new params."""
    windows = _split_windows(split, config.window_size)
    weights = class_weight_pair(split.y, config.class_weighting)
    current = params.copy()
    state = AdamWState.zeros(current) if optimizer == "adamw" else None
    for _ in range(steps):
        _, grads = split_loss_grad(current, windows, weights)
        if optimizer == "adamw":
            current, state = adamw_step(
                current, grads, state, lr, config.adam_betas, config.adam_eps,
                config.weight_decay,
            )
        else:
            current = sgd_step(current, grads, lr)
    return current


def inner_adapt(theta: LstmParams, support: EmbeddedSplit, config: MetaConfig) -> LstmParams:
    """Task-level adaptation: ``inner_steps`` plain-descent steps on the
    support split at rate ``inner_lr``. ``theta`` is not mutated."""
    return _fit_split(theta, support, config, config.inner_steps, "sgd", config.inner_lr)


def _outer_update(
    params: LstmParams,
    grads: LstmParams,
    state: AdamWState | None,
    config: MetaConfig,
) -> tuple[LstmParams, AdamWState | None]:
    if config.outer_optimizer == "adamw":
        new_params, new_state = adamw_step(
            params, grads, state, config.meta_lr, config.adam_betas, config.adam_eps,
            config.weight_decay,
        )
        return new_params, new_state
    return sgd_step(params, grads, config.meta_lr), None


def meta_train(
    theta0: LstmParams,
    tasks: list[EmbeddedTask],
    config: MetaConfig,
    telemetry: IO[str] | Callable[[dict], None] | None = None,
) -> LstmParams:
    """Meta-train across tasks; returns the optimized initialization.

    Per epoch, every task contributes the gradient of its query loss
    evaluated at its adapted parameters; the sum updates the shared
    initialization via the configured outer optimizer. Task order is the
    list order, fixed across epochs. Per-epoch losses go to ``telemetry``
    as JSON lines (file-like) or dict callbacks.
    """
    if not tasks:
        raise NoTasks("meta_train requires at least one task")
    params = theta0.copy()
    state = AdamWState.zeros(params) if config.outer_optimizer == "adamw" else None
    for epoch in range(config.meta_epochs):
        total = zeros_like_params(params)
        losses = []
        for task in tasks:
            adapted = inner_adapt(params, task.support, config)
            query_windows = _split_windows(task.query, config.window_size)
            query_weights = class_weight_pair(task.query.y, config.class_weighting)
            query_loss, query_grad = split_loss_grad(adapted, query_windows, query_weights)
            add_scaled_(total, query_grad)
            losses.append(query_loss)
        params, state = _outer_update(params, total, state, config)
        if telemetry is not None:
            record = {
                "epoch": epoch,
                "task_loss": [round(l, 10) for l in losses],
                "mean_loss": round(float(np.mean(losses)), 10),
            }
            if callable(telemetry):
                telemetry(record)
            else:
                telemetry.write(json.dumps(record) + "\n")
    return params


def supervised_train(
    theta0: LstmParams, splits: list[EmbeddedSplit], config: MetaConfig
) -> LstmParams:
    """Pooled supervised training over splits with the outer optimizer.

    Per epoch the per-split gradients (each with its own class weights)
    are summed and applied once, which is exactly the meta-training update
    with zero adaptation steps.
    """
    if not splits:
        raise NoTasks("supervised_train requires at least one split")
    params = theta0.copy()
    state = AdamWState.zeros(params) if config.outer_optimizer == "adamw" else None
    for _ in range(config.meta_epochs):
        total = zeros_like_params(params)
        for split in splits:
            windows = _split_windows(split, config.window_size)
            weights = class_weight_pair(split.y, config.class_weighting)
            _, grads = split_loss_grad(params, windows, weights)
            add_scaled_(total, grads)
        params, state = _outer_update(params, total, state, config)
    return params


def meta_test(
    theta_star: LstmParams,
    task: EmbeddedTask,
    config: MetaConfig,
    sheet: TimingSheet | None = None,
) -> DetectionReport:
    """Adapt a clone of ``theta_star`` on the task's support split, then
    predict every query event. ``theta_star`` is not mutated."""
    sheet = sheet if sheet is not None else TimingSheet()
    finetune_config = replace(config, inner_steps=config.effective_finetune_steps)
    adapted, adapt_seconds = timed(
        "adapt",
        lambda: _fit_split(
            theta_star,
            task.support,
            finetune_config,
            finetune_config.inner_steps,
            config.finetune_optimizer,
            config.inner_lr,
        ),
        sheet,
    )
    query_windows = _split_windows(task.query, config.window_size)
    predicted, predict_seconds = timed(
        "predict",
        lambda: split_predict(adapted, query_windows, config.threshold),
        sheet,
    )
    return DetectionReport.from_predictions(
        task.task_id,
        predicted,
        task.query.y,
        train_time_s=adapt_seconds,
        test_time_s=predict_seconds,
    )
