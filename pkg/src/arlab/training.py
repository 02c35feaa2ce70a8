"""Loss assembly and optimization for the five training modes.

Baseline trains on plain cross-entropy.  The augmented modes pair every
batch with a transformed copy: either the family's designated training
vertex, or a per-sample worst case chosen adversarially each step.  Aligned
variants add a weighted alignment penalty between the two logit batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import tensor as T
from .datasets import LabeledImages, batches, one_hot
from .errors import ConfigError, DivergenceError
from .evaluation import EvalReport, evaluate
from .model import Classifier, init, logits, logits_array
from .regularizers import AUX_KINDS, ALIGN_KINDS, AuxParams, aux_update, init_aux, penalty
from .tensor import NonFiniteError, softmax_array
from .transforms import TransformFamily, apply_batch

MODES = ("baseline", "vanilla-aug", "aligned-vertex", "vanilla-worst", "aligned-worst")
ALIGNED_MODES = ("aligned-vertex", "aligned-worst")
WORST_MODES = ("vanilla-worst", "aligned-worst")


@dataclass(frozen=True)
class LrSchedule:
    """Step decay: initial * factor^(epoch // every)."""

    initial: float
    decay_factor: float = 1.0
    decay_every: int = 1

    def __post_init__(self):
        if self.initial <= 0 or self.decay_factor <= 0 or self.decay_every < 1:
            raise ConfigError(f"invalid learning-rate schedule {self}")

    def at(self, epoch: int) -> float:
        return self.initial * self.decay_factor ** (epoch // self.decay_every)


@dataclass(frozen=True)
class TrainPlan:
    """Everything one training run depends on, besides the data itself."""

    mode: str
    family: TransformFamily
    lam: float = 0.0
    align_kind: Optional[str] = None
    epochs: int = 10
    lr: LrSchedule = field(default_factory=lambda: LrSchedule(1e-4))
    batch_size: int = 128
    seed: int = 0
    hidden: tuple = (64,)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be positive")
        if self.align_kind is not None and self.align_kind not in ALIGN_KINDS:
            raise ConfigError(f"unknown alignment kind {self.align_kind!r}")
        if self.lam > 0 and self.mode in ALIGNED_MODES and self.align_kind is None:
            raise ConfigError(f"mode {self.mode!r} with lambda > 0 needs an alignment kind")
        if not self.hidden:
            raise ConfigError("need at least one hidden layer width")

    @property
    def uses_penalty(self) -> bool:
        return self.mode in ALIGNED_MODES and self.lam > 0

    @property
    def needs_aux(self) -> bool:
        return self.uses_penalty and self.align_kind in AUX_KINDS


@dataclass
class RunHistory:
    """Per-epoch aggregates plus the trained model."""

    losses: list
    penalties: list
    model: Classifier


def select_worst(model: Classifier, images: np.ndarray, labels: np.ndarray,
                 family: TransformFamily) -> np.ndarray:
    """Per-sample index of the family member maximizing cross-entropy.

    Equivalently the member minimizing the true class's softmax probability.
    Gradient-free; ties resolve to the lowest member index.
    """
    labels = np.asarray(labels)
    n = images.shape[0]
    scores = np.empty((len(family), n))
    for j, t in enumerate(family):
        probs = softmax_array(logits_array(model, apply_batch(t, images)))
        scores[j] = probs[np.arange(n), labels]
    return np.argmin(scores, axis=0)


def _augmented_copy(plan: TrainPlan, model: Classifier, images: np.ndarray,
                    labels: np.ndarray) -> np.ndarray:
    if plan.mode in WORST_MODES:
        picks = select_worst(model, images, labels, plan.family)
        out = np.empty_like(images)
        for j in np.unique(picks):
            mask = picks == j
            out[mask] = apply_batch(plan.family.members[j], images[mask])
        return out
    return apply_batch(plan.family.training_vertex(), images)


def _assemble(plan: TrainPlan, model: Classifier, images: np.ndarray,
              labels: np.ndarray, aux: Optional[AuxParams]):
    """Build the step's loss node; returns (loss, penalty value or None)."""
    if images.shape[0] < 1:
        raise ValueError("empty batch")
    y = one_hot(labels, model.num_classes)
    u = logits(model, images)
    if plan.mode == "baseline":
        return T.softmax_cross_entropy(u, y), None
    augmented = _augmented_copy(plan, model, images, labels)
    v = logits(model, augmented)
    ce = T.scale(T.add(T.softmax_cross_entropy(u, y),
                       T.softmax_cross_entropy(v, y)), 0.5)
    if not plan.uses_penalty:
        return ce, None
    pen = penalty(plan.align_kind, u, v, aux)
    return T.add(ce, T.scale(pen, plan.lam)), pen.item()


def step_loss(plan: TrainPlan, model: Classifier,
              batch: tuple, aux: Optional[AuxParams] = None) -> T.Tensor:
    """Scalar loss node for one (images, labels) batch under the plan."""
    images, labels = batch
    loss, _ = _assemble(plan, model, images, labels, aux)
    return loss


def _batch_seed(seed: int, epoch: int) -> int:
    # distinct shuffle per epoch, still fully determined by the plan seed
    return seed * 1_000_003 + epoch


def train(plan: TrainPlan, data: LabeledImages) -> RunHistory:
    """SGD over the planned epochs; deterministic for a fixed plan."""
    widths = (data.images.shape[1] * data.images.shape[2],
              *plan.hidden, data.num_classes)
    model = init(widths, plan.seed)
    aux = (init_aux(plan.align_kind, data.num_classes, plan.seed)
           if plan.needs_aux else None)
    losses, penalties = [], []
    for epoch in range(plan.epochs):
        lr = plan.lr.at(epoch)
        step_losses, step_pens = [], []
        for images, labels in batches(data, plan.batch_size, _batch_seed(plan.seed, epoch)):
            try:
                if aux is not None:
                    u_val = logits_array(model, images)
                    v_val = logits_array(
                        model, _augmented_copy(plan, model, images, labels))
                    aux_update(plan.align_kind, u_val, v_val, aux)
                model.params.zero_grad()
                if aux is not None:
                    aux.zero_grad()
                loss, pen = _assemble(plan, model, images, labels, aux)
                T.backward(loss)
            except NonFiniteError as exc:
                raise DivergenceError(
                    f"training diverged (non-finite loss) at epoch {epoch}") from exc
            for t in model.params.tensors():
                t.data = t.data - lr * t.grad
            step_losses.append(loss.item())
            if pen is not None:
                step_pens.append(pen)
        losses.append(float(np.mean(step_losses)))
        penalties.append(float(np.mean(step_pens)) if step_pens else 0.0)
    return RunHistory(losses, penalties, model)


def default_lambda_grid() -> np.ndarray:
    """Eight weights evenly log-spaced from 1e-7 to 1."""
    return np.logspace(-7, 0, 8)


DEFAULT_SEEDS = (0, 1, 2)


@dataclass
class SweepCell:
    """One (lambda, seed) training outcome inside a sweep."""

    lam: float
    seed: int
    report: Optional[EvalReport]
    error: Optional[str]


@dataclass
class SweepResult:
    cells: list
    selected_lambda: Optional[float]
    summary: Optional[dict]

    def at(self, lam: float) -> list:
        return [c for c in self.cells if c.lam == lam and c.report is not None]


def sweep(plan: TrainPlan, lambda_grid: Sequence[float], seeds: Sequence[int],
          data: LabeledImages, eval_data: Optional[LabeledImages] = None) -> SweepResult:
    """Train every (lambda, seed) cell and pick the best-robustness lambda.

    Selection maximizes mean robust accuracy over seeds; ties go to the
    earlier grid entry.  Failed cells are recorded and skipped, never fatal
    unless a lambda has no surviving cells.
    """
    if len(lambda_grid) == 0:
        raise ConfigError("lambda grid must be nonempty")
    hold_out = data if eval_data is None else eval_data
    cells = []
    for lam in lambda_grid:
        for seed in seeds:
            cell_plan = replace(plan, lam=float(lam), seed=int(seed))
            try:
                history = train(cell_plan, data)
                report = evaluate(history.model, hold_out, plan.family, int(seed))
                cells.append(SweepCell(float(lam), int(seed), report, None))
            except (DivergenceError, ConfigError) as exc:
                cells.append(SweepCell(float(lam), int(seed), None, str(exc)))
    best_lam, best_mean = None, -1.0
    for lam in lambda_grid:
        reports = [c.report for c in cells
                   if c.lam == float(lam) and c.report is not None]
        if not reports:
            continue
        mean_robust = float(np.mean([r.robust_accuracy for r in reports]))
        if mean_robust > best_mean:
            best_lam, best_mean = float(lam), mean_robust
    summary = None
    if best_lam is not None:
        chosen = [c.report for c in cells
                  if c.lam == best_lam and c.report is not None]
        summary = {
            metric: (float(np.mean([getattr(r, attr) for r in chosen])),
                     float(np.std([getattr(r, attr) for r in chosen])))
            for metric, attr in (("accuracy", "accuracy"),
                                 ("robustness", "robust_accuracy"),
                                 ("invariance", "invariance"))
        }
    return SweepResult(cells, best_lam, summary)
