"""Decisions of variable cardinality: instead of forcing a single winner,
eliminate improbable classes and keep the rest.

A policy accepts a single class when its probability clears the accept
threshold; otherwise everything above the retain threshold survives (at
least the top two, at most max_retained). Frequently-confused class pairs
discovered in a confusion matrix become merged "joint classes" for a
second-stage model that only sees cases the first stage could not settle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import Classifier, MlpModel, TrainConfig, train_joint
from .datakit import ClassGrouping, Dataset
from .errors import ValidationError
from .metrics import ConfusionMatrix

CONFIDENT_SINGLE = "confident-single"
SUBSET = "subset"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class EliminationPolicy:
    """accept_threshold gates the single-winner shortcut; retain_threshold
    keeps alternatives alive; max_retained caps the surviving subset.

    max_retained must be at least 2: when the accept gate fails the verdict
    never collapses below a pair.
    """

    accept_threshold: float = 0.9
    retain_threshold: float = 0.2
    max_retained: int = 4

    def __post_init__(self):
        if not (0.0 < self.accept_threshold <= 1.0):
            raise ValidationError("accept_threshold must lie in (0, 1]")
        if not (0.0 <= self.retain_threshold < 1.0):
            raise ValidationError("retain_threshold must lie in [0, 1)")
        if self.retain_threshold >= self.accept_threshold:
            raise ValidationError("retain_threshold must be below accept_threshold")
        if self.max_retained < 2:
            raise ValidationError("max_retained must be at least 2")


@dataclass(frozen=True)
class EliminationVerdict:
    """Retained and eliminated class subsets with their probabilities.

    Retained always contains the most probable class; retained and
    eliminated partition the class set.
    """

    retained: tuple[tuple[int, float], ...]
    eliminated: tuple[tuple[int, float], ...]
    mode: str
    trace: str
    class_names: tuple[str, ...] | None = None

    @property
    def retained_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.retained)

    @property
    def eliminated_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.eliminated)

    def _entry(self, index: int, prob: float) -> dict:
        entry = {"class": index, "prob": prob}
        if self.class_names is not None:
            entry["name"] = self.class_names[index]
        return entry

    def to_dict(self) -> dict:
        return {
            "retained": [self._entry(i, p) for i, p in self.retained],
            "eliminated": [self._entry(i, p) for i, p in self.eliminated],
            "mode": self.mode,
            "trace": self.trace,
        }


def _ranked(p: np.ndarray) -> np.ndarray:
    """Class indices by descending probability, ties toward lower index."""
    return np.lexsort((np.arange(len(p)), -p))


def eliminate(
    p, policy: EliminationPolicy, class_names=None
) -> EliminationVerdict:
    """Apply the elimination policy to one probability vector."""
    p = np.asarray(p, float)
    if p.ndim != 1 or len(p) < 2:
        raise ValidationError("expected a probability vector over >= 2 classes")
    if np.any(p < -1e-9) or abs(p.sum() - 1.0) > 1e-6:
        raise ValidationError("not a normalized probability vector")
    order = _ranked(p)
    names = tuple(class_names) if class_names is not None else None

    def label(i: int) -> str:
        return names[i] if names is not None else f"class {i}"

    top = int(order[0])
    if p[top] >= policy.accept_threshold:
        retained = (( top, float(p[top])),)
        eliminated = tuple((int(i), float(p[i])) for i in order[1:])
        trace = (
            f"accept: p({label(top)})={p[top]:.4f} >= {policy.accept_threshold}"
        )
        return EliminationVerdict(retained, eliminated, CONFIDENT_SINGLE, trace, names)

    n_above = int((p >= policy.retain_threshold).sum())
    n_keep = min(max(n_above, 2), policy.max_retained)
    kept = [int(i) for i in order[:n_keep]]
    retained = tuple((i, float(p[i])) for i in kept)
    eliminated = tuple((int(i), float(p[i])) for i in order[n_keep:])
    mode = SUBSET if eliminated else UNDECIDED
    trace = (
        f"no accept (max p={p[top]:.4f} < {policy.accept_threshold}); retained "
        f"{[label(i) for i in kept]} at retain >= {policy.retain_threshold}"
    )
    return EliminationVerdict(retained, eliminated, mode, trace, names)


def confused_pairs(cm: ConfusionMatrix) -> list[tuple[tuple[int, int], int]]:
    """Class pairs ranked by F_ij + F_ji descending; ties by lower indices."""
    counts = cm.counts
    k = cm.n_classes
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            pairs.append(((i, j), int(counts[i, j] + counts[j, i])))
    pairs.sort(key=lambda item: (-item[1], item[0]))
    return pairs


# ---------------------------------------------------------------------------
# Two-stage pipeline


@dataclass(frozen=True)
class TwoStagePipeline:
    """Reliable stage-1 classifier plus joint-class models consulted only
    when stage 1 cannot clear the reliability threshold."""

    stage1: Classifier
    joint_models: tuple[tuple[ClassGrouping, MlpModel], ...]
    reliability_threshold: float
    policy: EliminationPolicy
    class_names: tuple[str, ...]

    def __post_init__(self):
        if not (0.0 <= self.reliability_threshold <= 1.0):
            raise ValidationError("reliability threshold must lie in [0, 1]")


def build_two_stage(
    stage1: Classifier,
    groupings,
    train: Dataset,
    hidden: int,
    cfg: TrainConfig,
    reliability_threshold: float = 0.9,
    policy: EliminationPolicy | None = None,
) -> tuple[TwoStagePipeline, list[list[dict]]]:
    """Train one joint-class model per grouping. An empty grouping list
    degenerates to stage-1 + eliminate."""
    if stage1.class_names != train.class_names:
        raise ValidationError("stage-1 classifier and dataset class sets differ")
    policy = policy or EliminationPolicy()
    joint, logs = [], []
    for grouping in groupings:
        if grouping.n_source_classes != train.n_classes:
            raise ValidationError(
                f"grouping {grouping.groups} does not cover the {train.n_classes} classes"
            )
        if not grouping.has_merged_group():
            raise ValidationError(
                f"grouping {grouping.groups} merges nothing: at least one group "
                "of size >= 2 required"
            )
        try:
            model, history = train_joint(train, grouping, hidden, cfg)
        except Exception as exc:
            raise type(exc)(
                f"training joint model for grouping {grouping.display_names(train.class_names)}: {exc}"
            ) from exc
        joint.append((grouping, model))
        logs.append(history)
    pipeline = TwoStagePipeline(
        stage1, tuple(joint), reliability_threshold, policy, train.class_names
    )
    return pipeline, logs


def two_stage_classify(pipeline: TwoStagePipeline, x) -> EliminationVerdict:
    """Stage 1 if reliable, otherwise a merged group takes over.

    Arbitration among joint models: of the merged groups containing the
    stage-1 argmax class (so the verdict always retains it), the one with the
    highest output probability wins; ties go to the grouping listed first.
    When no merged group contains the argmax the policy eliminator takes
    over, capped at the largest merged-group size. The verdict reports
    stage-1 per-class probabilities.
    """
    p1 = pipeline.stage1.predict_probs(x)
    names = pipeline.class_names
    order = _ranked(p1)
    top = int(order[0])
    if p1[top] >= pipeline.reliability_threshold:
        retained = ((top, float(p1[top])),)
        eliminated = tuple((int(i), float(p1[i])) for i in order[1:])
        trace = (
            f"stage1 accept: p({names[top]})={p1[top]:.4f} >= "
            f"{pipeline.reliability_threshold}"
        )
        return EliminationVerdict(retained, eliminated, CONFIDENT_SINGLE, trace, names)

    prefix = f"stage1 max p={p1[top]:.4f} < {pipeline.reliability_threshold}"

    if not pipeline.joint_models:
        verdict = eliminate(p1, pipeline.policy, names)
        return EliminationVerdict(
            verdict.retained,
            verdict.eliminated,
            verdict.mode,
            f"{prefix}; no joint models; {verdict.trace}",
            names,
        )

    best = None  # (sort key, group, score, display name)
    largest_group = 2
    for gi, (grouping, model) in enumerate(pipeline.joint_models):
        q = model.predict_probs(x)
        for oi, group in enumerate(grouping.groups):
            if len(group) < 2:
                continue
            largest_group = max(largest_group, len(group))
            if top not in group:
                continue
            score = float(q[oi])
            key = (-score, gi, oi)
            if best is None or key < best[0]:
                display = grouping.display_names(names)[oi]
                best = (key, group, score, display)

    if best is None:
        capped = EliminationPolicy(
            pipeline.policy.accept_threshold,
            pipeline.policy.retain_threshold,
            min(pipeline.policy.max_retained, largest_group),
        )
        verdict = eliminate(p1, capped, names)
        return EliminationVerdict(
            verdict.retained,
            verdict.eliminated,
            verdict.mode,
            f"{prefix}; no joint class covers {names[top]}; {verdict.trace}",
            names,
        )

    _, group, score, display = best
    retained_set = set(group)
    retained = tuple(
        (int(i), float(p1[i])) for i in order if int(i) in retained_set
    )
    eliminated = tuple(
        (int(i), float(p1[i])) for i in order if int(i) not in retained_set
    )
    trace = f"{prefix}; stage2 retained joint class {display} (p={score:.4f})"
    return EliminationVerdict(retained, eliminated, SUBSET, trace, names)


# ---------------------------------------------------------------------------
# Evaluation curves and relaxed criteria


@dataclass(frozen=True)
class RejectionPoint:
    threshold: float
    rejection_rate: float
    accuracy: float | None  # None when every case is rejected

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "rejection_rate": self.rejection_rate,
            "accuracy": self.accuracy,
        }


def rejection_curve(model: Classifier, data: Dataset, thresholds) -> list[RejectionPoint]:
    """Reject a case at threshold t iff its top probability is below t;
    report the rejection rate and the accuracy over what remains."""
    thresholds = np.asarray(thresholds, float)
    if thresholds.size == 0:
        raise ValidationError("thresholds must be nonempty")
    if np.any(thresholds < 0) or np.any(thresholds > 1):
        raise ValidationError("thresholds must lie in [0, 1]")
    if thresholds.size > 1 and np.any(np.diff(thresholds) <= 0):
        raise ValidationError("thresholds must be strictly increasing")
    probs = model.predict_batch(data.cases)
    winners = probs.argmax(axis=1)
    confidence = probs.max(axis=1)
    correct = winners == data.labels
    n = data.n_cases
    points = []
    for t in thresholds:
        keep = confidence >= t
        kept = int(keep.sum())
        acc = float(correct[keep].mean()) if kept else None
        points.append(RejectionPoint(float(t), float((n - kept) / n), acc))
    return points


def _top_k_hits(probs: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    ranked = np.lexsort(
        (np.broadcast_to(np.arange(probs.shape[1]), probs.shape), -probs), axis=1
    )[:, :k]
    return (ranked == labels[:, None]).any(axis=1)


def relaxed_accuracy(model: Classifier, data: Dataset, k: int) -> float:
    """Fraction of cases whose true class is among the k most probable
    (probability ties resolved toward the lower class index)."""
    if not (1 <= k <= data.n_classes):
        raise ValidationError("k must satisfy 1 <= k <= K")
    probs = model.predict_batch(data.cases)
    return float(_top_k_hits(probs, data.labels, k).mean())


def thresholded_relaxed_accuracy(
    model: Classifier,
    data: Dataset,
    threshold: float,
    below_threshold: str = "singleton",
) -> float:
    """Top-2 success with a probability floor for the second class.

    When the second class falls below the floor the counting rule is
    ambiguous; both readings are available:
      - "singleton": the prediction collapses to the top class alone
      - "miss": no pair can be formed and the case counts as a failure
    """
    if below_threshold not in ("singleton", "miss"):
        raise ValidationError("below_threshold must be 'singleton' or 'miss'")
    if not (0.0 <= threshold <= 1.0):
        raise ValidationError("threshold must lie in [0, 1]")
    probs = model.predict_batch(data.cases)
    ranked = np.lexsort(
        (np.broadcast_to(np.arange(probs.shape[1]), probs.shape), -probs), axis=1
    )
    top1 = ranked[:, 0]
    top2 = ranked[:, 1]
    second_ok = probs[np.arange(len(probs)), top2] >= threshold
    hit1 = top1 == data.labels
    hit2 = top2 == data.labels
    if below_threshold == "singleton":
        success = np.where(second_ok, hit1 | hit2, hit1)
    else:
        success = second_ok & (hit1 | hit2)
    return float(success.mean())


def high_confidence_errors(
    model: Classifier, data: Dataset, threshold: float
) -> tuple[int, float]:
    """Cases misclassified although the top probability cleared the threshold."""
    if not (0.0 < threshold < 1.0):
        raise ValidationError("threshold must lie strictly inside (0, 1)")
    probs = model.predict_batch(data.cases)
    winners = probs.argmax(axis=1)
    confident_wrong = (probs.max(axis=1) >= threshold) & (winners != data.labels)
    count = int(confident_wrong.sum())
    return count, count / data.n_cases
