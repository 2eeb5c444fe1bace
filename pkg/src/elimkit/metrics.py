"""Confusion matrices and chance-corrected performance statistics: overall
accuracy p0, kappa, tau against the base rate, their variances, and the
Z-score test for comparing two results. Also the kernel-weighted error
functionals used for class-similarity and locally-weighted evaluation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrixError, ValidationError


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[i][j] = number of cases predicted i whose true class is j."""

    counts: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        counts = np.array(self.counts, dtype=int)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValidationError("confusion matrix must be square")
        if counts.shape[0] != len(self.class_names):
            raise ValidationError("one class name per row required")
        if np.any(counts < 0):
            raise ValidationError("confusion counts must be nonnegative")
        if counts.sum() == 0:
            raise ValidationError("confusion matrix must contain at least one case")

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.class_names == other.class_names and np.array_equal(
            self.counts, other.counts
        )

    def to_dict(self) -> dict:
        return {"class_names": list(self.class_names), "counts": self.counts.tolist()}


def confusion(preds, truth, n_classes, class_names=None) -> ConfusionMatrix:
    """Count predicted-vs-true pairs into a K x K matrix."""
    preds = np.asarray(preds, int)
    truth = np.asarray(truth, int)
    if len(preds) != len(truth):
        raise ValidationError("predictions and truth must have equal length")
    if len(preds) == 0:
        raise ValidationError("need at least one case")
    if preds.min() < 0 or preds.max() >= n_classes:
        raise ValidationError("prediction index out of range")
    if truth.min() < 0 or truth.max() >= n_classes:
        raise ValidationError("truth index out of range")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (preds, truth), 1)
    if class_names is None:
        class_names = tuple(f"c{i}" for i in range(n_classes))
    return ConfusionMatrix(counts, class_names)


def accuracy(cm: ConfusionMatrix) -> float:
    return float(np.trace(cm.counts) / cm.total)


def base_rate(cm: ConfusionMatrix) -> float:
    """Maximum a-priori class probability, from the true-class marginal."""
    return float(cm.counts.sum(axis=0).max() / cm.total)


def kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement (N*sum F_ii - sum F_i+ F_+i) / (N^2 - sum F_i+ F_+i)."""
    counts = cm.counts.astype(float)
    n = cm.total
    diag = np.trace(counts)
    marginal = float((counts.sum(axis=1) * counts.sum(axis=0)).sum())
    denom = n * n - marginal
    if denom == 0:
        raise DegenerateMatrixError(
            "kappa undefined: all cases fall in a single predicted/true cell"
        )
    return float((n * diag - marginal) / denom)


def tau(cm: ConfusionMatrix, p_r: float | None = None) -> float:
    """(p0 - p_r) / (1 - p_r); zero at the base rate, one for perfect predictions."""
    if p_r is None:
        p_r = base_rate(cm)
    if p_r >= 1.0:
        raise ValidationError("tau undefined when the base rate is 1")
    return (accuracy(cm) - p_r) / (1.0 - p_r)


def variances(
    cm: ConfusionMatrix, p_r: float | None = None, tau_variance="printed"
) -> tuple[float, float]:
    """var(p0) = p0(1-p0)/N and var(tau).

    ``tau_variance="printed"`` divides var(p0) by (1-p_r), the published
    form; ``"delta"`` divides by (1-p_r)^2, the delta-method form. Neither
    is asserted as correct; the published form is the default.
    """
    if p_r is None:
        p_r = base_rate(cm)
    if p_r >= 1.0:
        raise ValidationError("variance of tau undefined when the base rate is 1")
    p0 = accuracy(cm)
    var_p0 = p0 * (1.0 - p0) / cm.total
    if tau_variance == "printed":
        var_tau = var_p0 / (1.0 - p_r)
    elif tau_variance == "delta":
        var_tau = var_p0 / (1.0 - p_r) ** 2
    else:
        raise ValidationError(f"unknown tau_variance {tau_variance!r}")
    return float(var_p0), float(var_tau)


def z_score(tau1, var1, tau2, var2) -> tuple[float, bool]:
    """Z = (tau1 - tau2) / sqrt(var1 + var2); significant iff |Z| >= 1.96."""
    if var1 < 0 or var2 < 0:
        raise ValidationError("variances must be nonnegative")
    total = var1 + var2
    if total == 0:
        raise ValidationError("z-score undefined: both variances are zero")
    z = (tau1 - tau2) / math.sqrt(total)
    return float(z), abs(z) >= 1.96


@dataclass(frozen=True)
class MetricReport:
    p0: float
    kappa: float
    tau: float
    var_p0: float
    var_tau: float
    n: int
    base_rate: float

    def to_dict(self) -> dict:
        return {
            "p0": self.p0,
            "kappa": self.kappa,
            "tau": self.tau,
            "var_p0": self.var_p0,
            "var_tau": self.var_tau,
            "n": self.n,
            "base_rate": self.base_rate,
        }


def metric_report(
    cm: ConfusionMatrix, p_r: float | None = None, tau_variance="printed"
) -> MetricReport:
    if p_r is None:
        p_r = base_rate(cm)
    var_p0, var_tau = variances(cm, p_r, tau_variance)
    return MetricReport(
        p0=accuracy(cm),
        kappa=kappa(cm),
        tau=tau(cm, p_r),
        var_p0=var_p0,
        var_tau=var_tau,
        n=cm.total,
        base_rate=float(p_r),
    )


# ---------------------------------------------------------------------------
# Kernel-weighted error functionals


def make_kernel(shape="identity", width=1.0):
    """Kernel factory for the weighted error functionals.

    identity: K(d) = d        (similarity error; 0/1 distance counts errors)
    uniform:  K(d) = 1
    gaussian: K(d) = exp(-d^2 / 2 width^2)
    triangular: K(d) = max(0, 1 - d/width)
    indicator:  K(d) = 1 iff d == 0
    """
    if width <= 0:
        raise ValidationError("kernel width must be positive")
    if shape == "identity":
        return lambda d: np.asarray(d, float)
    if shape == "uniform":
        return lambda d: np.ones_like(np.asarray(d, float))
    if shape == "gaussian":
        return lambda d: np.exp(-np.asarray(d, float) ** 2 / (2.0 * width * width))
    if shape == "triangular":
        return lambda d: np.maximum(0.0, 1.0 - np.asarray(d, float) / width)
    if shape == "indicator":
        return lambda d: (np.asarray(d, float) == 0.0).astype(float)
    raise ValidationError(f"unknown kernel shape {shape!r}")


def similarity_weighted_error(preds, truth, class_distance, kernel) -> float:
    """Sum over cases of kernel(distance between predicted and true class)."""
    preds = np.asarray(preds, int)
    truth = np.asarray(truth, int)
    dist = np.asarray(class_distance, float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValidationError("class distance matrix must be square")
    if not np.array_equal(dist, dist.T):
        raise ValidationError("class distance matrix must be symmetric")
    if np.any(np.diag(dist) != 0):
        raise ValidationError("class distance matrix must have a zero diagonal")
    if len(preds) != len(truth):
        raise ValidationError("predictions and truth must have equal length")
    if callable(kernel):
        k = kernel
    else:
        k = make_kernel(kernel)
    return float(np.sum(k(dist[preds, truth])))


def locally_weighted_error(predictions, targets, distances_to_ref, kernel) -> float:
    """Sum of kernel(distance to the reference) * squared residual."""
    predictions = np.asarray(predictions, float)
    targets = np.asarray(targets, float)
    distances = np.asarray(distances_to_ref, float)
    if not (len(predictions) == len(targets) == len(distances)):
        raise ValidationError("predictions, targets and distances must align")
    k = kernel if callable(kernel) else make_kernel(kernel)
    weights = np.asarray(k(distances), float)
    if np.any(weights < 0):
        raise ValidationError("kernel weights must be nonnegative")
    return float(np.sum(weights * (predictions - targets) ** 2))


# ---------------------------------------------------------------------------
# CSV round-trip


def write_confusion_csv(cm: ConfusionMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(list(cm.class_names))
    for row in cm.counts:
        writer.writerow([int(v) for v in row])
    return out.getvalue()


def read_confusion_csv(text: str) -> ConfusionMatrix:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows:
        raise ValidationError("empty confusion CSV")
    names = tuple(h.strip() for h in rows[0])
    counts = [[int(v) for v in row] for row in rows[1:]]
    return ConfusionMatrix(np.asarray(counts, int), names)
