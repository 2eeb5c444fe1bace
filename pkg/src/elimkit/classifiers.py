"""Classifier zoo: interval rules, kNN, LDA with a logistic output, a
single-hidden-layer softmax MLP (trainable under standard or joint-class
cost), and probability-averaging committees.

Every classifier maps a feature vector to a probability vector over its
classes; crisp models emit one-hot vectors. ``predict_batch`` is the
vectorized primitive, ``predict_probs`` the single-case convenience.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .datakit import (
    CONTINUOUS,
    ClassGrouping,
    Dataset,
    FeatureMeta,
    GaussianMixtureSpec,
    bayes_posterior_batch,
    identity_grouping,
)
from .errors import (
    SingularCovarianceError,
    TrainingDivergedError,
    ValidationError,
)

QUADRATIC = "quadratic"
CROSS_ENTROPY = "cross-entropy"

_PROB_EPS = 1e-12


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shift-invariant by construction."""
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def check_probabilities(p, n_classes=None, tol=1e-9) -> np.ndarray:
    """Assert p is a valid probability vector (nonnegative, sums to 1)."""
    p = np.asarray(p, float)
    if n_classes is not None and p.shape[-1] != n_classes:
        raise ValidationError(f"expected {n_classes} class probabilities")
    if np.any(p < -tol) or np.any(np.abs(p.sum(axis=-1) - 1.0) > tol):
        raise ValidationError("not a normalized probability vector")
    return p


class Classifier(ABC):
    """Anything that maps a feature vector to class probabilities."""

    kind: str = "classifier"

    def __init__(self, class_names, features=None):
        self.class_names: tuple[str, ...] = tuple(class_names)
        self.features: tuple[FeatureMeta, ...] | None = (
            tuple(features) if features is not None else None
        )
        if len(self.class_names) < 2:
            raise ValidationError("a classifier needs at least 2 classes")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_features(self) -> int | None:
        return len(self.features) if self.features is not None else None

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, float)
        if X.ndim != 2:
            raise ValidationError("expected a (n, N) batch of feature vectors")
        expected = self.n_features
        if expected is not None and X.shape[1] != expected:
            raise ValidationError(
                f"expected {expected} features, got {X.shape[1]}"
            )
        return X

    @abstractmethod
    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        """Probabilities for a batch of inputs, shape (n, K)."""

    def predict_probs(self, x) -> np.ndarray:
        return self.predict_batch(np.atleast_2d(np.asarray(x, float)))[0]

    def params_dict(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "class_names": list(self.class_names),
            "features": [m.to_dict() for m in self.features]
            if self.features is not None
            else None,
            "params": self.params_dict(),
        }


def _features_from_dict(d):
    feats = d.get("features")
    if feats is None:
        return None
    return tuple(FeatureMeta.from_dict(m) for m in feats)


# ---------------------------------------------------------------------------
# Interval rules


@dataclass(frozen=True)
class RuleCondition:
    """x[feature] in [low, high]."""

    feature: int
    low: float
    high: float

    def __post_init__(self):
        if not (self.low <= self.high):
            raise ValidationError(
                f"condition on feature {self.feature}: low {self.low} > high {self.high}"
            )


@dataclass(frozen=True)
class Rule:
    class_index: int
    conditions: tuple[RuleCondition, ...]

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(self.conditions))
        if not self.conditions:
            raise ValidationError("a rule needs at least one condition")


class IntervalRuleSet(Classifier):
    """Ordered crisp rules; first match wins, otherwise the default class."""

    kind = "rules"

    def __init__(self, rules, default_class, class_names, features=None):
        super().__init__(class_names, features)
        self.rules: tuple[Rule, ...] = tuple(rules)
        self.default_class = int(default_class)
        if not (0 <= self.default_class < self.n_classes):
            raise ValidationError("default_class out of range")
        for rule in self.rules:
            if not (0 <= rule.class_index < self.n_classes):
                raise ValidationError(f"rule class {rule.class_index} out of range")
            for cond in rule.conditions:
                if self.features is not None:
                    if cond.feature >= len(self.features):
                        raise ValidationError(
                            f"rule condition references feature {cond.feature}"
                        )
                    if self.features[cond.feature].kind != CONTINUOUS:
                        raise ValidationError(
                            "interval rules apply to continuous features only"
                        )

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        n = len(X)
        assigned = np.full(n, -1, dtype=int)
        for rule in self.rules:
            hit = np.ones(n, dtype=bool)
            for cond in rule.conditions:
                col = X[:, cond.feature]
                hit &= (col >= cond.low) & (col <= cond.high)
            hit &= assigned < 0
            assigned[hit] = rule.class_index
        assigned[assigned < 0] = self.default_class
        out = np.zeros((n, self.n_classes))
        out[np.arange(n), assigned] = 1.0
        return out

    def params_dict(self) -> dict:
        return {
            "rules": [
                {
                    "class": r.class_index,
                    "conditions": [
                        {"feature": c.feature, "low": c.low, "high": c.high}
                        for c in r.conditions
                    ],
                }
                for r in self.rules
            ],
            "default_class": self.default_class,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IntervalRuleSet":
        p = d["params"]
        rules = tuple(
            Rule(
                r["class"],
                tuple(
                    RuleCondition(c["feature"], c["low"], c["high"])
                    for c in r["conditions"]
                ),
            )
            for r in p["rules"]
        )
        return cls(
            rules, p["default_class"], d["class_names"], _features_from_dict(d)
        )


def rules_predict(rules: IntervalRuleSet, x) -> np.ndarray:
    """One-hot prediction of the first matching rule (default if none)."""
    return rules.predict_probs(x)


# ---------------------------------------------------------------------------
# k nearest neighbours


class KnnClassifier(Classifier):
    """Memorized training set; crisp majority vote or vote-fraction output.

    All ties (equal distances at the k-boundary, equal vote counts) resolve
    toward the lowest class index.
    """

    kind = "knn"

    def __init__(self, train: Dataset, k, metric="manhattan", mode="crisp"):
        super().__init__(train.class_names, train.features)
        if train.n_cases == 0:
            raise ValidationError("empty training set")
        if not (1 <= k <= train.n_cases):
            raise ValidationError("k must satisfy 1 <= k <= n_train")
        if metric not in ("manhattan", "euclidean"):
            raise ValidationError(f"unknown metric {metric!r}")
        if mode not in ("crisp", "vote"):
            raise ValidationError(f"unknown mode {mode!r}")
        self.train_cases = np.array(train.cases)
        self.train_labels = np.array(train.labels)
        self.k = int(k)
        self.metric = metric
        self.mode = mode

    def _vote(self, X: np.ndarray, exclude_self: bool) -> np.ndarray:
        diff = X[:, None, :] - self.train_cases[None, :, :]
        if self.metric == "manhattan":
            dist = np.abs(diff).sum(axis=2)
        else:
            dist = np.sqrt((diff * diff).sum(axis=2))
        if exclude_self:
            np.fill_diagonal(dist, np.inf)
        # stable neighbour order: distance, then class label, then case index
        order = np.lexsort(
            (
                np.broadcast_to(np.arange(len(self.train_cases)), dist.shape),
                np.broadcast_to(self.train_labels, dist.shape),
                dist,
            ),
            axis=1,
        )[:, : self.k]
        votes = self.train_labels[order]
        counts = np.zeros((len(X), self.n_classes))
        for c in range(self.n_classes):
            counts[:, c] = (votes == c).sum(axis=1)
        if self.mode == "vote":
            return counts / self.k
        winners = counts.argmax(axis=1)  # argmax takes the lowest index on ties
        out = np.zeros((len(X), self.n_classes))
        out[np.arange(len(X)), winners] = 1.0
        return out

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return self._vote(self._check_input(X), exclude_self=False)

    def loo_predict_batch(self) -> np.ndarray:
        """Predictions for every memorized case with itself left out: the
        honest generalization estimate on the training data."""
        if self.k > len(self.train_cases) - 1:
            raise ValidationError("leave-one-out needs k <= n_train - 1")
        return self._vote(self.train_cases, exclude_self=True)

    def params_dict(self) -> dict:
        return {
            "cases": self.train_cases.tolist(),
            "labels": self.train_labels.tolist(),
            "k": self.k,
            "metric": self.metric,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnnClassifier":
        p = d["params"]
        features = _features_from_dict(d)
        if features is None:
            cases = np.asarray(p["cases"], float)
            features = tuple(
                FeatureMeta(f"x{i}", CONTINUOUS, float(cases[:, i].min()), float(cases[:, i].max()))
                for i in range(cases.shape[1])
            )
        train = Dataset(
            np.asarray(p["cases"], float),
            np.asarray(p["labels"], int),
            tuple(d["class_names"]),
            features,
        )
        return cls(train, p["k"], p["metric"], p["mode"])


def knn_predict(train: Dataset, x, k, metric="manhattan", mode="crisp") -> np.ndarray:
    return KnnClassifier(train, k, metric, mode).predict_probs(x)


def knn_loo_accuracy(train: Dataset, k=1, metric="manhattan") -> float:
    """Leave-one-out training accuracy of kNN (each case scored by a model
    built without it)."""
    model = KnnClassifier(train, k, metric, mode="crisp")
    preds = model.loo_predict_batch().argmax(axis=1)
    return float((preds == model.train_labels).mean())


# ---------------------------------------------------------------------------
# LDA with a logistic output


class LinearLogisticModel(Classifier):
    """Two-class linear discriminant with p(C_0|x) = sigmoid(slope*(w.x - theta))."""

    kind = "linear-logistic"

    def __init__(self, w, theta, slope=1.0, class_names=("c0", "c1"), features=None):
        super().__init__(class_names, features)
        if self.n_classes != 2:
            raise ValidationError("LinearLogisticModel is strictly 2-class")
        if slope <= 0:
            raise ValidationError("slope must be positive")
        self.w = np.asarray(w, float)
        self.theta = float(theta)
        self.slope = float(slope)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        if X.shape[1] != len(self.w):
            raise ValidationError(f"expected {len(self.w)} features")
        p0 = expit(self.slope * (X @ self.w - self.theta))
        return np.column_stack([p0, 1.0 - p0])

    def with_slope(self, slope: float) -> "LinearLogisticModel":
        return LinearLogisticModel(
            self.w, self.theta, slope, self.class_names, self.features
        )

    def params_dict(self) -> dict:
        return {"w": self.w.tolist(), "theta": self.theta, "slope": self.slope}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearLogisticModel":
        p = d["params"]
        return cls(
            p["w"], p["theta"], p["slope"], d["class_names"], _features_from_dict(d)
        )

    @classmethod
    def from_mixture(cls, spec: GaussianMixtureSpec, slope=1.0) -> "LinearLogisticModel":
        """Inject the true mixture parameters (oracle construction)."""
        from .datakit import logistic_parameters

        w, theta = logistic_parameters(spec)
        return cls(w, theta, slope, spec.resolved_class_names())


def train_lda(train: Dataset, slope=1.0, ridge=0.0) -> LinearLogisticModel:
    """Fit w = pooled-covariance^-1 (mean_0 - mean_1); theta puts p=1/2 on the
    estimated Bayes boundary including the log prior-ratio term."""
    if train.n_classes != 2:
        raise ValidationError("train_lda requires exactly 2 classes")
    X, y = train.cases, train.labels
    n0, n1 = int((y == 0).sum()), int((y == 1).sum())
    if n0 == 0 or n1 == 0:
        raise ValidationError("both classes must be present in the training data")
    m0 = X[y == 0].mean(axis=0)
    m1 = X[y == 1].mean(axis=0)
    centered = np.vstack([X[y == 0] - m0, X[y == 1] - m1])
    pooled = centered.T @ centered / max(len(X) - 2, 1)
    if ridge:
        pooled = pooled + ridge * np.eye(train.n_features)
    try:
        inv = np.linalg.inv(pooled)
    except np.linalg.LinAlgError:
        raise SingularCovarianceError(
            "pooled within-class covariance is singular; "
            "retry with a small regularization ridge (train_lda(..., ridge=1e-6))"
        ) from None
    w = inv @ (m0 - m1)
    theta = 0.5 * float((m0 + m1) @ inv @ (m0 - m1)) - math.log(n0 / n1)
    return LinearLogisticModel(
        w, theta, slope, train.class_names, train.features
    )


# ---------------------------------------------------------------------------
# Bayes-optimal classifier of a known mixture (oracle model)


class BayesMixtureClassifier(Classifier):
    """Exact posterior of a known Gaussian mixture, wrapped as a classifier."""

    kind = "bayes-mixture"

    def __init__(self, spec: GaussianMixtureSpec, features=None):
        super().__init__(spec.resolved_class_names(), features)
        self.spec = spec

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return bayes_posterior_batch(self.spec, X)

    def params_dict(self) -> dict:
        return {"spec": self.spec.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "BayesMixtureClassifier":
        return cls(
            GaussianMixtureSpec.from_dict(d["params"]["spec"]),
            _features_from_dict(d),
        )


# ---------------------------------------------------------------------------
# MLP with softmax output


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-training settings shared by the MLP and soft-rule tuners."""

    transform: str = QUADRATIC
    learning_rate: float = 0.1
    momentum: float = 0.9
    l2: float = 0.0
    epochs: int = 200
    patience: int | None = None
    seed: int = 0
    risk_matrix: np.ndarray | None = None
    batch_size: int = 32
    val_fraction: float = 0.0

    def __post_init__(self):
        if self.transform not in (QUADRATIC, CROSS_ENTROPY):
            raise ValidationError(f"unknown error transform {self.transform!r}")
        if self.learning_rate <= 0:
            raise ValidationError("learning rate must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be at least 1")
        if not (0.0 <= self.momentum < 1.0):
            raise ValidationError("momentum must lie in [0, 1)")
        if self.l2 < 0:
            raise ValidationError("l2 must be nonnegative")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be at least 1")
        if not (0.0 <= self.val_fraction < 1.0):
            raise ValidationError("val_fraction must lie in [0, 1)")
        if self.risk_matrix is not None:
            r = np.asarray(self.risk_matrix, float)
            object.__setattr__(self, "risk_matrix", r)
            if r.ndim != 2 or r.shape[0] != r.shape[1]:
                raise ValidationError("risk matrix must be square")
            if np.any(r < 0) or np.any(np.diag(r) != 0):
                raise ValidationError(
                    "risk matrix must be nonnegative with a zero diagonal"
                )


class MlpModel(Classifier):
    """N -> H -> K network, logistic hidden units, softmax output.

    Joint-class models carry ``groups``: the original-class composition of
    each output unit.
    """

    kind = "mlp"

    def __init__(
        self,
        w1,
        b1,
        w2,
        b2,
        class_names,
        features=None,
        groups: ClassGrouping | None = None,
        source_class_names=None,
    ):
        super().__init__(class_names, features)
        self.w1 = np.asarray(w1, float)
        self.b1 = np.asarray(b1, float)
        self.w2 = np.asarray(w2, float)
        self.b2 = np.asarray(b2, float)
        self.groups = groups
        self.source_class_names = (
            tuple(source_class_names) if source_class_names is not None else None
        )
        if not all(
            np.all(np.isfinite(a)) for a in (self.w1, self.b1, self.w2, self.b2)
        ):
            raise ValidationError("MLP weights must be finite")
        if self.w2.shape[1] != self.n_classes:
            raise ValidationError("output layer width must equal the class count")

    @property
    def hidden_units(self) -> int:
        return self.w1.shape[1]

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        hidden = expit(X @ self.w1 + self.b1)
        return softmax(hidden @ self.w2 + self.b2)

    def params_dict(self) -> dict:
        return {
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
            "groups": self.groups.to_dict() if self.groups is not None else None,
            "source_class_names": list(self.source_class_names)
            if self.source_class_names is not None
            else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        p = d["params"]
        groups = ClassGrouping.from_dict(p["groups"]) if p.get("groups") else None
        return cls(
            p["w1"],
            p["b1"],
            p["w2"],
            p["b2"],
            d["class_names"],
            _features_from_dict(d),
            groups,
            p.get("source_class_names"),
        )


def _error_transform(p, targets, transform):
    """Per-output error H(p - delta) and its derivative dH/dp."""
    u = p - targets
    if transform == QUADRATIC:
        return u * u, 2.0 * u
    pc = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
    value = np.where(targets > 0.5, -np.log(pc), -np.log1p(-pc))
    deriv = np.where(targets > 0.5, -1.0 / pc, 1.0 / (1.0 - pc))
    return value, deriv


def mlp_loss_and_gradients(model: MlpModel, X, targets, cfg: TrainConfig):
    """Mean cost over the batch plus L2 penalty, with analytic gradients.

    Cost per case: sum_i weight_i * H(p_i - delta_i). With a risk matrix R
    the off-target outputs are weighted by R[i, true]; R = 1 - delta gives
    uniform weights, i.e. the plain cost.
    """
    X = np.asarray(X, float)
    targets = np.asarray(targets, float)
    n = len(X)
    # overflow is legal here: the training loop detects non-finite losses
    # and raises TrainingDivergedError
    with np.errstate(over="ignore", invalid="ignore"):
        hidden = expit(X @ model.w1 + model.b1)
        probs = softmax(hidden @ model.w2 + model.b2)

        weights = np.ones_like(targets)
        if cfg.risk_matrix is not None:
            if cfg.risk_matrix.shape != (targets.shape[1], targets.shape[1]):
                raise ValidationError("risk matrix shape must match the class count")
            true_idx = targets.argmax(axis=1)
            weights = cfg.risk_matrix[:, true_idx].T.copy()
            weights[np.arange(n), true_idx] = 1.0

        h_val, h_deriv = _error_transform(probs, targets, cfg.transform)
        loss = float((weights * h_val).sum() / n)
        loss += cfg.l2 * float((model.w1 ** 2).sum() + (model.w2 ** 2).sum())

        g = weights * h_deriv / n
        dz = probs * (g - (g * probs).sum(axis=1, keepdims=True))
        dw2 = hidden.T @ dz + 2.0 * cfg.l2 * model.w2
        db2 = dz.sum(axis=0)
        dhid = (dz @ model.w2.T) * hidden * (1.0 - hidden)
        dw1 = X.T @ dhid + 2.0 * cfg.l2 * model.w1
        db1 = dhid.sum(axis=0)
    return loss, {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}


def _group_targets(labels: np.ndarray, grouping: ClassGrouping) -> np.ndarray:
    """One-hot over groups; a case of any constituent class targets its group."""
    group_of = np.empty(grouping.n_source_classes, dtype=int)
    for gi, g in enumerate(grouping.groups):
        for c in g:
            group_of[c] = gi
    targets = np.zeros((len(labels), grouping.n_groups))
    targets[np.arange(len(labels)), group_of[labels]] = 1.0
    return targets


def train_joint(
    train: Dataset, grouping: ClassGrouping, hidden: int, cfg: TrainConfig
) -> tuple[MlpModel, list[dict]]:
    """Train an MLP with one output per class group.

    The merged group's output is trained against membership of the case in
    any constituent class. A grouping of singletons reproduces plain
    training exactly (same seed, same losses).
    """
    if grouping.n_source_classes != train.n_classes:
        raise ValidationError(
            f"grouping covers {grouping.n_source_classes} classes, dataset has {train.n_classes}"
        )
    if hidden < 1:
        raise ValidationError("hidden must be at least 1")

    X = np.array(train.cases)
    targets = _group_targets(np.array(train.labels), grouping)
    k_out = grouping.n_groups
    rng = np.random.default_rng(cfg.seed)

    n = len(X)
    n_val = int(round(n * cfg.val_fraction))
    order = rng.permutation(n)
    val_idx, train_idx = order[:n_val], order[n_val:]
    if len(train_idx) == 0:
        raise ValidationError("validation split leaves no training cases")
    Xt, Tt = X[train_idx], targets[train_idx]
    Xv, Tv = X[val_idx], targets[val_idx]

    n_in = train.n_features
    model = MlpModel(
        rng.normal(0.0, 1.0 / math.sqrt(n_in), (n_in, hidden)),
        np.zeros(hidden),
        rng.normal(0.0, 1.0 / math.sqrt(hidden), (hidden, k_out)),
        np.zeros(k_out),
        grouping.display_names(train.class_names),
        train.features,
        groups=grouping,
        source_class_names=train.class_names,
    )
    velocity = {k: np.zeros_like(v) for k, v in
                (("w1", model.w1), ("b1", model.b1), ("w2", model.w2), ("b2", model.b2))}

    history: list[dict] = []
    best_monitor = math.inf
    stale = 0
    for epoch in range(cfg.epochs):
        perm = rng.permutation(len(Xt))
        for start in range(0, len(Xt), cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            _, grads = mlp_loss_and_gradients(model, Xt[idx], Tt[idx], cfg)
            for key, grad in grads.items():
                velocity[key] = cfg.momentum * velocity[key] - cfg.learning_rate * grad
                setattr(model, key, getattr(model, key) + velocity[key])

        loss, _ = mlp_loss_and_gradients(model, Xt, Tt, cfg)
        if not math.isfinite(loss):
            raise TrainingDivergedError(epoch)
        acc = float(
            (model.predict_batch(Xt).argmax(axis=1) == Tt.argmax(axis=1)).mean()
        )
        history.append({"epoch": epoch, "loss": loss, "train_accuracy": acc})

        monitor = loss
        if len(Xv):
            monitor, _ = mlp_loss_and_gradients(model, Xv, Tv, cfg)
        if monitor < best_monitor - 1e-12:
            best_monitor = monitor
            stale = 0
        else:
            stale += 1
            if cfg.patience is not None and stale > cfg.patience:
                break
    return model, history


def train_mlp(train: Dataset, hidden: int, cfg: TrainConfig) -> tuple[MlpModel, list[dict]]:
    """Train a plain per-class MLP (identity grouping of train_joint)."""
    return train_joint(train, identity_grouping(train.n_classes), hidden, cfg)


# ---------------------------------------------------------------------------
# Committees


class Committee(Classifier):
    """Fixed member list; prediction is the arithmetic mean of member outputs."""

    kind = "committee"

    def __init__(self, members):
        members = tuple(members)
        if not members:
            raise ValidationError("a committee needs at least one member")
        first = members[0]
        for m in members[1:]:
            if m.class_names != first.class_names:
                raise ValidationError("committee members disagree on class names")
        super().__init__(first.class_names, first.features)
        self.members = members

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return np.mean([m.predict_batch(X) for m in self.members], axis=0)

    def params_dict(self) -> dict:
        return {"members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, d: dict) -> "Committee":
        from .persist import model_from_dict

        return cls(tuple(model_from_dict(m) for m in d["params"]["members"]))


def committee_train(
    train: Dataset, members: int, hidden: int, cfg: TrainConfig
) -> tuple[Committee, list[list[dict]]]:
    """Train `members` MLPs under per-member seeds derived from cfg.seed."""
    if members < 1:
        raise ValidationError("members must be at least 1")
    children = np.random.SeedSequence(cfg.seed).spawn(members)
    trained, logs = [], []
    for child in children:
        member_cfg = replace(cfg, seed=int(child.generate_state(1)[0]))
        model, history = train_mlp(train, hidden, member_cfg)
        trained.append(model)
        logs.append(history)
    return Committee(trained), logs


def committee_predict(committee: Committee, x) -> np.ndarray:
    return committee.predict_probs(x)


# ---------------------------------------------------------------------------
# Risk-weighted evaluation


def risk_weighted_loss(preds, truth, risk_matrix) -> float:
    """Sum of R[argmax prediction, true class] over cases."""
    preds = np.atleast_2d(np.asarray(preds, float))
    truth = np.asarray(truth, int)
    r = np.asarray(risk_matrix, float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValidationError("risk matrix must be square")
    if np.any(np.diag(r) != 0) or np.any(r < 0):
        raise ValidationError("risk matrix must be nonnegative with a zero diagonal")
    if preds.shape[1] != r.shape[0]:
        raise ValidationError("risk matrix size must match the class count")
    if len(preds) != len(truth):
        raise ValidationError("predictions and truth must align")
    winners = preds.argmax(axis=1)
    return float(r[winners, truth].sum())
