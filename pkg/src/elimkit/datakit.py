"""Data model: datasets, feature metadata, class groupings, CSV ingestion,
Gaussian-mixture synthesis, and the closed-form Bayes posterior used as an
oracle throughout the test suite."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .errors import ParseError, SchemaError, ValidationError

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureMeta:
    """Name, kind, and observed range of one input feature.

    ``min``/``max`` are defined for continuous features only. Categorical
    features are integer-coded; ``codes`` maps code ``i`` to its original
    string value.
    """

    name: str
    kind: str = CONTINUOUS
    min: float | None = None
    max: float | None = None
    codes: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        if self.kind == CONTINUOUS:
            if self.min is None or self.max is None:
                raise ValidationError(
                    f"continuous feature {self.name!r} requires min and max"
                )
            if not (self.min <= self.max):
                raise ValidationError(
                    f"feature {self.name!r}: min {self.min} > max {self.max}"
                )

    @property
    def range(self) -> float:
        if self.kind != CONTINUOUS:
            return 0.0
        return float(self.max - self.min)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "min": self.min,
            "max": self.max,
            "codes": list(self.codes) if self.codes is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMeta":
        codes = d.get("codes")
        return cls(
            name=d["name"],
            kind=d["kind"],
            min=d.get("min"),
            max=d.get("max"),
            codes=tuple(codes) if codes is not None else None,
        )


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labelled feature matrix with per-feature metadata."""

    cases: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    features: tuple[FeatureMeta, ...]
    name: str = "dataset"

    def __post_init__(self):
        cases = _frozen_array(self.cases, float)
        labels = _frozen_array(self.labels, int)
        object.__setattr__(self, "cases", cases)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "features", tuple(self.features))
        if cases.ndim != 2:
            raise ValidationError("cases must be a 2-D array")
        if labels.ndim != 1 or len(labels) != len(cases):
            raise ValidationError("labels must align with cases")
        if len(self.class_names) < 2:
            raise ValidationError("a dataset needs at least 2 classes")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValidationError("label index out of range")
        if cases.shape[1] != len(self.features):
            raise ValidationError(
                f"{cases.shape[1]} feature columns but {len(self.features)} FeatureMeta entries"
            )

    @property
    def n_cases(self) -> int:
        return len(self.cases)

    @property
    def n_features(self) -> int:
        return self.cases.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.class_names == other.class_names
            and self.features == other.features
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.cases, other.cases)
        )


def dataset_from_arrays(
    cases,
    labels,
    class_names,
    feature_names=None,
    kinds=None,
    codes=None,
    name="dataset",
) -> Dataset:
    """Build a Dataset computing continuous ranges from the data itself."""
    cases = np.asarray(cases, dtype=float)
    if cases.ndim != 2:
        raise ValidationError("cases must be a 2-D array")
    n_feat = cases.shape[1]
    if feature_names is None:
        feature_names = [f"x{i}" for i in range(n_feat)]
    if kinds is None:
        kinds = [CONTINUOUS] * n_feat
    if codes is None:
        codes = [None] * n_feat
    if len(cases) == 0:
        raise ValidationError("cannot build a dataset with zero cases")
    metas = []
    for j, (fname, kind, code_book) in enumerate(zip(feature_names, kinds, codes)):
        if kind == CONTINUOUS:
            col = cases[:, j]
            metas.append(
                FeatureMeta(fname, CONTINUOUS, float(col.min()), float(col.max()))
            )
        else:
            metas.append(FeatureMeta(fname, CATEGORICAL, codes=code_book))
    return Dataset(cases, labels, tuple(class_names), tuple(metas), name=name)


@dataclass(frozen=True)
class ClassGrouping:
    """A partition of class indices into groups, e.g. ((0, 1), (2,), (3,))."""

    groups: tuple[tuple[int, ...], ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))
            if len(self.names) != len(groups):
                raise ValidationError("one display name per group required")
        if not groups or any(len(g) == 0 for g in groups):
            raise ValidationError("groups must be nonempty")
        flat = [i for g in groups for i in g]
        if len(set(flat)) != len(flat):
            raise ValidationError("groups must be disjoint")
        if set(flat) != set(range(len(flat))):
            raise ValidationError(
                "groups must cover class indices 0..K-1 exactly once"
            )

    @property
    def n_source_classes(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def has_merged_group(self) -> bool:
        return any(len(g) >= 2 for g in self.groups)

    def group_of(self, class_index: int) -> int:
        for gi, g in enumerate(self.groups):
            if class_index in g:
                return gi
        raise ValidationError(f"class index {class_index} not in grouping")

    def display_names(self, class_names) -> tuple[str, ...]:
        if self.names is not None:
            return self.names
        return tuple("+".join(class_names[i] for i in g) for g in self.groups)

    def to_dict(self) -> dict:
        return {
            "groups": [list(g) for g in self.groups],
            "names": list(self.names) if self.names is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassGrouping":
        names = d.get("names")
        return cls(
            tuple(tuple(g) for g in d["groups"]),
            tuple(names) if names is not None else None,
        )


def identity_grouping(n_classes: int) -> ClassGrouping:
    return ClassGrouping(tuple((i,) for i in range(n_classes)))


@dataclass(frozen=True, eq=False)
class GaussianMixtureSpec:
    """K Gaussian classes with a shared covariance, class priors, and a seed.

    The exact posterior of this generator is the ground truth against which
    every trained classifier in the test suite is checked.
    """

    means: np.ndarray
    covariance: np.ndarray
    priors: np.ndarray
    seed: int
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        means = _frozen_array(self.means, float)
        cov = _frozen_array(self.covariance, float)
        priors = _frozen_array(self.priors, float)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "priors", priors)
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(self.class_names))
            if len(self.class_names) != len(means):
                raise ValidationError("one class name per mixture component")
        if means.ndim != 2:
            raise ValidationError("means must be a (K, N) array")
        k, n = means.shape
        if k < 2:
            raise ValidationError("a mixture needs at least 2 classes")
        if cov.shape != (n, n):
            raise ValidationError("covariance must be N x N")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValidationError("covariance must be symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValidationError("covariance is not positive definite") from None
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > 1e-12:
            raise ValidationError("priors must be nonnegative and sum to 1")
        if len(priors) != k:
            raise ValidationError("one prior per class")

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def resolved_class_names(self) -> tuple[str, ...]:
        if self.class_names is not None:
            return self.class_names
        return tuple(f"c{i}" for i in range(self.n_classes))

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "covariance": self.covariance.tolist(),
            "priors": self.priors.tolist(),
            "seed": int(self.seed),
            "class_names": list(self.class_names) if self.class_names else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixtureSpec":
        names = d.get("class_names")
        return cls(
            np.asarray(d["means"], float),
            np.asarray(d["covariance"], float),
            np.asarray(d["priors"], float),
            int(d["seed"]),
            tuple(names) if names else None,
        )


# ---------------------------------------------------------------------------
# CSV ingestion


def parse_csv_text(
    text: str, label_column: str, kinds: dict[str, str] | None = None, name="dataset"
) -> Dataset:
    """Parse CSV text (header row, comma separated) into a Dataset.

    Class names and categorical code books are sorted so repeated ingestion
    of the same data is canonical. Missing cells are rejected.
    """
    kinds = kinds or {}
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty CSV: no header row") from None
    header = [h.strip() for h in header]
    if label_column not in header:
        raise SchemaError(f"label column {label_column!r} not found in header")
    for col in kinds:
        if col not in header:
            raise SchemaError(f"kind hint for unknown column {col!r}")
    label_idx = header.index(label_column)
    feat_cols = [(i, h) for i, h in enumerate(header) if i != label_idx]

    rows = []
    raw_labels = []
    for row_num, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise ParseError(
                f"row {row_num}: expected {len(header)} cells, got {len(row)}",
                row=row_num,
            )
        rows.append([cell.strip() for cell in row])
        raw_labels.append(row[label_idx].strip())
    if not rows:
        raise SchemaError("CSV has a header but no data rows")

    class_names = tuple(sorted(set(raw_labels)))
    if len(class_names) < 2:
        raise ValidationError(
            f"need at least 2 classes, found {len(class_names)}"
        )
    label_code = {c: i for i, c in enumerate(class_names)}
    labels = [label_code[v] for v in raw_labels]

    n = len(rows)
    cases = np.empty((n, len(feat_cols)), dtype=float)
    metas = []
    for j, (col_idx, col_name) in enumerate(feat_cols):
        kind = kinds.get(col_name, CONTINUOUS)
        values = [r[col_idx] for r in rows]
        if any(v == "" for v in values):
            bad = values.index("") + 2
            raise ParseError(
                f"row {bad}, column {col_name!r}: missing value",
                row=bad,
                column=col_name,
            )
        if kind == CATEGORICAL:
            book = tuple(sorted(set(values)))
            code = {v: i for i, v in enumerate(book)}
            cases[:, j] = [code[v] for v in values]
            metas.append(FeatureMeta(col_name, CATEGORICAL, codes=book))
        elif kind == CONTINUOUS:
            for i, v in enumerate(values):
                try:
                    cases[i, j] = float(v)
                except ValueError:
                    raise ParseError(
                        f"row {i + 2}, column {col_name!r}: cannot parse {v!r} as a number",
                        row=i + 2,
                        column=col_name,
                    ) from None
            metas.append(
                FeatureMeta(
                    col_name,
                    CONTINUOUS,
                    float(cases[:, j].min()),
                    float(cases[:, j].max()),
                )
            )
        else:
            raise ValidationError(f"unknown kind hint {kind!r} for column {col_name!r}")

    return Dataset(cases, labels, class_names, tuple(metas), name=name)


def ingest_csv(path, label_column, kinds=None, name=None) -> Dataset:
    """Read a CSV file into a Dataset. See :func:`parse_csv_text`."""
    from pathlib import Path

    p = Path(path)
    if not p.exists():
        raise SchemaError(f"CSV file not found: {p}")
    return parse_csv_text(
        p.read_text(encoding="utf-8"),
        label_column,
        kinds=kinds,
        name=name or p.stem,
    )


def export_csv(dataset: Dataset, path) -> None:
    """Write a Dataset back to CSV; categorical codes and labels are decoded
    through their stored books so a re-ingestion round-trips exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([m.name for m in dataset.features] + ["label"])
        for row, label in zip(dataset.cases, dataset.labels):
            cells = []
            for value, meta in zip(row, dataset.features):
                if meta.kind == CATEGORICAL and meta.codes is not None:
                    cells.append(meta.codes[int(value)])
                else:
                    cells.append(repr(float(value)))
            cells.append(dataset.class_names[label])
            writer.writerow(cells)


# ---------------------------------------------------------------------------
# Splitting and synthesis


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint train/test partition."""
    if not (0.0 < test_fraction < 1.0):
        raise ValidationError("test_fraction must lie strictly inside (0, 1)")
    n = dataset.n_cases
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n_test > n - 1:
        raise ValidationError("both splits must be non-empty")
    perm = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = perm[:n_test], perm[n_test:]

    def take(idx, suffix):
        return Dataset(
            dataset.cases[idx],
            dataset.labels[idx],
            dataset.class_names,
            dataset.features,
            name=f"{dataset.name}-{suffix}",
        )

    return take(train_idx, "train"), take(test_idx, "test")


def sample_mixture(spec: GaussianMixtureSpec, n: int, name="mixture") -> Dataset:
    """Draw n labelled cases from the mixture, deterministic under spec.seed."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(spec.seed)
    labels = rng.choice(spec.n_classes, size=n, p=spec.priors)
    chol = np.linalg.cholesky(spec.covariance)
    noise = rng.standard_normal((n, spec.n_features)) @ chol.T
    cases = spec.means[labels] + noise
    return dataset_from_arrays(
        cases, labels, spec.resolved_class_names(), name=name
    )


# ---------------------------------------------------------------------------
# Closed-form Bayes posterior


def log_class_densities(spec: GaussianMixtureSpec, X: np.ndarray) -> np.ndarray:
    """Log N(x; mean_k, cov) for each class, shape (n, K)."""
    X = np.atleast_2d(np.asarray(X, float))
    if X.shape[1] != spec.n_features:
        raise ValidationError(
            f"expected {spec.n_features} features, got {X.shape[1]}"
        )
    chol = np.linalg.cholesky(spec.covariance)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    const = -0.5 * (spec.n_features * math.log(2 * math.pi) + log_det)
    out = np.empty((len(X), spec.n_classes))
    for k in range(spec.n_classes):
        diff = X - spec.means[k]
        sol = np.linalg.solve(chol, diff.T)
        out[:, k] = const - 0.5 * np.sum(sol * sol, axis=0)
    return out


def posterior_from_log_densities(log_densities, priors) -> np.ndarray:
    """Normalize class log-densities and priors into posterior probabilities.

    Invariant under adding any constant to all log-densities.
    """
    logd = np.atleast_2d(np.asarray(log_densities, float))
    with np.errstate(divide="ignore"):
        log_post = logd + np.log(np.asarray(priors, float))
    log_post = log_post - logsumexp(log_post, axis=1, keepdims=True)
    return np.exp(log_post)


def bayes_posterior_batch(spec: GaussianMixtureSpec, X) -> np.ndarray:
    return posterior_from_log_densities(log_class_densities(spec, X), spec.priors)


def bayes_posterior(spec: GaussianMixtureSpec, x) -> np.ndarray:
    """Exact posterior p(C_k | x) of the generating mixture."""
    return bayes_posterior_batch(spec, np.atleast_2d(x))[0]


def logistic_parameters(spec: GaussianMixtureSpec) -> tuple[np.ndarray, float]:
    """For K=2: weights w and threshold theta with p(C_0|x) = sigmoid(w.x - theta).

    Derived from the log density ratio of the two class Gaussians; direct
    Bayes evaluation is the ground truth this is checked against.
    """
    if spec.n_classes != 2:
        raise ValidationError("logistic form requires exactly 2 classes")
    inv = np.linalg.inv(spec.covariance)
    m0, m1 = spec.means
    w = inv @ (m0 - m1)
    theta = 0.5 * float((m0 + m1) @ inv @ (m0 - m1))
    p0, p1 = spec.priors
    if p0 <= 0 or p1 <= 0:
        raise ValidationError("logistic form requires strictly positive priors")
    theta -= math.log(p0 / p1)
    return w, theta


def logistic_posterior(w: np.ndarray, theta: float, x) -> float:
    """sigmoid(w.x - theta), the 2-class posterior for the first class."""
    return float(expit(float(np.dot(w, x)) - theta))
