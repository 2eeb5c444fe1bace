"""Class probabilities under Gaussian input perturbation.

Any classifier, even a crisp one, yields probabilities when its input is
replaced by a Gaussian centred on the case: Monte-Carlo sampling gives the
universal estimate, and interval rules admit a closed form in which each
crisp condition becomes a soft trapezoid, the difference of two logistic
sigmoids whose slope beta = 2.4/(sqrt(2)*s) is inversely proportional to
the input uncertainty s.

Dispersions derive from a global fuzziness fraction rho of each feature's
range, with optional per-group factors and per-feature overrides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .classifiers import Classifier, IntervalRuleSet, Rule, RuleCondition, TrainConfig
from .datakit import CONTINUOUS, Dataset, FeatureMeta
from .errors import BorderlineCaseError, ValidationError

# Logistic slope (in units of 1/s) matching the unit-variance Gaussian CDF.
SIGMOID_CDF_SLOPE = 2.4 / math.sqrt(2.0)

DEFAULT_MC_SAMPLES = 5000


@dataclass(frozen=True)
class FeatureGroup:
    """Named feature subset sharing one fuzziness factor."""

    name: str
    features: tuple[int, ...]
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(int(i) for i in self.features))
        if self.rho < 0:
            raise ValidationError(f"group {self.name!r}: rho must be nonnegative")


@dataclass(frozen=True)
class UncertaintyProfile:
    """Global rho, optional per-group rho factors, optional per-feature
    dispersion overrides (in feature units). Precedence: override > group >
    global. Categorical features always get dispersion 0."""

    rho: float = 0.0
    overrides: dict[int, float] = field(default_factory=dict)
    groups: tuple[FeatureGroup, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "overrides", dict(self.overrides))
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.rho < 0:
            raise ValidationError("rho must be nonnegative")
        for idx, value in self.overrides.items():
            if value < 0:
                raise ValidationError(f"override for feature {idx} must be nonnegative")
        seen: set[int] = set()
        for group in self.groups:
            if seen.intersection(group.features):
                raise ValidationError("feature groups must be disjoint")
            seen.update(group.features)

    def with_rho(self, rho: float) -> "UncertaintyProfile":
        return replace(self, rho=rho)

    def with_override(self, feature: int, s: float) -> "UncertaintyProfile":
        overrides = dict(self.overrides)
        overrides[feature] = s
        return replace(self, overrides=overrides)


@dataclass(frozen=True)
class McConfig:
    n_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError("n_samples must be at least 1")


@dataclass(frozen=True)
class McEstimate:
    """Per-class probability means with their standard errors."""

    probabilities: np.ndarray
    stderr: np.ndarray


@dataclass(frozen=True)
class SweepCurve:
    """Probability rows over an increasing abscissa (rho or one s_i).

    ``flag`` marks the abscissa of the largest total-variation change
    between adjacent grid points: rapid change near some rho signals a case
    close to a classification border.
    """

    abscissa: np.ndarray
    probabilities: np.ndarray
    stderr: np.ndarray
    class_names: tuple[str, ...]
    flag: float | None

    def to_rows(self) -> list[dict]:
        return [
            {
                "abscissa": float(a),
                "probs": [float(v) for v in p],
                "stderr": [float(v) for v in s],
            }
            for a, p, s in zip(self.abscissa, self.probabilities, self.stderr)
        ]


def dispersions(profile: UncertaintyProfile, features) -> np.ndarray:
    """Per-feature Gaussian dispersions s_i = range_i * rho (resolved through
    the override > group > global precedence); categorical features get 0."""
    features = tuple(features)
    group_rho: dict[int, float] = {}
    for group in profile.groups:
        for idx in group.features:
            if idx >= len(features):
                raise ValidationError(
                    f"group {group.name!r} references feature {idx}"
                )
            group_rho[idx] = group.rho
    out = np.zeros(len(features))
    for i, meta in enumerate(features):
        if meta.kind != CONTINUOUS:
            continue
        if i in profile.overrides:
            out[i] = profile.overrides[i]
        elif i in group_rho:
            out[i] = meta.range * group_rho[i]
        else:
            out[i] = meta.range * profile.rho
    return out


def _resolve_features(model: Classifier, features) -> tuple[FeatureMeta, ...]:
    feats = features if features is not None else model.features
    if feats is None:
        raise ValidationError(
            "feature metadata required: pass features= or use a model trained "
            "on a dataset (which records them)"
        )
    return tuple(feats)


def _dispersions_for(
    model: Classifier, profile: UncertaintyProfile, features, n_features: int
) -> np.ndarray:
    """Resolve dispersions; an overrides-only profile needs no feature
    metadata (the override already is the dispersion in feature units)."""
    feats = features if features is not None else model.features
    if feats is None:
        if profile.rho == 0 and not profile.groups:
            s = np.zeros(n_features)
            for idx, value in profile.overrides.items():
                if idx >= n_features:
                    raise ValidationError(f"override for unknown feature {idx}")
                s[idx] = value
            return s
        return dispersions(profile, _resolve_features(model, features))
    return dispersions(profile, feats)


def mc_probabilities(
    model: Classifier,
    x,
    profile: UncertaintyProfile,
    mc: McConfig,
    features=None,
) -> McEstimate:
    """Monte-Carlo class probabilities around x.

    Draws Y ~ N(x, diag(s^2)) perturbing continuous features only and
    averages the model's probability outputs; for crisp models the outputs
    are one-hot, so the average is the winning-class frequency. Zero
    dispersions reduce exactly to the crisp model output.
    """
    x = np.asarray(x, float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("case vector must be finite")
    if profile.rho == 0 and not profile.groups and not any(profile.overrides.values()):
        s = np.zeros(len(x))
    else:
        s = _dispersions_for(model, profile, features, len(x))
    if not np.any(s > 0):
        p = model.predict_probs(x)
        return McEstimate(p, np.zeros_like(p))
    rng = np.random.default_rng(mc.seed)
    samples = x + rng.standard_normal((mc.n_samples, len(x))) * s
    probs = model.predict_batch(samples)
    mean = probs.mean(axis=0)
    if mc.n_samples > 1:
        stderr = probs.std(axis=0, ddof=1) / math.sqrt(mc.n_samples)
    else:
        stderr = np.zeros_like(mean)
    return McEstimate(mean, stderr)


def _point_seeds(base_seed: int, count: int) -> list[int]:
    """Per-grid-point seeds derived from the base seed; schedule-independent."""
    children = np.random.SeedSequence(base_seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def _total_variation(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(a - b).sum())


def _flag_point(abscissa: np.ndarray, rows: np.ndarray) -> float | None:
    if len(abscissa) < 2:
        return None
    changes = [
        _total_variation(rows[i], rows[i + 1]) for i in range(len(rows) - 1)
    ]
    return float(abscissa[int(np.argmax(changes)) + 1])


def rho_sweep(
    model: Classifier,
    x,
    rho_grid,
    mc: McConfig,
    features=None,
    base_profile: UncertaintyProfile | None = None,
) -> SweepCurve:
    """Evaluate mc_probabilities at each rho on an increasing grid."""
    grid = np.asarray(rho_grid, float)
    if grid.size == 0:
        raise ValidationError("rho grid must be nonempty")
    if np.any(np.diff(grid) <= 0) and grid.size > 1:
        raise ValidationError("rho grid must be strictly increasing")
    if np.any(grid < 0):
        raise ValidationError("rho values must be nonnegative")
    base = base_profile if base_profile is not None else UncertaintyProfile()
    feats = None
    if np.any(grid > 0) or base.groups or base.overrides:
        feats = _resolve_features(model, features)
    seeds = _point_seeds(mc.seed, len(grid))
    rows, errs = [], []
    for rho, seed in zip(grid, seeds):
        est = mc_probabilities(
            model,
            x,
            base.with_rho(float(rho)),
            McConfig(mc.n_samples, seed),
            features=feats,
        )
        rows.append(est.probabilities)
        errs.append(est.stderr)
    rows = np.asarray(rows)
    return SweepCurve(
        grid, rows, np.asarray(errs), model.class_names, _flag_point(grid, rows)
    )


def sensitivity_sweep(
    model: Classifier,
    x,
    rho0: float,
    feature_i: int,
    s_grid,
    mc: McConfig,
    features=None,
) -> SweepCurve:
    """Hold all dispersions at rho0 and sweep feature_i's dispersion over
    s_grid, exposing how strongly that feature influences the classification."""
    feats = _resolve_features(model, features)
    if not (0 <= feature_i < len(feats)):
        raise ValidationError(f"feature index {feature_i} out of range")
    if feats[feature_i].kind != CONTINUOUS:
        raise ValidationError(
            f"feature {feats[feature_i].name!r} is categorical; sensitivity "
            "sweeps apply to continuous features only"
        )
    grid = np.asarray(s_grid, float)
    if grid.size == 0:
        raise ValidationError("s grid must be nonempty")
    if np.any(np.diff(grid) <= 0) and grid.size > 1:
        raise ValidationError("s grid must be strictly increasing")
    if np.any(grid < 0):
        raise ValidationError("dispersions must be nonnegative")
    base = UncertaintyProfile(rho=rho0)
    seeds = _point_seeds(mc.seed, len(grid))
    rows, errs = [], []
    for s_val, seed in zip(grid, seeds):
        est = mc_probabilities(
            model,
            x,
            base.with_override(feature_i, float(s_val)),
            McConfig(mc.n_samples, seed),
            features=feats,
        )
        rows.append(est.probabilities)
        errs.append(est.stderr)
    rows = np.asarray(rows)
    return SweepCurve(
        grid, rows, np.asarray(errs), model.class_names, _flag_point(grid, rows)
    )


# ---------------------------------------------------------------------------
# Analytic soft-trapezoid rule probabilities


def analytic_condition_probability(a: float, b: float, x: float, s: float) -> float:
    """Probability that a Gaussian N(x, s^2) lands in [a, b], in the logistic
    closed form sigmoid(beta(x-a)) - sigmoid(beta(x-b)) with beta = 2.4/(sqrt(2) s).

    s = 0 degenerates to the crisp indicator of x in [a, b].
    """
    if a > b:
        raise ValidationError(f"interval [{a}, {b}] is empty")
    if s < 0:
        raise ValidationError("dispersion must be nonnegative")
    if s == 0:
        return 1.0 if a <= x <= b else 0.0
    beta = SIGMOID_CDF_SLOPE / s
    return float(expit(beta * (x - a)) - expit(beta * (x - b)))


def _condition_prob_batch(cond: RuleCondition, col: np.ndarray, s: float) -> np.ndarray:
    if s == 0:
        return ((col >= cond.low) & (col <= cond.high)).astype(float)
    beta = SIGMOID_CDF_SLOPE / s
    return expit(beta * (col - cond.low)) - expit(beta * (col - cond.high))


def _soft_rule_scores(
    rules: IntervalRuleSet, X: np.ndarray, s: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class scores O (n, K) via max over each class's rules of the
    product of its condition probabilities. Returns (O, per-rule products,
    winner rule index per class or -1)."""
    n = len(X)
    rule_probs = np.ones((n, len(rules.rules)))
    for ri, rule in enumerate(rules.rules):
        for cond in rule.conditions:
            rule_probs[:, ri] *= _condition_prob_batch(cond, X[:, cond.feature], s[cond.feature])
    scores = np.zeros((n, rules.n_classes))
    winners = np.full((n, rules.n_classes), -1, dtype=int)
    for c in range(rules.n_classes):
        idx = [ri for ri, r in enumerate(rules.rules) if r.class_index == c]
        if not idx:
            continue
        block = rule_probs[:, idx]
        best = block.argmax(axis=1)
        scores[:, c] = block[np.arange(n), best]
        winners[:, c] = np.asarray(idx)[best]
    return scores, rule_probs, winners


def soft_rules_batch(
    rules: IntervalRuleSet, X, profile: UncertaintyProfile, features=None
) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, float))
    s = dispersions(profile, _resolve_features(rules, features))
    scores, _, _ = _soft_rule_scores(rules, X, s)
    totals = scores.sum(axis=1, keepdims=True)
    out = np.zeros_like(scores)
    dead = totals[:, 0] == 0
    alive = ~dead
    out[alive] = scores[alive] / totals[alive]
    out[dead, rules.default_class] = 1.0
    return out


def soft_rules_predict(
    rules: IntervalRuleSet, x, profile: UncertaintyProfile, features=None
) -> np.ndarray:
    """Analytic class probabilities of a crisp rule set under Gaussian input
    noise: per rule the product of its soft-trapezoid condition
    probabilities, per class the max over its rules, normalized across
    classes. All-zero scores fall back to the one-hot default class."""
    return soft_rules_batch(rules, np.atleast_2d(np.asarray(x, float)), profile, features)[0]


# ---------------------------------------------------------------------------
# Per-feature confidence intervals


def confidence_interval(
    model: Classifier,
    x,
    feature_i: int,
    features=None,
    bound_multiplier: float = 1.0,
) -> tuple[float, float]:
    """Largest interval around x[feature_i] (other features fixed) on which
    the most probable class never changes.

    Searched within [min - m*range, max + m*range] by bisection to
    1e-4*range per side, then verified on a 64-point interior grid. Narrow
    intervals signal a case near a class border.
    """
    feats = _resolve_features(model, features)
    if not (0 <= feature_i < len(feats)):
        raise ValidationError(f"feature index {feature_i} out of range")
    meta = feats[feature_i]
    if meta.kind != CONTINUOUS:
        raise ValidationError(
            f"feature {meta.name!r} is categorical; intervals apply to "
            "continuous features only"
        )
    x = np.asarray(x, float)
    p = model.predict_probs(x)
    order = np.argsort(-p, kind="stable")
    if len(p) > 1 and p[order[0]] - p[order[1]] <= 1e-9:
        raise BorderlineCaseError(
            "most probable class is not unique at this case; this is a "
            "borderline case, inspect it with rho_sweep instead"
        )
    target = int(order[0])
    span = meta.range if meta.range > 0 else 1.0
    tol = 1e-4 * span
    xi = float(x[feature_i])
    lo_bound = min(meta.min - bound_multiplier * span, xi)
    hi_bound = max(meta.max + bound_multiplier * span, xi)

    probe = np.array(x)

    def keeps_class(value: float) -> bool:
        probe[feature_i] = value
        return int(np.argmax(model.predict_probs(probe))) == target

    def edge(good: float, limit: float) -> float:
        if keeps_class(limit):
            return limit
        bad = limit
        while abs(bad - good) > tol:
            mid = 0.5 * (good + bad)
            if keeps_class(mid):
                good = mid
            else:
                bad = mid
        return good

    low = edge(xi, lo_bound)
    high = edge(xi, hi_bound)

    for _ in range(8):
        grid = np.linspace(low, high, 64)
        bad = [v for v in grid if not keeps_class(v)]
        if not bad:
            break
        bad_left = [v for v in bad if v < xi]
        bad_right = [v for v in bad if v > xi]
        if bad_left:
            low = edge(xi, max(bad_left))
        if bad_right:
            high = edge(xi, min(bad_right))
    return float(low), float(high)


# ---------------------------------------------------------------------------
# Gradient tuning of rule endpoints and the fuzziness factor


def _sigmoid_prime(z: np.ndarray) -> np.ndarray:
    s = expit(z)
    return s * (1.0 - s)


def soft_rules_loss(
    rules: IntervalRuleSet, train: Dataset, profile: UncertaintyProfile
) -> float:
    """E(M, S) = 1/2 sum_X sum_i (p(C_i | G_X; M) - delta)^2."""
    probs = soft_rules_batch(rules, train.cases, profile, train.features)
    targets = np.zeros_like(probs)
    targets[np.arange(train.n_cases), train.labels] = 1.0
    return 0.5 * float(((probs - targets) ** 2).sum())


def _tune_gradients(
    rules: IntervalRuleSet,
    X: np.ndarray,
    targets: np.ndarray,
    s: np.ndarray,
    rho_sensitive: np.ndarray,
):
    """Analytic gradient of soft_rules_loss wrt every condition endpoint and
    the global rho. ``rho_sensitive[f]`` is ds_f/drho (the feature range for
    globally-governed features, 0 for overrides/groups)."""
    n = len(X)
    scores, rule_probs, winners = _soft_rule_scores(rules, X, s)
    totals = scores.sum(axis=1)
    alive = totals > 0
    probs = np.zeros_like(scores)
    probs[alive] = scores[alive] / totals[alive, None]

    diff = probs - targets
    # dp_j/dO_k = (delta_jk - p_j)/T, so dE/dO_k = [(p_k - t_k) - sum_j (p_j - t_j) p_j] / T
    inner = (diff * probs).sum(axis=1)
    d_scores = np.zeros_like(scores)
    d_scores[alive] = (diff[alive] - inner[alive, None]) / totals[alive, None]

    # route class-score gradients to each class's winning rule
    d_rule = np.zeros_like(rule_probs)
    for c in range(scores.shape[1]):
        w = winners[:, c]
        valid = (w >= 0) & alive
        d_rule[valid, w[valid]] += d_scores[valid, c]

    grad_low = [np.zeros(len(r.conditions)) for r in rules.rules]
    grad_high = [np.zeros(len(r.conditions)) for r in rules.rules]
    grad_rho = 0.0
    for ri, rule in enumerate(rules.rules):
        carrier = d_rule[:, ri]
        if not np.any(carrier):
            continue
        cond_l = np.column_stack(
            [
                _condition_prob_batch(c, X[:, c.feature], s[c.feature])
                for c in rule.conditions
            ]
        )
        for ci, cond in enumerate(rule.conditions):
            others = np.prod(np.delete(cond_l, ci, axis=1), axis=1) if cond_l.shape[1] > 1 else np.ones(n)
            sf = s[cond.feature]
            if sf == 0:
                continue
            beta = SIGMOID_CDF_SLOPE / sf
            u_a = X[:, cond.feature] - cond.low
            u_b = X[:, cond.feature] - cond.high
            base = carrier * others
            grad_low[ri][ci] = float((base * (-beta) * _sigmoid_prime(beta * u_a)).sum())
            grad_high[ri][ci] = float((base * beta * _sigmoid_prime(beta * u_b)).sum())
            ds = rho_sensitive[cond.feature]
            if ds:
                dl_ds = (SIGMOID_CDF_SLOPE / (sf * sf)) * (
                    _sigmoid_prime(beta * u_b) * u_b - _sigmoid_prime(beta * u_a) * u_a
                )
                grad_rho += float((base * dl_ds).sum() * ds)
    return grad_low, grad_high, grad_rho


def tune_soft_rules(
    rules: IntervalRuleSet,
    train: Dataset,
    profile: UncertaintyProfile,
    cfg: TrainConfig,
) -> tuple[IntervalRuleSet, float, list[float]]:
    """Gradient descent on all interval endpoints and the global rho,
    minimizing the squared-error cost of the soft-rule probabilities.

    Endpoints stay ordered (a <= b) by projecting crossed pairs onto their
    midpoint; rho stays strictly positive. Returns the best rules found, the
    tuned rho, and the non-increasing best-so-far loss log.
    """
    feats = tuple(train.features)
    rule_features = {c.feature for r in rules.rules for c in r.conditions}
    s0 = dispersions(profile, feats)
    if any(s0[f] == 0 for f in rule_features):
        raise ValidationError(
            "all rule features need a strictly positive dispersion: the crisp "
            "limit (s = 0) is not differentiable"
        )
    rho_sensitive = np.zeros(len(feats))
    grouped = {i for g in profile.groups for i in g.features}
    for f in range(len(feats)):
        if feats[f].kind != CONTINUOUS:
            continue
        if f in profile.overrides or f in grouped:
            continue
        rho_sensitive[f] = feats[f].range

    X = np.array(train.cases)
    targets = np.zeros((train.n_cases, rules.n_classes))
    targets[np.arange(train.n_cases), train.labels] = 1.0

    lows = [np.array([c.low for c in r.conditions]) for r in rules.rules]
    highs = [np.array([c.high for c in r.conditions]) for r in rules.rules]
    rho = profile.rho
    vel_low = [np.zeros_like(a) for a in lows]
    vel_high = [np.zeros_like(a) for a in highs]
    vel_rho = 0.0
    rho_floor = 1e-6

    def build(lows_, highs_) -> IntervalRuleSet:
        new_rules = tuple(
            Rule(
                r.class_index,
                tuple(
                    RuleCondition(c.feature, float(lo), float(hi))
                    for c, lo, hi in zip(r.conditions, lows_[ri], highs_[ri])
                ),
            )
            for ri, r in enumerate(rules.rules)
        )
        return IntervalRuleSet(
            new_rules, rules.default_class, rules.class_names, rules.features
        )

    def loss_at(lows_, highs_, rho_) -> float:
        return soft_rules_loss(build(lows_, highs_), train, profile.with_rho(rho_))

    best_loss = loss_at(lows, highs, rho)
    best = ([a.copy() for a in lows], [b.copy() for b in highs], rho)
    log = [best_loss]

    for _ in range(cfg.epochs):
        current = build(lows, highs)
        s = dispersions(profile.with_rho(rho), feats)
        g_low, g_high, g_rho = _tune_gradients(current, X, targets, s, rho_sensitive)
        for ri in range(len(lows)):
            vel_low[ri] = cfg.momentum * vel_low[ri] - cfg.learning_rate * g_low[ri]
            vel_high[ri] = cfg.momentum * vel_high[ri] - cfg.learning_rate * g_high[ri]
            lows[ri] = lows[ri] + vel_low[ri]
            highs[ri] = highs[ri] + vel_high[ri]
            crossed = lows[ri] > highs[ri]
            if np.any(crossed):
                mid = 0.5 * (lows[ri][crossed] + highs[ri][crossed])
                lows[ri][crossed] = mid
                highs[ri][crossed] = mid
        vel_rho = cfg.momentum * vel_rho - cfg.learning_rate * g_rho
        rho = max(rho + vel_rho, rho_floor)

        loss = loss_at(lows, highs, rho)
        if loss < best_loss:
            best_loss = loss
            best = ([a.copy() for a in lows], [b.copy() for b in highs], rho)
        log.append(best_loss)

    tuned = build(best[0], best[1])
    return tuned, float(best[2]), log


# ---------------------------------------------------------------------------
# Large-rho diagnostic


def prior_recovery_report(
    model: Classifier,
    x,
    priors,
    mc: McConfig,
    features=None,
    rho: float = 5.0,
    tolerance: float = 0.1,
) -> dict:
    """Compare the large-rho probability limit with the supplied priors.

    Recovery of the priors is NOT guaranteed for every classifier (decision
    regions need not capture the priors under unbounded sampling), so this
    reports and flags divergence rather than asserting it.
    """
    priors = np.asarray(priors, float)
    est = mc_probabilities(model, x, UncertaintyProfile(rho=rho), mc, features)
    tv = _total_variation(est.probabilities, priors)
    return {
        "rho": rho,
        "probabilities": [float(v) for v in est.probabilities],
        "priors": [float(v) for v in priors],
        "total_variation": tv,
        "tolerance": tolerance,
        "diverges": bool(tv > tolerance),
    }
