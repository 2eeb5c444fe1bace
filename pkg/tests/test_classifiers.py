import numpy as np
import pytest

from elimkit import (
    Committee,
    GaussianMixtureSpec,
    IntervalRuleSet,
    KnnClassifier,
    LinearLogisticModel,
    Rule,
    RuleCondition,
    TrainConfig,
    bayes_posterior,
    committee_predict,
    committee_train,
    dataset_from_arrays,
    knn_predict,
    risk_weighted_loss,
    rules_predict,
    sample_mixture,
    train_joint,
    train_lda,
    train_mlp,
)
from elimkit.classifiers import mlp_loss_and_gradients
from elimkit.datakit import ClassGrouping, identity_grouping
from elimkit.errors import SingularCovarianceError, ValidationError
from elimkit.persist import canonical_dumps, model_to_dict

from oracles import central_difference_gradient, relative_error


def blob_dataset(sep=4.0, n=100, seed=0, var=0.25):
    spec = GaussianMixtureSpec(
        np.array([[0.0, 0.0], [sep, 0.0]]),
        np.eye(2) * var,
        np.array([0.5, 0.5]),
        seed=seed,
    )
    return sample_mixture(spec, n), spec


class TestRules:
    def setup_method(self):
        self.rules = IntervalRuleSet(
            [Rule(0, [RuleCondition(0, 0.0, 1.0)])],
            default_class=1,
            class_names=("A", "B"),
        )

    def test_interior_point(self):
        np.testing.assert_array_equal(rules_predict(self.rules, [0.5]), [1.0, 0.0])

    def test_outside_interval(self):
        np.testing.assert_array_equal(rules_predict(self.rules, [1.5]), [0.0, 1.0])

    def test_first_match_priority(self):
        overlapping = IntervalRuleSet(
            [
                Rule(0, [RuleCondition(0, 0.0, 2.0)]),
                Rule(1, [RuleCondition(0, 1.0, 3.0)]),
            ],
            default_class=1,
            class_names=("A", "B"),
        )
        # enumerate: x in the overlap must follow the listed order
        for x in (1.0, 1.5, 2.0):
            np.testing.assert_array_equal(
                overlapping.predict_probs([x]), [1.0, 0.0]
            )
        np.testing.assert_array_equal(overlapping.predict_probs([2.5]), [0.0, 1.0])

    def test_condition_order_enforced(self):
        with pytest.raises(ValidationError):
            RuleCondition(0, 2.0, 1.0)

    def test_one_hot_everywhere(self):
        rng = np.random.default_rng(0)
        probs = self.rules.predict_batch(rng.normal(size=(50, 1)))
        assert set(np.unique(probs)) <= {0.0, 1.0}
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)


class TestKnn:
    def setup_method(self):
        self.train = dataset_from_arrays(
            np.array([[0.0], [2.0]]), [0, 1], ("A", "B")
        )

    def test_nearest_point(self):
        np.testing.assert_array_equal(
            knn_predict(self.train, [0.4], k=1, metric="manhattan"), [1.0, 0.0]
        )

    def test_equidistant_tie_breaks_low(self):
        np.testing.assert_array_equal(
            knn_predict(self.train, [1.0], k=1, metric="manhattan"), [1.0, 0.0]
        )

    def test_vote_mode_fraction(self):
        for x in (-5.0, 0.3, 1.0, 9.0):
            np.testing.assert_allclose(
                knn_predict(self.train, [x], k=2, mode="vote"), [0.5, 0.5]
            )

    def test_vote_tie_breaks_low_in_crisp(self):
        np.testing.assert_array_equal(
            knn_predict(self.train, [1.0], k=2, mode="crisp"), [1.0, 0.0]
        )

    def test_k_bounds(self):
        with pytest.raises(ValidationError):
            knn_predict(self.train, [0.0], k=0)
        with pytest.raises(ValidationError):
            knn_predict(self.train, [0.0], k=3)

    def test_euclidean_metric(self):
        train = dataset_from_arrays(
            np.array([[0.0, 0.0], [3.0, 0.0]]), [0, 1], ("A", "B")
        )
        np.testing.assert_array_equal(
            knn_predict(train, [1.0, 0.0], k=1, metric="euclidean"), [1.0, 0.0]
        )

    def test_leave_one_out_excludes_self(self):
        from elimkit.classifiers import knn_loo_accuracy

        # 1-NN on its own training set is trivially perfect; leaving each
        # case out, every point's nearest neighbour belongs to the other class
        train = dataset_from_arrays(
            np.array([[0.0], [1.0], [0.9], [2.0]]), [0, 1, 0, 1], ("A", "B")
        )
        plain = KnnClassifier(train, k=1).predict_batch(train.cases).argmax(axis=1)
        assert (plain == train.labels).mean() == 1.0
        # enumeration: 0.0 -> 0.9 (A ok), 1.0 -> 0.9 (A, wrong), 0.9 -> 1.0
        # (B, wrong), 2.0 -> 1.0 (B ok)
        assert knn_loo_accuracy(train, k=1) == 0.5


class TestLda:
    def symmetric_dataset(self):
        offsets = np.array([[0.5, 0.0], [-0.5, 0.0], [0.0, 0.5], [0.0, -0.5]])
        cases = np.vstack([offsets, offsets + [1.0, 0.0]])
        labels = [0] * 4 + [1] * 4
        return dataset_from_arrays(cases, labels, ("A", "B"))

    def test_symmetric_boundary(self):
        model = train_lda(self.symmetric_dataset())
        p = model.predict_probs([0.5, 0.0])
        assert p[0] == pytest.approx(0.5, abs=1e-12)
        assert model.predict_probs([0.0, 0.0])[0] > 0.5
        assert model.predict_probs([1.0, 0.0])[0] < 0.5

    def test_true_parameters_match_bayes(self):
        spec = GaussianMixtureSpec(
            np.array([[0.0, 0.5], [2.0, -0.5]]),
            np.array([[1.0, 0.2], [0.2, 0.8]]),
            np.array([0.4, 0.6]),
            seed=0,
        )
        model = LinearLogisticModel.from_mixture(spec)
        rng = np.random.default_rng(1)
        for x in rng.normal(scale=2.0, size=(50, 2)):
            assert model.predict_probs(x)[0] == pytest.approx(
                bayes_posterior(spec, x)[0], abs=1e-10
            )

    def test_slope_limit_approaches_step(self):
        model = train_lda(self.symmetric_dataset())
        steep = model.with_slope(1e6)
        assert steep.predict_probs([0.4, 0.0])[0] > 1.0 - 1e-6
        assert steep.predict_probs([0.6, 0.0])[0] < 1e-6

    def test_singular_covariance_suggests_ridge(self):
        cases = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        ds = dataset_from_arrays(cases, [0, 0, 1, 1], ("A", "B"))
        with pytest.raises(SingularCovarianceError) as err:
            train_lda(ds)
        assert "ridge" in str(err.value)
        train_lda(ds, ridge=1e-6)  # regularized fit succeeds


class TestMlp:
    def test_separable_blobs_high_accuracy(self):
        ds, _ = blob_dataset(sep=4.0, n=200, seed=2)
        # separability oracle: an LDA cut classifies the blobs perfectly
        lda = train_lda(ds)
        lda_acc = (lda.predict_batch(ds.cases).argmax(axis=1) == ds.labels).mean()
        assert lda_acc == 1.0
        model, history = train_mlp(
            ds, hidden=4, cfg=TrainConfig(epochs=80, seed=0, learning_rate=0.3)
        )
        acc = (model.predict_batch(ds.cases).argmax(axis=1) == ds.labels).mean()
        assert acc >= 0.99
        assert history[-1]["loss"] < history[0]["loss"]

    def test_zero_epochs_forbidden(self):
        with pytest.raises(ValidationError):
            TrainConfig(epochs=0)

    @pytest.mark.parametrize("transform", ["quadratic", "cross-entropy"])
    def test_gradient_matches_finite_differences(self, transform):
        rng = np.random.default_rng(42)
        ds, _ = blob_dataset(n=24, seed=3)
        cfg = TrainConfig(transform=transform, l2=0.01, seed=0)
        model, _ = train_mlp(ds, hidden=3, cfg=TrainConfig(epochs=1, seed=0))
        X = ds.cases[:16]
        targets = np.zeros((16, 2))
        targets[np.arange(16), ds.labels[:16]] = 1.0

        shapes = [model.w1.shape, model.b1.shape, model.w2.shape, model.b2.shape]
        sizes = [int(np.prod(s)) for s in shapes]

        def unpack(flat):
            parts = np.split(flat, np.cumsum(sizes)[:-1])
            return [p.reshape(s) for p, s in zip(parts, shapes)]

        def loss_at(flat):
            w1, b1, w2, b2 = unpack(flat)
            probe = type(model)(w1, b1, w2, b2, model.class_names)
            value, _ = mlp_loss_and_gradients(probe, X, targets, cfg)
            return value

        flat = rng.normal(scale=0.8, size=sum(sizes))
        w1, b1, w2, b2 = unpack(flat)
        probe = type(model)(w1, b1, w2, b2, model.class_names)
        _, grads = mlp_loss_and_gradients(probe, X, targets, cfg)
        analytic = np.concatenate(
            [grads["w1"].ravel(), grads["b1"].ravel(), grads["w2"].ravel(), grads["b2"].ravel()]
        )
        numeric = central_difference_gradient(loss_at, flat, step=1e-5)
        assert relative_error(analytic, numeric) < 1e-4

    def test_softmax_shift_invariance(self):
        ds, _ = blob_dataset(n=50, seed=1)
        model, _ = train_mlp(ds, 4, TrainConfig(epochs=3, seed=0))
        base = model.predict_batch(ds.cases)
        model.b2 = model.b2 + 37.5
        np.testing.assert_allclose(model.predict_batch(ds.cases), base, atol=1e-12)

    def test_training_determinism_bytes(self):
        ds, _ = blob_dataset(n=60, seed=4)
        cfg = TrainConfig(epochs=10, seed=9)
        m1, h1 = train_mlp(ds, 5, cfg)
        m2, h2 = train_mlp(ds, 5, cfg)
        assert canonical_dumps(model_to_dict(m1)) == canonical_dumps(model_to_dict(m2))
        assert h1 == h2

    def test_divergence_names_epoch(self):
        ds, _ = blob_dataset(n=40, seed=5)
        from elimkit.errors import TrainingDivergedError

        # lr * l2 >> 1 makes the decay step |1 - 2*lr*l2| > 1: weights grow
        # geometrically until the penalty overflows to a non-finite loss
        with pytest.raises(TrainingDivergedError) as err:
            train_mlp(
                ds,
                4,
                TrainConfig(epochs=500, seed=0, learning_rate=100.0, l2=1.0,
                            momentum=0.0),
            )
        assert "epoch" in str(err.value)

    def test_probabilities_always_valid(self):
        ds, _ = blob_dataset(n=40, seed=6)
        model, _ = train_mlp(ds, 4, TrainConfig(epochs=5, seed=0))
        X = np.random.default_rng(0).normal(scale=50.0, size=(30, 2))
        probs = model.predict_batch(X)
        assert np.all(probs >= 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


class TestJointTraining:
    def four_class_data(self, n=200, seed=0):
        spec = GaussianMixtureSpec(
            np.array([[0.0, 0.0], [0.0, 0.0], [4.0, 0.0], [0.0, 4.0]]),
            np.eye(2) * 0.4,
            np.full(4, 0.25),
            seed=seed,
        )
        return sample_mixture(spec, n), spec

    def test_grouped_targets(self):
        from elimkit.classifiers import _group_targets

        grouping = ClassGrouping(((0, 1), (2,), (3,)))
        targets = _group_targets(np.array([1]), grouping)
        # a case of the second source class targets the merged first group
        np.testing.assert_array_equal(targets, [[1.0, 0.0, 0.0]])

    def test_three_output_model(self):
        ds, _ = self.four_class_data()
        grouping = ClassGrouping(((0, 1), (2,), (3,)))
        model, _ = train_joint(ds, grouping, 6, TrainConfig(epochs=5, seed=0))
        assert model.n_classes == 3
        assert model.class_names[0] == "c0+c1"

    def test_singleton_grouping_matches_train_mlp(self):
        ds, _ = self.four_class_data(n=120)
        cfg = TrainConfig(epochs=8, seed=13)
        m_plain, h_plain = train_mlp(ds, 5, cfg)
        m_joint, h_joint = train_joint(ds, identity_grouping(4), 5, cfg)
        assert [h["loss"] for h in h_plain] == [h["loss"] for h in h_joint]
        np.testing.assert_array_equal(m_plain.w1, m_joint.w1)

    def test_overlapping_pair_beats_flat_accuracy(self):
        ds, spec = self.four_class_data(n=600, seed=3)
        cfg = TrainConfig(epochs=60, seed=0, learning_rate=0.3)
        flat, _ = train_mlp(ds, 8, cfg)
        flat_acc = (flat.predict_batch(ds.cases).argmax(axis=1) == ds.labels).mean()
        grouping = ClassGrouping(((0, 1), (2,), (3,)))
        joint, _ = train_joint(ds, grouping, 8, cfg)
        group_of = np.array([0, 0, 1, 2])
        joint_acc = (
            joint.predict_batch(ds.cases).argmax(axis=1) == group_of[ds.labels]
        ).mean()
        # classes 0 and 1 share a mean: flat top-1 is capped near 0.75 while
        # the merged problem is separable
        assert joint_acc > flat_acc + 0.05

    def test_non_partition_rejected(self):
        ds, _ = self.four_class_data(n=40)
        with pytest.raises(ValidationError):
            train_joint(ds, ClassGrouping(((0, 1), (2,))), 4, TrainConfig(seed=0))


class TestCommittee:
    def test_single_member_identity(self):
        ds, _ = blob_dataset(n=60, seed=7)
        committee, _ = committee_train(ds, 1, 4, TrainConfig(epochs=5, seed=2))
        x = [1.0, 0.3]
        np.testing.assert_allclose(
            committee_predict(committee, x),
            committee.members[0].predict_probs(x),
        )

    def test_averaging(self):
        class Fixed:
            def __init__(self, p):
                self.p = np.asarray(p, float)
                self.class_names = ("A", "B")
                self.features = None

            def predict_batch(self, X):
                return np.tile(self.p, (len(X), 1))

            def predict_probs(self, x):
                return self.p

        committee = Committee([Fixed([1.0, 0.0]), Fixed([0.0, 1.0])])
        np.testing.assert_allclose(committee.predict_probs([0.0]), [0.5, 0.5])

    def test_member_seeds_differ(self):
        ds, _ = blob_dataset(n=60, seed=8)
        committee, _ = committee_train(ds, 3, 4, TrainConfig(epochs=3, seed=2))
        w = [m.w1 for m in committee.members]
        assert not np.array_equal(w[0], w[1])

    def test_committee_variance_bounded_by_members(self):
        ds, _ = blob_dataset(n=80, seed=9)
        x = np.array([2.0, 0.0])
        reps = 5
        members = 4
        member_outputs = np.zeros((reps, members, 2))
        committee_outputs = np.zeros((reps, 2))
        for r in range(reps):
            committee, _ = committee_train(
                ds, members, 4, TrainConfig(epochs=6, seed=100 + r)
            )
            for mi, member in enumerate(committee.members):
                member_outputs[r, mi] = member.predict_probs(x)
            committee_outputs[r] = committee.predict_probs(x)
        committee_var = committee_outputs.var(axis=0).max()
        member_var = member_outputs.var(axis=0).max()
        assert committee_var <= member_var + 1e-12


class TestRiskWeightedLoss:
    def test_default_risk_counts_errors(self):
        preds = np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]])
        truth = [0, 0, 1]
        r = 1.0 - np.eye(2)
        assert risk_weighted_loss(preds, truth, r) == 2.0

    def test_all_correct_zero(self):
        preds = np.eye(3)
        assert risk_weighted_loss(preds, [0, 1, 2], 1.0 - np.eye(3)) == 0.0

    def test_linearity(self):
        rng = np.random.default_rng(0)
        preds = rng.dirichlet(np.ones(3), size=20)
        truth = rng.integers(0, 3, 20)
        r = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], float)
        assert risk_weighted_loss(preds, truth, 2 * r) == pytest.approx(
            2 * risk_weighted_loss(preds, truth, r)
        )

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            risk_weighted_loss(np.eye(3), [0, 1, 2], np.zeros((2, 2)))

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(ValidationError):
            risk_weighted_loss(np.eye(2), [0, 1], np.eye(2))


class TestRiskMatrixInTraining:
    def test_simplest_risk_equals_plain_cost(self):
        ds, _ = blob_dataset(n=40, seed=10)
        plain = TrainConfig(epochs=4, seed=1)
        risky = TrainConfig(epochs=4, seed=1, risk_matrix=1.0 - np.eye(2))
        _, h1 = train_mlp(ds, 3, plain)
        _, h2 = train_mlp(ds, 3, risky)
        assert [h["loss"] for h in h1] == [h["loss"] for h in h2]
