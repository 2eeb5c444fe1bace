import numpy as np
import pytest
from scipy.special import expit

from elimkit import (
    ClassGrouping,
    FeatureMeta,
    GaussianMixtureSpec,
    bayes_posterior,
    dataset_from_arrays,
    export_csv,
    ingest_csv,
    logistic_parameters,
    parse_csv_text,
    sample_mixture,
    split,
)
from elimkit.datakit import posterior_from_log_densities
from elimkit.errors import ParseError, SchemaError, ValidationError


def two_class_1d(mean0=0.0, mean1=2.0, var=1.0, priors=(0.5, 0.5), seed=0):
    return GaussianMixtureSpec(
        np.array([[mean0], [mean1]]),
        np.array([[var]]),
        np.array(priors),
        seed=seed,
    )


class TestIngestCsv:
    def test_four_row_two_feature_readback(self, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("f1,f2,label\n1.0,2.0,A\n2.0,3.0,B\n0.5,1.5,A\n3.0,0.0,B\n")
        ds = ingest_csv(path, "label")
        assert ds.n_classes == 2
        assert ds.n_features == 2
        assert ds.class_names == ("A", "B")
        assert ds.labels.tolist() == [0, 1, 0, 1]
        np.testing.assert_allclose(ds.cases[0], [1.0, 2.0])

    def test_non_numeric_cell_addressed(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f1,label\n1.0,A\noops,B\n")
        with pytest.raises(ParseError) as err:
            ingest_csv(path, "label")
        assert "row 3" in str(err.value)
        assert "f1" in str(err.value)

    def test_nine_continuous_plus_sex_categorical(self, tmp_path):
        header = ",".join([f"t{i}" for i in range(9)] + ["sex", "label"])
        rows = [
            ",".join([f"{i + j * 0.5}" for i in range(9)] + [sex, cls])
            for j, (sex, cls) in enumerate(
                [("M", "AL"), ("F", "PH"), ("F", "AL"), ("M", "LC")]
            )
        ]
        path = tmp_path / "hep.csv"
        path.write_text(header + "\n" + "\n".join(rows) + "\n")
        ds = ingest_csv(path, "label", kinds={"sex": "categorical"})
        kinds = [m.kind for m in ds.features]
        assert kinds.count("continuous") == 9
        assert kinds.count("categorical") == 1
        sex = ds.features[9]
        assert sex.codes == ("F", "M")
        assert ds.cases[0, 9] == 1.0  # M codes to 1 after sorting

    def test_missing_label_column(self):
        with pytest.raises(SchemaError):
            parse_csv_text("a,b\n1,2\n", "label")

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            parse_csv_text("a,label\n1,A\n2,A\n", "label")

    def test_missing_value_rejected(self):
        with pytest.raises(ParseError) as err:
            parse_csv_text("a,label\n1,A\n,B\n", "label")
        assert "missing" in str(err.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            ingest_csv(tmp_path / "nope.csv", "label")

    def test_roundtrip_is_canonical(self, tmp_path):
        src = tmp_path / "src.csv"
        src.write_text(
            "f1,sex,label\n1.25,M,B\n2.5,F,A\n-0.75,F,B\n0.0,M,A\n"
        )
        ds = ingest_csv(src, "label", kinds={"sex": "categorical"}, name="round")
        out = tmp_path / "out.csv"
        export_csv(ds, out)
        again = ingest_csv(out, "label", kinds={"sex": "categorical"}, name="round")
        assert ds == again


class TestSplit:
    def test_deterministic_70_30(self):
        ds = dataset_from_arrays(
            np.arange(200.0).reshape(100, 2), [i % 2 for i in range(100)], ("A", "B")
        )
        train1, test1 = split(ds, 0.3, seed=7)
        train2, test2 = split(ds, 0.3, seed=7)
        assert train1.n_cases == 70 and test1.n_cases == 30
        assert train1 == train2 and test1 == test2
        assert train1.class_names == ds.class_names
        # disjoint partition
        seen = np.vstack([train1.cases, test1.cases])
        assert len(np.unique(seen[:, 0])) == 100

    def test_fraction_bounds(self):
        ds = dataset_from_arrays(np.zeros((10, 1)), [0, 1] * 5, ("A", "B"))
        with pytest.raises(ValidationError):
            split(ds, 0.0, seed=1)
        with pytest.raises(ValidationError):
            split(ds, 1.0, seed=1)

    def test_fixed_count_split(self):
        ds = dataset_from_arrays(
            np.random.default_rng(0).normal(size=(536, 3)),
            [i % 4 for i in range(536)],
            ("AL", "PH", "LC", "CH"),
        )
        _, test = split(ds, 163 / 536, seed=0)
        assert test.n_cases == 163


class TestSampleMixture:
    def test_degenerate_prior(self):
        spec = two_class_1d(priors=(1.0, 0.0))
        ds = sample_mixture(spec, 50)
        assert set(ds.labels.tolist()) == {0}
        assert ds.n_classes == 2

    def test_class_frequencies_within_3_sigma(self):
        spec = GaussianMixtureSpec(
            np.array([[0.0, 0.0], [2.0, 0.0]]), np.eye(2), np.array([0.5, 0.5]), seed=11
        )
        n = 10_000
        ds = sample_mixture(spec, n)
        freq = (ds.labels == 0).mean()
        sigma = np.sqrt(0.25 / n)
        assert abs(freq - 0.5) <= 3 * sigma

    def test_class_conditional_means_within_3_sigma(self):
        spec = GaussianMixtureSpec(
            np.array([[0.0, 0.0], [2.0, 0.0]]), np.eye(2), np.array([0.5, 0.5]), seed=11
        )
        ds = sample_mixture(spec, 10_000)
        for k in range(2):
            sel = ds.cases[ds.labels == k]
            bound = 3.0 / np.sqrt(len(sel))
            np.testing.assert_array_less(np.abs(sel.mean(0) - spec.means[k]), bound)

    def test_seed_determinism(self):
        spec = two_class_1d(seed=5)
        assert sample_mixture(spec, 100) == sample_mixture(spec, 100)
        other = GaussianMixtureSpec(spec.means, spec.covariance, spec.priors, seed=6)
        assert sample_mixture(other, 100) != sample_mixture(spec, 100)

    def test_non_pd_covariance_rejected(self):
        with pytest.raises(ValidationError):
            GaussianMixtureSpec(
                np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]),
                np.array([0.5, 0.5]), seed=0,
            )

    def test_n_must_be_positive(self):
        with pytest.raises(ValidationError):
            sample_mixture(two_class_1d(), 0)


class TestBayesPosterior:
    def test_symmetry_midpoint(self):
        spec = two_class_1d()
        np.testing.assert_allclose(bayes_posterior(spec, [1.0]), [0.5, 0.5], atol=1e-12)

    def test_sigma_two_at_origin(self):
        # log density ratio at x=0 is 2, so p(C0) = sigmoid(2) = 0.8807970...
        spec = two_class_1d()
        p = bayes_posterior(spec, [0.0])
        assert p[0] == pytest.approx(expit(2.0), abs=1e-12)
        assert p[0] == pytest.approx(0.8807970779778823, abs=1e-12)

    def test_degenerate_prior(self):
        spec = two_class_1d(priors=(1.0, 0.0))
        for x in (-3.0, 0.0, 5.0):
            np.testing.assert_allclose(bayes_posterior(spec, [x]), [1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            bayes_posterior(two_class_1d(), [0.0, 1.0])

    def test_sums_to_one(self):
        spec = GaussianMixtureSpec(
            np.array([[0.0, 1.0], [2.0, -1.0], [4.0, 0.0]]),
            np.eye(2) * 0.7,
            np.array([0.2, 0.5, 0.3]),
            seed=0,
        )
        rng = np.random.default_rng(3)
        for x in rng.normal(size=(50, 2)):
            assert abs(bayes_posterior(spec, x).sum() - 1.0) <= 1e-12

    def test_log_density_shift_invariance(self):
        logd = np.array([[-3.1, -0.2, -7.7]])
        priors = np.array([0.2, 0.5, 0.3])
        base = posterior_from_log_densities(logd, priors)
        shifted = posterior_from_log_densities(logd + 123.456, priors)
        np.testing.assert_allclose(base, shifted, atol=1e-12)

    def test_k2_equals_logistic_form(self):
        spec = GaussianMixtureSpec(
            np.array([[0.0, 1.0], [2.0, -0.5]]),
            np.array([[1.0, 0.3], [0.3, 2.0]]),
            np.array([0.3, 0.7]),
            seed=0,
        )
        w, theta = logistic_parameters(spec)
        rng = np.random.default_rng(8)
        for x in rng.normal(scale=2.0, size=(100, 2)):
            direct = bayes_posterior(spec, x)[0]
            via_logistic = expit(float(w @ x) - theta)
            assert direct == pytest.approx(via_logistic, abs=1e-10)


class TestDatasetInvariants:
    def test_label_out_of_range(self):
        with pytest.raises(ValidationError):
            dataset_from_arrays(np.zeros((2, 1)), [0, 2], ("A", "B"))

    def test_needs_two_classes(self):
        with pytest.raises(ValidationError):
            dataset_from_arrays(np.zeros((2, 1)), [0, 0], ("A",))

    def test_feature_range_consistency(self):
        with pytest.raises(ValidationError):
            FeatureMeta("x", "continuous", 2.0, 1.0)

    def test_arrays_frozen(self):
        ds = dataset_from_arrays(np.zeros((2, 1)), [0, 1], ("A", "B"))
        with pytest.raises(ValueError):
            ds.cases[0, 0] = 5.0


class TestClassGrouping:
    def test_partition_checks(self):
        ClassGrouping(((0, 1), (2,), (3,)))
        with pytest.raises(ValidationError):
            ClassGrouping(((0, 1), (1, 2),))
        with pytest.raises(ValidationError):
            ClassGrouping(((0,), (2,)))
        with pytest.raises(ValidationError):
            ClassGrouping(((0,), (),))

    def test_display_names(self):
        g = ClassGrouping(((0, 1), (2,)))
        assert g.display_names(("AL", "PH", "LC")) == ("AL+PH", "LC")
