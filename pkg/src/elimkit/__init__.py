"""elimkit: uncertainty-aware class elimination for crisp and probabilistic
classifiers."""

from .datakit import (
    CATEGORICAL,
    CONTINUOUS,
    ClassGrouping,
    Dataset,
    FeatureMeta,
    GaussianMixtureSpec,
    bayes_posterior,
    bayes_posterior_batch,
    dataset_from_arrays,
    export_csv,
    identity_grouping,
    ingest_csv,
    logistic_parameters,
    parse_csv_text,
    sample_mixture,
    split,
)
from .classifiers import (
    BayesMixtureClassifier,
    Classifier,
    Committee,
    IntervalRuleSet,
    KnnClassifier,
    LinearLogisticModel,
    MlpModel,
    Rule,
    RuleCondition,
    TrainConfig,
    check_probabilities,
    committee_predict,
    committee_train,
    knn_loo_accuracy,
    knn_predict,
    mlp_loss_and_gradients,
    risk_weighted_loss,
    rules_predict,
    train_joint,
    train_lda,
    train_mlp,
)
from .uncertainty import (
    FeatureGroup,
    McConfig,
    McEstimate,
    SweepCurve,
    UncertaintyProfile,
    analytic_condition_probability,
    confidence_interval,
    dispersions,
    mc_probabilities,
    prior_recovery_report,
    rho_sweep,
    sensitivity_sweep,
    soft_rules_loss,
    soft_rules_predict,
    tune_soft_rules,
)
from .eliminator import (
    EliminationPolicy,
    EliminationVerdict,
    RejectionPoint,
    TwoStagePipeline,
    build_two_stage,
    confused_pairs,
    eliminate,
    high_confidence_errors,
    rejection_curve,
    relaxed_accuracy,
    thresholded_relaxed_accuracy,
    two_stage_classify,
)
from .metrics import (
    ConfusionMatrix,
    MetricReport,
    accuracy,
    base_rate,
    confusion,
    kappa,
    locally_weighted_error,
    make_kernel,
    metric_report,
    read_confusion_csv,
    similarity_weighted_error,
    tau,
    variances,
    write_confusion_csv,
    z_score,
)
from .persist import load_dataset, load_model, save_dataset, save_model

__version__ = "0.1.0"
