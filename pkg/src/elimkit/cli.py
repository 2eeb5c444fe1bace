"""Batch command-line front end.

Every command is deterministic given (inputs, flags, seed): primary
artifacts are byte-identical across reruns, and run metadata that cannot be
(timestamps) is confined to the sidecar manifest. Errors go to stderr as
single-line JSON with a stable ``code``; exit codes are 0 ok, 1 computation
error, 2 usage error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import socket
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .classifiers import (
    KnnClassifier,
    TrainConfig,
    committee_train,
    train_joint,
    train_lda,
    train_mlp,
)
from .datakit import ClassGrouping, GaussianMixtureSpec, ingest_csv, sample_mixture
from .datakit import split as split_dataset
from .eliminator import (
    EliminationPolicy,
    eliminate,
    confused_pairs,
    rejection_curve,
    relaxed_accuracy,
)
from .errors import ClassMismatchError, ElimkitError, ValidationError
from .metrics import confusion, metric_report, write_confusion_csv, z_score
from .persist import (
    canonical_dumps,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
    write_json,
)
from .uncertainty import (
    McConfig,
    UncertaintyProfile,
    confidence_interval,
    mc_probabilities,
    rho_sweep,
    sensitivity_sweep,
)

DEFAULT_THRESHOLDS = [round(0.05 * i, 2) for i in range(20)]


# ---------------------------------------------------------------------------
# Helpers


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(artifact_path, command: str, flags: dict, inputs: list, seed=None):
    """Sidecar run manifest; the only artifact carrying wall-clock data."""
    manifest = {
        "command": command,
        "config_digest": _sha256_text(canonical_dumps(flags)),
        "input_digests": {str(p): _sha256_file(p) for p in inputs},
        "seed": seed,
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    write_json(str(artifact_path) + ".manifest.json", manifest)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ValidationError(f"cannot parse {text!r} as a comma-separated float list")


def _parse_groups(text: str) -> ClassGrouping:
    """'0,1|2|3' -> ClassGrouping(((0, 1), (2,), (3,)))."""
    try:
        groups = tuple(
            tuple(int(i) for i in part.split(",")) for part in text.split("|")
        )
    except ValueError:
        raise ValidationError(f"cannot parse group spec {text!r}")
    return ClassGrouping(groups)


def _parse_policy(text: str) -> EliminationPolicy:
    """'accept=0.9,retain=0.2,max=4' with any subset of keys."""
    kwargs = {}
    mapping = {"accept": "accept_threshold", "retain": "retain_threshold", "max": "max_retained"}
    for part in text.split(","):
        if not part.strip():
            continue
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in mapping:
            raise ValidationError(f"unknown policy key {key!r}")
        kwargs[mapping[key]] = int(value) if key == "max" else float(value)
    return EliminationPolicy(**kwargs)


def _require_exists(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"{what} not found: {p}")
    return p


def _check_compatible(model, data):
    if tuple(model.class_names) != tuple(data.class_names):
        raise ClassMismatchError(
            f"model classes {model.class_names} != dataset classes {data.class_names}"
        )


def _sweep_csv(curve) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(
        ["abscissa"]
        + [f"p_{c}" for c in curve.class_names]
        + [f"se_{c}" for c in curve.class_names]
    )
    for a, p, s in zip(curve.abscissa, curve.probabilities, curve.stderr):
        writer.writerow([repr(float(a))] + [repr(float(v)) for v in p] + [repr(float(v)) for v in s])
    return out.getvalue()


def _rejection_csv(points) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["threshold", "rejection_rate", "accuracy"])
    for point in points:
        acc = "" if point.accuracy is None else repr(point.accuracy)
        writer.writerow([repr(point.threshold), repr(point.rejection_rate), acc])
    return out.getvalue()


# ---------------------------------------------------------------------------
# Commands


@click.group()
@click.version_option(__version__)
def cli():
    """Uncertainty-aware class elimination toolkit."""


@cli.command()
@click.option("--csv", "csv_path", required=True, help="Input CSV file.")
@click.option("--label", "label_column", required=True, help="Label column name.")
@click.option("--categorical", default="", help="Comma-separated categorical columns.")
@click.option("--name", default=None, help="Dataset name (defaults to the file stem).")
@click.option("--out", required=True, help="Output dataset JSON path.")
def ingest(csv_path, label_column, categorical, name, out):
    """Ingest a CSV file into a dataset document."""
    path = _require_exists(csv_path, "CSV file")
    kinds = {c.strip(): "categorical" for c in categorical.split(",") if c.strip()}
    ds = ingest_csv(path, label_column, kinds=kinds, name=name)
    save_dataset(ds, out)
    write_manifest(out, "ingest", {"label": label_column, "kinds": kinds}, [path])
    click.echo(out)


@cli.command()
@click.option("--spec", "spec_path", required=True, help="Mixture spec JSON.")
@click.option("--n", type=int, required=True, help="Number of cases to draw.")
@click.option("--name", default="mixture")
@click.option("--out", required=True)
def sample(spec_path, n, name, out):
    """Draw a labelled sample from a Gaussian mixture spec (seed lives in the spec)."""
    path = _require_exists(spec_path, "mixture spec")
    spec = GaussianMixtureSpec.from_dict(json.loads(path.read_text()))
    ds = sample_mixture(spec, n, name=name)
    save_dataset(ds, out)
    write_manifest(out, "sample", {"n": n, "name": name}, [path], seed=spec.seed)
    click.echo(out)


@cli.command()
@click.option("--data", "data_path", required=True)
@click.option("--fraction", type=float, required=True, help="Test fraction in (0, 1).")
@click.option("--seed", type=int, required=True)
@click.option("--train-out", required=True)
@click.option("--test-out", required=True)
def split(data_path, fraction, seed, train_out, test_out):
    """Deterministically split a dataset into train and test documents."""
    path = _require_exists(data_path, "dataset")
    ds = load_dataset(path)
    train, test = split_dataset(ds, fraction, seed)
    save_dataset(train, train_out)
    save_dataset(test, test_out)
    flags = {"fraction": fraction}
    write_manifest(train_out, "split", flags, [path], seed=seed)
    write_manifest(test_out, "split", flags, [path], seed=seed)
    click.echo(train_out)
    click.echo(test_out)


@cli.command()
@click.option("--data", "data_path", required=True)
@click.option("--kind", type=click.Choice(["mlp", "joint", "lda", "knn", "committee", "rules"]), required=True)
@click.option("--hidden", type=int, default=8)
@click.option("--seed", type=int, required=True)
@click.option("--epochs", type=int, default=200)
@click.option("--lr", type=float, default=0.1)
@click.option("--momentum", type=float, default=0.9)
@click.option("--l2", type=float, default=0.0)
@click.option("--batch-size", type=int, default=32)
@click.option("--patience", type=int, default=None)
@click.option("--transform", type=click.Choice(["quadratic", "cross-entropy"]), default="quadratic")
@click.option("--groups", default=None, help="Joint grouping, e.g. '0,1|2|3'.")
@click.option("--members", type=int, default=5, help="Committee size.")
@click.option("--k", type=int, default=1, help="kNN neighbour count.")
@click.option("--metric", type=click.Choice(["manhattan", "euclidean"]), default="manhattan")
@click.option("--mode", type=click.Choice(["crisp", "vote"]), default="crisp")
@click.option("--slope", type=float, default=1.0, help="LDA logistic slope.")
@click.option("--rules-file", default=None, help="Rule list JSON for --kind rules.")
@click.option("--out", required=True, help="Model JSON path.")
@click.option("--log-out", default=None, help="Training log JSON path.")
def train(data_path, kind, hidden, seed, epochs, lr, momentum, l2, batch_size,
          patience, transform, groups, members, k, metric, mode, slope,
          rules_file, out, log_out):
    """Train (or package) a classifier and write it as a model document."""
    path = _require_exists(data_path, "dataset")
    ds = load_dataset(path)
    cfg = TrainConfig(
        transform=transform, learning_rate=lr, momentum=momentum, l2=l2,
        epochs=epochs, patience=patience, seed=seed, batch_size=batch_size,
    )
    inputs = [path]
    history = None
    if kind == "mlp":
        model, history = train_mlp(ds, hidden, cfg)
    elif kind == "joint":
        if not groups:
            raise ValidationError("--kind joint requires --groups")
        model, history = train_joint(ds, _parse_groups(groups), hidden, cfg)
    elif kind == "lda":
        model = train_lda(ds, slope=slope)
    elif kind == "knn":
        model = KnnClassifier(ds, k=k, metric=metric, mode=mode)
    elif kind == "committee":
        model, logs = committee_train(ds, members, hidden, cfg)
        history = [entry for log in logs for entry in log]
    else:  # rules
        if not rules_file:
            raise ValidationError("--kind rules requires --rules-file")
        rules_path = _require_exists(rules_file, "rules file")
        from .classifiers import IntervalRuleSet, Rule, RuleCondition

        doc = json.loads(rules_path.read_text())
        model = IntervalRuleSet(
            [
                Rule(
                    r["class"],
                    [RuleCondition(c["feature"], c["low"], c["high"]) for c in r["conditions"]],
                )
                for r in doc["rules"]
            ],
            doc["default_class"],
            ds.class_names,
            ds.features,
        )
        inputs.append(rules_path)
    save_model(model, out)
    flags = {
        "kind": kind, "hidden": hidden, "epochs": epochs, "lr": lr,
        "momentum": momentum, "l2": l2, "batch_size": batch_size,
        "patience": patience, "transform": transform, "groups": groups,
        "members": members, "k": k, "metric": metric, "mode": mode, "slope": slope,
    }
    write_manifest(out, "train", flags, inputs, seed=seed)
    if history is not None and log_out:
        write_json(log_out, history)
    click.echo(out)


@cli.command()
@click.option("--model", "model_path", required=True)
@click.option("--data", "data_path", required=True)
@click.option("--thresholds", default=None, help="Rejection thresholds, comma separated.")
@click.option("--relaxed-k", type=int, default=2)
@click.option("--out-report", required=True)
@click.option("--out-confusion", required=True)
@click.option("--out-curve", required=True)
def evaluate(model_path, data_path, thresholds, relaxed_k, out_report,
             out_confusion, out_curve):
    """Confusion matrix, kappa/tau report and rejection curve for a model."""
    mp = _require_exists(model_path, "model")
    dp = _require_exists(data_path, "dataset")
    model = load_model(mp)
    ds = load_dataset(dp)
    _check_compatible(model, ds)
    probs = model.predict_batch(ds.cases)
    preds = probs.argmax(axis=1)
    cm = confusion(preds, ds.labels, ds.n_classes, ds.class_names)
    report = metric_report(cm)
    t = _parse_floats(thresholds) if thresholds else DEFAULT_THRESHOLDS
    curve = rejection_curve(model, ds, t)
    doc = report.to_dict()
    doc["relaxed_accuracy"] = {
        str(kk): relaxed_accuracy(model, ds, kk)
        for kk in range(1, min(relaxed_k, ds.n_classes) + 1)
    }
    doc["confused_pairs"] = [
        {"pair": list(pair), "names": [ds.class_names[i] for i in pair], "score": score}
        for pair, score in confused_pairs(cm)
    ]
    write_json(out_report, doc)
    Path(out_confusion).write_text(write_confusion_csv(cm), encoding="utf-8")
    Path(out_curve).write_text(_rejection_csv(curve), encoding="utf-8")
    write_manifest(out_report, "evaluate", {"thresholds": t}, [mp, dp])
    click.echo(out_report)
    click.echo(out_confusion)
    click.echo(out_curve)


@cli.command()
@click.option("--model-a", required=True)
@click.option("--model-b", required=True)
@click.option("--data", "data_path", required=True)
@click.option("--out", default=None)
def compare(model_a, model_b, data_path, out):
    """Z-score significance test between two models on one dataset."""
    pa = _require_exists(model_a, "model A")
    pb = _require_exists(model_b, "model B")
    dp = _require_exists(data_path, "dataset")
    ds = load_dataset(dp)
    result = {}
    taus = []
    for tag, p in (("a", pa), ("b", pb)):
        model = load_model(p)
        _check_compatible(model, ds)
        preds = model.predict_batch(ds.cases).argmax(axis=1)
        cm = confusion(preds, ds.labels, ds.n_classes, ds.class_names)
        report = metric_report(cm)
        result[f"tau_{tag}"] = report.tau
        result[f"var_tau_{tag}"] = report.var_tau
        taus.append((report.tau, report.var_tau))
    z, significant = z_score(taus[0][0], taus[0][1], taus[1][0], taus[1][1])
    result["z"] = z
    result["significant"] = significant
    text = canonical_dumps(result)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        write_manifest(out, "compare", {}, [pa, pb, dp])
        click.echo(out)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option("--model", "model_path", required=True)
@click.option("--features", required=True, help="Case feature values, comma separated.")
@click.option("--data", "data_path", default=None, help="Dataset providing feature ranges.")
@click.option("--rho", type=float, default=0.0)
@click.option("--rho-grid", default=None, help="Emit a rho sweep over this grid.")
@click.option("--sensitivity", type=int, default=None, help="Feature index to sweep.")
@click.option("--s-grid", default=None, help="Dispersion grid for --sensitivity.")
@click.option("--intervals", is_flag=True, help="Emit per-feature confidence intervals.")
@click.option("--policy", default="", help="e.g. accept=0.9,retain=0.2,max=4")
@click.option("--n-samples", type=int, default=5000)
@click.option("--seed", type=int, required=True)
@click.option("--out", default=None, help="Verdict JSON path (stdout if omitted).")
@click.option("--sweep-out", default=None)
@click.option("--sensitivity-out", default=None)
def case(model_path, features, data_path, rho, rho_grid, sensitivity, s_grid,
         intervals, policy, n_samples, seed, out, sweep_out, sensitivity_out):
    """Evaluate one case: probabilities, verdict, sweeps, intervals."""
    mp = _require_exists(model_path, "model")
    model = load_model(mp)
    x = np.array(_parse_floats(features))
    feats = model.features
    inputs = [mp]
    if data_path:
        dp = _require_exists(data_path, "dataset")
        feats = load_dataset(dp).features
        inputs.append(dp)
    mc = McConfig(n_samples=n_samples, seed=seed)
    profile = UncertaintyProfile(rho=rho)
    est = mc_probabilities(model, x, profile, mc, features=feats)
    pol = _parse_policy(policy) if policy else EliminationPolicy()
    verdict = eliminate(est.probabilities, pol, class_names=model.class_names)
    doc = {
        "class_names": list(model.class_names),
        "probabilities": [float(v) for v in est.probabilities],
        "stderr": [float(v) for v in est.stderr],
        "rho": rho,
        "verdict": verdict.to_dict(),
    }
    if rho_grid:
        curve = rho_sweep(model, x, _parse_floats(rho_grid), mc, features=feats)
        doc["rho_flag"] = curve.flag
        if sweep_out:
            Path(sweep_out).write_text(_sweep_csv(curve), encoding="utf-8")
    if sensitivity is not None:
        if not s_grid:
            raise ValidationError("--sensitivity requires --s-grid")
        curve = sensitivity_sweep(
            model, x, rho, sensitivity, _parse_floats(s_grid), mc, features=feats
        )
        if sensitivity_out:
            Path(sensitivity_out).write_text(_sweep_csv(curve), encoding="utf-8")
    if intervals:
        if feats is None:
            raise ValidationError("confidence intervals need --data for feature ranges")
        ci = []
        for i, meta in enumerate(feats):
            if meta.kind != "continuous":
                continue
            low, high = confidence_interval(model, x, i, features=feats)
            ci.append({"feature": i, "name": meta.name, "low": low, "high": high})
        doc["intervals"] = ci
    text = canonical_dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        write_manifest(out, "case", {"rho": rho, "n_samples": n_samples}, inputs, seed=seed)
        click.echo(out)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8765)
@click.option("--store", default=None, help="Directory for uploaded resources.")
def serve(host, port, store):
    """Run the HTTP JSON API (module `service`) until interrupted."""
    import uvicorn

    from .service import create_app

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        raise ElimkitError(f"cannot bind {host}:{port}: {exc}") from None
    bound_host, bound_port = sock.getsockname()
    click.echo(f"serving on http://{bound_host}:{bound_port}", err=False)
    sys.stdout.flush()
    app = create_app(store_dir=store)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    try:
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        pass  # uvicorn has already completed its graceful shutdown


def main():
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        sys.stderr.write(
            json.dumps({"code": "usage", "message": exc.format_message()}) + "\n"
        )
        sys.exit(2)
    except ElimkitError as exc:
        sys.stderr.write(json.dumps({"code": exc.code, "message": str(exc)}) + "\n")
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
