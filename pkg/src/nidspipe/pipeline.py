"""Stage orchestration behind the CLI: generate, embed, run, evaluate, report."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .balance import balance
from .classify import SHORT_NAMES, VARIANTS, load_model, train
from .config import PipelineConfig
from .data_model import (ClassMixtureSpec, Dataset, LabelTaxonomy, binarize_labels,
                         encode_labels, infer_schema, load_csv, replica_spec,
                         stratified_sample, stratified_sample_indices, stratified_split,
                         synth_generate, write_csv)
from .dimred import (Embedding, PcaModel, TsneParams, UmapParams, pca_fit,
                     pca_transform, rank_features, tsne_embed, umap_embed)
from .errors import ConfigError, DataError, PipelineError, StageError
from .evaluate import metrics_summary, roc_curve
from .preprocess import PreprocessPlan, apply_preprocess, drop_redundant, fit_preprocess

log = logging.getLogger(__name__)

REPORT_NAME = "run_report.json"
TIMING_FIELDS = ("timings",)


def dump_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def dataset_fingerprint(ds: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ds.column_names)
    for name in ds.column_names:
        arr = ds.column(name)
        w.writerow([repr(v) for v in arr.tolist()])
    return hashlib.sha256(buf.getvalue().encode()).hexdigest()


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class StageTimer:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self.current: str | None = None

    @contextmanager
    def stage(self, name: str):
        self.current = name
        log.info("stage %s", name)
        start = time.perf_counter()
        try:
            yield
        except PipelineError as exc:
            if isinstance(exc, (StageError, ConfigError)):
                raise
            raise StageError(name, exc) from exc
        except Exception as exc:  # noqa: BLE001 - any failure aborts the stage
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = round(time.perf_counter() - start, 6)


# ---------------------------------------------------------------------------
# Input


def mixture_spec(cfg: PipelineConfig) -> ClassMixtureSpec:
    syn = cfg["input"]["synthetic"]
    if syn["spec_file"] is not None:
        text = cfg.resolve_path(syn["spec_file"]).read_text()
        return ClassMixtureSpec.from_dict(yaml.safe_load(text))
    spec = replica_spec(total=syn["total"], n_numeric=syn["n_numeric"],
                        separation=float(syn["separation"]),
                        seed=cfg.stage_seed("synthetic"),
                        missing_fraction=float(syn["missing_fraction"]))
    label = cfg["input"]["label_column"]
    if label != spec.label_column:
        spec = ClassMixtureSpec(**{**spec.__dict__, "label_column": label})
    return spec


def load_input(cfg: PipelineConfig) -> tuple[Dataset, dict]:
    inp = cfg["input"]
    if inp["csv"] is not None:
        path = cfg.resolve_path(inp["csv"])
        schema = infer_schema(path, inp["label_column"])
        ds = load_csv(path, schema)
        source = {"kind": "csv", "path": str(inp["csv"])}
    else:
        ds = synth_generate(mixture_spec(cfg))
        source = {"kind": "synthetic"}
    excluded = [c for c in inp["exclude_columns"] if c in ds.columns]
    if excluded:
        ds = ds.drop_columns(excluded)
    source["excluded_columns"] = excluded
    source["rows_loaded"] = ds.n_rows
    if inp["max_rows"] is not None and ds.n_rows > inp["max_rows"]:
        ds = stratified_sample(ds, inp["max_rows"], cfg.stage_seed("max_rows"))
    source["rows_used"] = ds.n_rows
    return ds, source


def taxonomy(cfg: PipelineConfig) -> LabelTaxonomy:
    return LabelTaxonomy(tuple(cfg["taxonomy"]["classes"]), cfg["taxonomy"]["benign"])


def class_counts(labels, tax: LabelTaxonomy) -> dict:
    codes = encode_labels(labels, tax)
    counts = np.bincount(codes, minlength=len(tax.classes))
    return {name: int(c) for name, c in zip(tax.classes, counts)}


# ---------------------------------------------------------------------------
# generate


def cmd_generate(cfg: PipelineConfig, out_dir: Path) -> dict:
    from .plotting import plot_class_distribution

    spec = mixture_spec(cfg)
    ds = synth_generate(spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out_dir / "synthetic.csv")
    dump_json(spec.to_dict(), out_dir / "synthetic_spec.json")
    counts = {}
    for lab in ds.labels.tolist():
        counts[lab] = counts.get(lab, 0) + 1
    counts = {c.name: counts[c.name] for c in spec.classes if c.name in counts}
    plot_class_distribution(counts, out_dir / "plots" / "class_distribution.svg")
    return {"rows": ds.n_rows, "class_counts": counts,
            "files": ["synthetic.csv", "synthetic_spec.json", "plots/class_distribution.svg"]}


# ---------------------------------------------------------------------------
# embed


def tsne_params(cfg: PipelineConfig, n: int) -> TsneParams:
    p = dict(cfg["embed"]["tsne"])
    # Exact t-SNE requires perplexity < (n - 1) / 3.
    limit = (n - 1) / 3
    if p["perplexity"] >= limit:
        p["perplexity"] = max(1.0, (limit - 1e-6) * 0.95)
    return TsneParams(**p, output_dim=cfg["embed"]["dim"], seed=cfg.stage_seed("tsne"))


def umap_params(cfg: PipelineConfig, n: int) -> UmapParams:
    p = dict(cfg["embed"]["umap"])
    p["n_neighbors"] = min(p["n_neighbors"], n - 1)
    return UmapParams(**p, output_dim=cfg["embed"]["dim"], seed=cfg.stage_seed("umap"))


def cmd_embed(cfg: PipelineConfig, out_dir: Path) -> dict:
    from .plotting import plot_embedding

    emb_cfg = cfg["embed"]
    methods = list(emb_cfg["methods"])
    if not methods:
        raise ConfigError("embed.methods is empty")
    timer = StageTimer()
    with timer.stage("load"):
        ds, source = load_input(cfg)
        if emb_cfg["classes"]:
            tax = taxonomy(cfg)
            wanted = {tax.index(c) for c in emb_cfg["classes"]}
            keep = np.flatnonzero(np.isin(encode_labels(ds.labels, tax), list(wanted)))
            if len(keep) == 0:
                raise DataError("no rows belong to embed.classes")
            ds = ds.take(keep)
    with timer.stage("preprocess"):
        reduced, dropped = drop_redundant(ds)
        plan = fit_preprocess(reduced, cfg["preprocess"]["skew_threshold"], dropped)
        X = apply_preprocess(plan, ds)
    with timer.stage("subsample"):
        idx = stratified_sample_indices(ds.labels, emb_cfg["row_cap"], cfg.stage_seed("embed_cap"))
        Xs = X.values[idx]
        labels = ds.labels[idx].tolist()
    out_dir.mkdir(parents=True, exist_ok=True)
    dim = emb_cfg["dim"]
    files, summary = [], {}
    for method in methods:
        with timer.stage(f"embed_{method}"):
            if method == "pca":
                model = pca_fit(X, min(dim, X.shape[1], X.shape[0] - 1))
                coords = pca_transform(model, Xs).values
                if coords.shape[1] < dim:
                    coords = np.hstack([coords, np.zeros((len(coords), dim - coords.shape[1]))])
                emb = Embedding(coords, labels, "pca",
                                {"explained_variance_ratio": model.explained_variance_ratio.tolist()})
            elif method == "tsne":
                emb = tsne_embed(Xs, tsne_params(cfg, len(Xs)), labels)
            else:
                emb = umap_embed(Xs, umap_params(cfg, len(Xs)), labels)
            csv_path = out_dir / f"embedding_{method}.csv"
            svg_path = out_dir / "plots" / f"embedding_{method}.svg"
            emb.write_csv(csv_path)
            plot_embedding(emb, svg_path)
            files += [csv_path.name, f"plots/{svg_path.name}"]
            summary[method] = {"points": len(labels), "dim": dim}
            if emb.trace:
                summary[method]["final_kl"] = emb.trace[-1][1]
    report = {"source": source, "dropped_columns": dropped, "methods": summary,
              "files": files, "timings": timer.timings}
    dump_json(report, out_dir / "embed_report.json")
    return report


# ---------------------------------------------------------------------------
# run


def _prepare_features(plan: PreprocessPlan, pca: PcaModel, selected: list[str], ds: Dataset):
    X = apply_preprocess(plan, ds).select(selected)
    return pca_transform(pca, X)


def cmd_run(cfg: PipelineConfig, out_dir: Path) -> dict:
    """Full pipeline: split, preprocess, rank, select, PCA, balance, train, evaluate."""
    from . import plotting

    timer = StageTimer()
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: list[str] = []
    report: dict = {"nidspipe_version": __version__, "config": cfg.data, "status": "running"}
    tax = taxonomy(cfg)
    try:
        with timer.stage("load"):
            ds, source = load_input(cfg)
            report["source"] = source
            report["class_counts"] = class_counts(ds.labels, tax)
        with timer.stage("split"):
            train_ds, test_ds = stratified_split(ds, float(cfg["split"]["test_fraction"]),
                                                 cfg.stage_seed("split"))
            test_print = dataset_fingerprint(test_ds)
            write_csv(test_ds, out_dir / "splits" / "test.csv")
            artifacts.append("splits/test.csv")
            report["split"] = {"train_rows": train_ds.n_rows, "test_rows": test_ds.n_rows,
                               "train_class_counts": class_counts(train_ds.labels, tax),
                               "test_class_counts": class_counts(test_ds.labels, tax)}
        with timer.stage("preprocess"):
            reduced, dropped = drop_redundant(train_ds)
            plan = fit_preprocess(reduced, float(cfg["preprocess"]["skew_threshold"]), dropped)
            X_train = apply_preprocess(plan, train_ds)
            plan.save(out_dir / "preprocess_plan.json")
            artifacts.append("preprocess_plan.json")
            report["preprocess"] = {"dropped_columns": dropped,
                                    "log_columns": list(plan.log_columns),
                                    "n_output_features": plan.n_features}
        y_traffic = encode_labels(train_ds.labels, tax)
        y_binary = binarize_labels(train_ds.labels, tax)
        with timer.stage("rank_features"):
            mi_target = y_traffic if cfg["dimred"]["mi_target"] == "traffic_type" else y_binary
            ranked = rank_features(X_train, mi_target, cfg["dimred"]["mi_bins"])
            ranked.save(out_dir / "ranked_features.json")
            artifacts.append("ranked_features.json")
            n_top = min(cfg["dimred"]["n_top_features"], X_train.shape[1])
            selected = ranked.top(n_top)
            report["ranked_features"] = ranked.to_dict()
            report["selected_features"] = selected
        with timer.stage("pca"):
            Xs = X_train.select(selected)
            k = min(cfg["dimred"]["n_components"], len(selected), Xs.shape[0] - 1)
            pca = pca_fit(Xs, k)
            pca.save(out_dir / "pca_model.json")
            artifacts.append("pca_model.json")
            P_train = pca_transform(pca, Xs)
            ratios = pca.explained_variance_ratio.tolist()
            report["pca"] = {"n_components": k,
                             "explained_variance_ratio": ratios,
                             "cumulative": float(np.sum(ratios))}
        with timer.stage("balance"):
            bal = cfg["balance"]
            target = y_traffic if bal["target"] == "traffic_type" else y_binary
            Xb, yb, bal_report = balance(P_train, target, bal["method"], bal["k_neighbors"],
                                         cfg.stage_seed("balance"))
            if bal["target"] == "traffic_type":
                yb_binary = (yb != tax.index(tax.benign)).astype(np.int64)
                per_class = {tax.classes[int(c)]: v for c, v in bal_report.per_class.items()}
            else:
                yb_binary = yb
                per_class = {("malicious" if int(c) else "benign"): v
                             for c, v in bal_report.per_class.items()}
            report["balance"] = bal_report.to_dict() | {"per_class": per_class,
                                                        "target": bal["target"],
                                                        "rows_after": int(len(yb))}
        with timer.stage("transform_test"):
            P_test = _prepare_features(plan, pca, selected, test_ds)
            y_test = binarize_labels(test_ds.labels, tax)
        metrics, curves, aucs = {}, {}, {}
        for variant in cfg["classifiers"]["names"]:
            with timer.stage(f"train_{variant}"):
                hp = cfg.hyperparams(variant)
                model = train(variant, Xb, yb_binary, hp, cfg.stage_seed(f"model_{variant}"))
                model.save(out_dir / "models" / f"{variant}.json")
                artifacts.append(f"models/{variant}.json")
            with timer.stage(f"evaluate_{variant}"):
                pred = model.predict(P_test)
                scores = model.predict_score(P_test)
                m = metrics_summary(pred, y_test, scores)
                m["hyperparams"] = hp
                metrics[variant] = m
                curve = roc_curve(scores, y_test)
                (out_dir / "roc").mkdir(exist_ok=True)
                curve.write_csv(out_dir / "roc" / f"{variant}.csv")
                artifacts.append(f"roc/{variant}.csv")
                curves[SHORT_NAMES[variant]] = curve
                aucs[SHORT_NAMES[variant]] = m["auc"]
        report["metrics"] = metrics
        with timer.stage("plots"):
            plots = out_dir / "plots"
            plotting.plot_roc(curves, aucs, plots / "roc_all.svg")
            for variant in metrics:
                short = SHORT_NAMES[variant]
                plotting.plot_roc({short: curves[short]}, {short: aucs[short]},
                                  plots / f"roc_{variant}.svg", title=f"ROC curve of {short}")
            plotting.plot_feature_ranking(ranked, plots / "mi_ranking.svg", len(selected))
            plotting.plot_explained_variance(ratios, plots / "explained_variance.svg")
            plotting.plot_class_distribution(report["class_counts"],
                                             plots / "class_distribution.svg")
            plotting.plot_metrics({SHORT_NAMES[v]: m for v, m in metrics.items()},
                                  plots / "metrics.svg")
            artifacts += ["plots/roc_all.svg"] + [f"plots/roc_{v}.svg" for v in metrics] + [
                "plots/mi_ranking.svg", "plots/explained_variance.svg",
                "plots/class_distribution.svg", "plots/metrics.svg"]
            write_metrics_table(metrics, out_dir / "metrics_table.csv")
            artifacts.append("metrics_table.csv")
        after = dataset_fingerprint(test_ds)
        report["test_hygiene"] = {"fingerprint": test_print, "unchanged": after == test_print}
        if after != test_print:
            raise StageError("hygiene", DataError("test partition changed during the run"))
        report["status"] = "ok"
    except StageError as exc:
        report["status"] = "failed"
        report["failure"] = {"stage": exc.stage, "error": str(exc.cause)}
        report["artifacts"] = _manifest(out_dir, artifacts, partial=True)
        report["timings"] = timer.timings
        dump_json(report, out_dir / "run_report.partial.json")
        raise
    report["artifacts"] = _manifest(out_dir, artifacts)
    report["timings"] = timer.timings
    dump_json(report, out_dir / REPORT_NAME)
    return report


def _manifest(out_dir: Path, files: list[str], partial: bool = False) -> list[dict]:
    out = []
    for rel in files:
        path = out_dir / rel
        entry = {"path": rel, "exists": path.exists()}
        if path.exists() and not rel.endswith(".svg"):
            entry["sha256"] = file_sha256(path)
        if partial:
            entry["partial"] = True
        out.append(entry)
    return out


TABLE_ROWS = (("accuracy", "Accuracy"), ("detection_rate", "Detection Rate"),
              ("false_positive_rate", "False Positive Rate"), ("auc", "AUC"))


def _ordered(metrics: dict) -> list[str]:
    return [v for v in VARIANTS if v in metrics] + [v for v in metrics if v not in VARIANTS]


def write_metrics_table(metrics: dict, path) -> None:
    """Delimited Table-4 layout: one row per metric, one column per classifier, percent."""
    names = _ordered(metrics)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric"] + [SHORT_NAMES.get(n, n) for n in names])
        for key, label in TABLE_ROWS:
            w.writerow([label] + [f"{100 * metrics[n][key]:.3f}" for n in names])


def format_metrics_table(metrics: dict) -> str:
    names = _ordered(metrics)
    heads = [SHORT_NAMES.get(n, n) for n in names]
    width = max(len(lab) for _, lab in TABLE_ROWS)
    lines = ["Evaluation metrics (binary classification, percent)",
             " ".join([" " * width] + [f"{h:>9}" for h in heads])]
    for key, label in TABLE_ROWS:
        vals = [f"{100 * metrics[n][key]:9.3f}" for n in names]
        lines.append(" ".join([f"{label:<{width}}"] + vals))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# evaluate / report


def cmd_evaluate(run_dir: Path, model_paths: list[Path] | None = None,
                 data_path: Path | None = None, taxonomy_cfg: dict | None = None) -> dict:
    """Score saved models on a CSV using the run's saved preprocessing artifacts."""
    run_dir = Path(run_dir)
    plan = PreprocessPlan.load(run_dir / "preprocess_plan.json")
    pca = PcaModel.load(run_dir / "pca_model.json")
    selected = list(pca.input_features)
    report_path = run_dir / REPORT_NAME
    cfg_data = json.loads(report_path.read_text())["config"] if report_path.exists() else None
    tax_cfg = taxonomy_cfg or (cfg_data or {}).get("taxonomy")
    tax = LabelTaxonomy(tuple(tax_cfg["classes"]), tax_cfg["benign"]) if tax_cfg else LabelTaxonomy()
    data_path = Path(data_path or run_dir / "splits" / "test.csv")
    label_col = (cfg_data or {}).get("input", {}).get("label_column", "Label")
    ds = load_csv(data_path, infer_schema(data_path, label_col))
    if ds.n_rows == 0:
        raise DataError("empty test set")
    P = _prepare_features(plan, pca, selected, ds)
    y = binarize_labels(ds.labels, tax)
    if model_paths is None:
        model_paths = sorted((run_dir / "models").glob("*.json"))
    results = {}
    for path in model_paths:
        model = load_model(path, expected_features=P.shape[1])
        pred = model.predict(P)
        results[model.variant] = metrics_summary(pred, y, model.predict_score(P))
        results[model.variant]["hyperparams"] = model.hyperparams
    return {"data": str(data_path), "rows": ds.n_rows, "metrics": results}


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in TIMING_FIELDS}


def cmd_report(path: Path, out_dir: Path | None = None) -> str:
    from .plotting import plot_metrics

    path = Path(path)
    if path.is_dir():
        path = path / REPORT_NAME
    report = json.loads(path.read_text())
    metrics = report.get("metrics") or {}
    lines = [f"status: {report.get('status')}"]
    if "pca" in report:
        lines.append("PCA explained variance ratio:")
        for i, r in enumerate(report["pca"]["explained_variance_ratio"], 1):
            lines.append(f"  component {i:2d}  {r:.8f}")
        lines.append(f"  total         {report['pca']['cumulative']:.8f}")
    if "balance" in report:
        lines.append(f"balance: {report['balance']['method']} "
                     f"({report['balance']['rows_after']} training rows)")
    if metrics:
        lines.append(format_metrics_table(metrics))
        target = Path(out_dir) if out_dir else path.parent
        write_metrics_table(metrics, target / "metrics_table.csv")
        plot_metrics({SHORT_NAMES.get(v, v): metrics[v] for v in _ordered(metrics)},
                     target / "plots" / "metrics.svg")
    return "\n".join(lines)
