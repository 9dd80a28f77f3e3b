import csv
import json

import pytest
import yaml

from nidspipe.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_STAGE, main
from nidspipe.pipeline import strip_timings

FAST_RUN = {
    "input": {"synthetic": {"total": 3000, "n_numeric": 12}},
    "classifiers": {"hyperparams": {"random_forest": {"n_trees": 5},
                                    "mlp": {"epochs": 3}, "linear_svc": {"epochs": 3}}},
    "embed": {"row_cap": 300, "tsne": {"iterations": 260}, "umap": {"epochs": 30}},
}


def write_config(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = write_config(tmp, FAST_RUN)
    assert main(["run", "--config", str(cfg), "--out", str(tmp / "out")]) == EXIT_OK
    return tmp / "out"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# -- generate ---------------------------------------------------------------


def test_generate_shares_and_determinism(tmp_path):
    assert main(["generate", "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["generate", "--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "synthetic.csv").read_bytes()
    assert a == (tmp_path / "b" / "synthetic.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "synthetic.csv")
    labels = [r["Label"] for r in rows]
    assert abs(labels.count("UDPFlood") / (len(labels) - labels.count("Benign")) - 0.61957) < 0.001
    assert (tmp_path / "a" / "plots" / "class_distribution.svg").exists()


def test_generate_from_spec_file_with_zero_class(tmp_path):
    spec = {"numeric_features": ["f0"], "seed": 1,
            "classes": [{"name": "Benign", "count": 20, "means": [0.0], "stds": [1.0]},
                        {"name": "SYNScan", "count": 0, "means": [5.0], "stds": [1.0]}]}
    (tmp_path / "spec.yaml").write_text(yaml.safe_dump(spec))
    cfg = write_config(tmp_path, {"input": {"synthetic": {"spec_file": "spec.yaml"}}})
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    labels = {r["Label"] for r in read_csv(tmp_path / "o" / "synthetic.csv")}
    assert labels == {"Benign"}


# -- embed ------------------------------------------------------------------


def test_embed_pca_cap_and_colors(tmp_path):
    cfg = write_config(tmp_path, {"input": {"synthetic": {"total": 10000, "n_numeric": 8}},
                                  "embed": {"methods": ["pca"], "row_cap": 500}})
    assert main(["embed", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    rows = read_csv(tmp_path / "o" / "embedding_pca.csv")
    assert len(rows) == 500
    assert list(rows[0]) == ["x", "y", "label", "method"]
    counts = {}
    for r in rows:
        counts[r["label"]] = counts.get(r["label"], 0) + 1
    assert abs(counts["Benign"] - 500 * 0.39291) <= 1
    svg = (tmp_path / "o" / "plots" / "embedding_pca.svg").read_text()
    for name in counts:
        assert f"{name} ({counts[name]})" in svg
    tab10 = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
             "#7f7f7f", "#bcbd22"]
    assert all(color in svg for color in tab10[:len(counts)])


def test_embed_three_dimensional(tmp_path):
    cfg = write_config(tmp_path, {**FAST_RUN, "embed": {**FAST_RUN["embed"], "dim": 3,
                                                        "methods": ["pca", "tsne", "umap"]}})
    assert main(["embed", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    for method in ("pca", "tsne", "umap"):
        rows = read_csv(tmp_path / "o" / f"embedding_{method}.csv")
        assert list(rows[0]) == ["x", "y", "z", "label", "method"]
        assert len(rows) == 300
        assert "axes 1-2 shown" in (tmp_path / "o" / "plots" / f"embedding_{method}.svg").read_text()


def test_embed_class_filter_and_empty_methods(tmp_path):
    cfg = write_config(tmp_path, {**FAST_RUN, "embed": {**FAST_RUN["embed"], "methods": ["pca"],
                                                        "classes": ["SYNScan", "UDPScan"]}})
    assert main(["embed", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    labels = {r["label"] for r in read_csv(tmp_path / "o" / "embedding_pca.csv")}
    assert labels == {"SYNScan", "UDPScan"}
    cfg = write_config(tmp_path, {"embed": {"methods": []}}, "empty.yaml")
    assert main(["embed", "--config", str(cfg), "--out", str(tmp_path / "p")]) == EXIT_CONFIG


# -- run --------------------------------------------------------------------


def test_run_report_contents(run_dir):
    report = json.loads((run_dir / "run_report.json").read_text())
    assert report["status"] == "ok"
    assert set(report["metrics"]) == {"decision_tree", "random_forest", "knn", "gaussian_nb",
                                      "mlp", "linear_svc"}
    for m in report["metrics"].values():
        assert {"accuracy", "detection_rate", "false_positive_rate", "auc"} <= set(m)
    assert len(report["pca"]["explained_variance_ratio"]) == 11
    assert len(report["selected_features"]) == min(22, report["preprocess"]["n_output_features"])
    assert report["test_hygiene"]["unchanged"] is True
    counts = report["balance"]["per_class"]
    assert len({v["after"] for v in counts.values()}) == 1
    for entry in report["artifacts"]:
        assert entry["exists"], entry["path"]
    assert (run_dir / "plots" / "roc_knn.svg").exists()
    table = read_csv(run_dir / "metrics_table.csv")
    assert [r["metric"] for r in table] == ["Accuracy", "Detection Rate",
                                            "False Positive Rate", "AUC"]
    assert list(table[0])[1:] == ["DT", "RF", "KNN", "GNB", "MLP", "SVC"]


def test_test_split_untouched_by_balancing(run_dir):
    report = json.loads((run_dir / "run_report.json").read_text())
    rows = read_csv(run_dir / "splits" / "test.csv")
    labels = [r["Label"] for r in rows]
    for name, n in report["split"]["test_class_counts"].items():
        assert labels.count(name) == n


def test_evaluate_matches_run(run_dir, tmp_path):
    report = json.loads((run_dir / "run_report.json").read_text())
    assert main(["evaluate", "--out", str(run_dir),
                 "--models", str(run_dir / "models" / "knn.json")]) == EXIT_OK
    got = json.loads((run_dir / "evaluate_metrics.json").read_text())["metrics"]["knn"]
    for key in ("accuracy", "detection_rate", "false_positive_rate", "auc", "confusion"):
        assert got[key] == report["metrics"]["knn"][key]


def test_evaluate_corrupt_model(run_dir, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"format\": \"nidspipe-model\", \"version\": 7}")
    assert main(["evaluate", "--out", str(run_dir), "--models", str(bad)]) == EXIT_DATA
    assert "version" in capsys.readouterr().err


def test_evaluate_empty_test_set(run_dir, tmp_path):
    header = (run_dir / "splits" / "test.csv").read_text().splitlines()[0]
    empty = tmp_path / "empty.csv"
    empty.write_text(header + "\n")
    assert main(["evaluate", "--out", str(run_dir), "--data", str(empty)]) == EXIT_DATA


def test_report_command(run_dir, capsys):
    assert main(["report", str(run_dir)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Detection Rate" in out and "component 11" in out


def test_small_run_deterministic(tmp_path):
    cfg = write_config(tmp_path, {**FAST_RUN, "classifiers": {
        "names": ["knn", "decision_tree", "mlp"], "hyperparams": {"mlp": {"epochs": 2}}},
        "input": {"synthetic": {"total": 2500, "n_numeric": 10}}})
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    first = (out / "run_report.json").read_text()
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    second = (out / "run_report.json").read_text()
    a, b = json.loads(first), json.loads(second)
    assert json.dumps(strip_timings(a), sort_keys=True) == json.dumps(strip_timings(b), sort_keys=True)
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "1"]) == EXIT_OK
    reseeded = json.loads((out / "run_report.json").read_text())
    assert reseeded["config"]["seed"] == 1
    assert reseeded["split"] == a["split"] or reseeded["ranked_features"] != a["ranked_features"]


# -- exit codes -------------------------------------------------------------


def test_exit_config_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.yaml")]) == EXIT_CONFIG
    cfg = write_config(tmp_path, {"seed": "abc"})
    assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG


def test_exit_data_error(tmp_path):
    (tmp_path / "d.csv").write_text("a,b\n1,2\n")
    cfg = write_config(tmp_path, {"input": {"csv": "d.csv"}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_exit_stage_failure_and_partial_report(tmp_path, capsys):
    cfg = write_config(tmp_path, {**FAST_RUN, "classifiers": {
        "names": ["knn"], "hyperparams": {"knn": {"k": 10**7}}}})
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_STAGE
    assert "train_knn" in capsys.readouterr().err
    partial = json.loads((out / "run_report.partial.json").read_text())
    assert partial["status"] == "failed"
    assert partial["failure"]["stage"] == "train_knn"
    assert all(e["partial"] for e in partial["artifacts"])
    assert not (out / "run_report.json").exists()


def test_exit_data_error_on_unsplittable_class(tmp_path):
    rows = [f"{i},{i % 3},Benign" for i in range(8)] + ["9,1,UDPFlood", "10,2,SYNScan", "11,0,SYNScan"]
    (tmp_path / "d.csv").write_text("a,b,Label\n" + "\n".join(rows) + "\n")
    cfg = write_config(tmp_path, {"input": {"csv": "d.csv"}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_DATA
