import pytest
import yaml

from nidspipe.cli import main
from nidspipe.config import CONFIG_TEMPLATE, DEFAULTS, PipelineConfig, derive_seed
from nidspipe.errors import ConfigError


def test_template_documents_every_default(tmp_path, capsys):
    assert main(["--init-config"]) == 0
    assert capsys.readouterr().out == CONFIG_TEMPLATE
    path = tmp_path / "c.yaml"
    assert main(["--init-config", str(path)]) == 0
    assert yaml.safe_load(path.read_text()) == DEFAULTS
    assert PipelineConfig.load(path).data == PipelineConfig.from_dict().data


def test_published_pipeline_defaults():
    assert DEFAULTS["dimred"]["n_top_features"] == 22
    assert DEFAULTS["dimred"]["n_components"] == 11
    assert DEFAULTS["balance"]["method"] == "smote" and DEFAULTS["balance"]["k_neighbors"] == 5
    assert len(DEFAULTS["classifiers"]["names"]) == 6


@pytest.mark.parametrize("override,match", [
    ({"bogus": 1}, "unknown config key"),
    ({"split": {"nope": 1}}, "split.nope"),
    ({"split": {"test_fraction": 1.5}}, "test_fraction"),
    ({"seed": -1}, "seed"),
    ({"seed": 2**64}, "seed"),
    ({"balance": {"apply_to": "test"}}, "apply_to"),
    ({"balance": {"method": "adasyn"}}, "balance.method"),
    ({"classifiers": {"names": ["xgboost"]}}, "xgboost"),
    ({"classifiers": {"hyperparams": {"knn": {"k": 0}}}}, "knn"),
    ({"embed": {"dim": 4}}, "dim"),
    ({"input": {"csv": "/no/such/file.csv"}}, "not found"),
    ({"dimred": {"mi_target": "other"}}, "mi_target"),
])
def test_invalid_configs(override, match):
    with pytest.raises(ConfigError, match=match):
        PipelineConfig.from_dict(override)


def test_yaml_errors(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("seed: [unclosed\n")
    with pytest.raises(ConfigError):
        PipelineConfig.load(path)
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        PipelineConfig.load(path)
    with pytest.raises(ConfigError):
        PipelineConfig.load(tmp_path / "missing.yaml")


def test_overrides_and_paths(tmp_path):
    csv = tmp_path / "d.csv"
    csv.write_text("a,Label\n1,Benign\n")
    path = tmp_path / "c.yaml"
    path.write_text("input:\n  csv: d.csv\nseed: 3\n")
    cfg = PipelineConfig.load(path, seed=9, out=str(tmp_path / "o"))
    assert cfg.seed == 9
    assert cfg.resolve_path(cfg["input"]["csv"]) == csv
    assert cfg.output_dir == tmp_path / "o"
    assert cfg.hyperparams("knn") == {"k": 5}


def test_stage_seeds():
    assert derive_seed(0, "split") == derive_seed(0, "split")
    assert derive_seed(0, "split") != derive_seed(1, "split")
    assert derive_seed(0, "split") != derive_seed(0, "balance")
    assert 0 <= derive_seed(2**64 - 1, "x") < 2**63
