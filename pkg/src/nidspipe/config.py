"""Pipeline configuration: YAML template, defaults, validation and seed derivation."""

from __future__ import annotations

import copy
import hashlib
from pathlib import Path

import yaml

from .classify.base import VARIANTS, resolve_hyperparams
from .errors import ConfigError

CONFIG_TEMPLATE = """\
# nidspipe pipeline configuration. Every key below shows its default.

# Master seed; every stage seed is derived from it. Overridden by --seed.
seed: 0

input:
  # Path to a flow-record CSV (header row required). When null, the
  # synthetic replica below is generated instead.
  csv: null
  # Column holding the traffic-type label.
  label_column: Label
  # Columns removed before any processing (e.g. leakage or bookkeeping columns).
  exclude_columns: []
  # Stratified row cap applied right after loading; null keeps every row.
  max_rows: null
  synthetic:
    # Optional path to an explicit mixture spec (YAML/JSON). When null the
    # replica parameters below are used.
    spec_file: null
    total: 20000            # rows; class shares follow the 5G-NIDD traffic types
    n_numeric: 24           # numeric feature columns
    separation: 4.0         # class-mean offset in per-feature standard deviations
    missing_fraction: 0.005 # share of numeric cells blanked out

taxonomy:
  classes: [Benign, UDPFlood, HTTPFlood, SlowrateDos, TCPConnectScan, SYNScan, UDPScan, SYNFlood, ICMPFlood]
  benign: Benign

split:
  test_fraction: 0.2

preprocess:
  skew_threshold: 1.0       # |skewness| above this triggers ln(1 + x - min)

dimred:
  mi_bins: 10               # equal-frequency bins for the MI estimate
  mi_target: traffic_type   # traffic_type | binary
  n_top_features: 22        # capped at the available feature count
  n_components: 11          # capped at the selected feature count

embed:
  methods: [pca, tsne, umap]
  dim: 2                    # 2 or 3
  row_cap: 2000             # stratified subsample size for embeddings
  classes: []               # restrict to these classes; empty keeps all
  tsne:
    perplexity: 30.0
    iterations: 1000
    early_exaggeration: 12.0
    exaggeration_iters: 250
    learning_rate: 200.0
    momentum_initial: 0.5
    momentum_final: 0.8
    momentum_switch: 250
  umap:
    n_neighbors: 15
    min_dist: 0.1
    epochs: 200
    negative_sample_rate: 5

balance:
  method: smote             # smote | random_oversample | none
  k_neighbors: 5
  target: traffic_type      # traffic_type | binary: class labels being equalized
  apply_to: train           # only the training partition may be balanced

classifiers:
  names: [decision_tree, random_forest, knn, gaussian_nb, mlp, linear_svc]
  # Per-classifier overrides, e.g. {knn: {k: 7}}.
  hyperparams: {}

output:
  dir: out
"""

DEFAULTS = yaml.safe_load(CONFIG_TEMPLATE)

TSNE_KEYS = set(DEFAULTS["embed"]["tsne"])
UMAP_KEYS = set(DEFAULTS["embed"]["umap"])


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        path = f"{where}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(base[key], dict) and key != "hyperparams":
            if not isinstance(value, dict):
                raise ConfigError(f"config key {path!r} must be a mapping")
            out[key] = _merge(base[key], value, path + ".")
        else:
            out[key] = value
    return out


def derive_seed(seed: int, stage: str) -> int:
    """Stable 63-bit seed for a named stage."""
    digest = hashlib.sha256(f"{int(seed)}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


class PipelineConfig:
    """Validated configuration; ``data`` is the full merged mapping."""

    def __init__(self, data: dict, base_dir: Path | None = None):
        self.data = data
        self.base_dir = Path(base_dir or ".")
        self.validate()

    @classmethod
    def from_dict(cls, overrides: dict | None = None, base_dir=None) -> "PipelineConfig":
        return cls(_merge(DEFAULTS, overrides or {}), base_dir)

    @classmethod
    def load(cls, path, seed: int | None = None, out: str | None = None) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        data = _merge(DEFAULTS, raw)
        if seed is not None:
            data["seed"] = seed
        if out is not None:
            data["output"]["dir"] = out
        return cls(data, path.parent)

    def __getitem__(self, key):
        return self.data[key]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def resolve_path(self, p) -> Path | None:
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else (self.base_dir / p)

    @property
    def output_dir(self) -> Path:
        return Path(self.data["output"]["dir"])

    def validate(self) -> None:
        d = self.data
        seed = d["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not (0 <= seed < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        inp = d["input"]
        if inp["csv"] is not None and not self.resolve_path(inp["csv"]).is_file():
            raise ConfigError(f"input csv not found: {inp['csv']}")
        spec_file = inp["synthetic"]["spec_file"]
        if spec_file is not None and not self.resolve_path(spec_file).is_file():
            raise ConfigError(f"synthetic spec file not found: {spec_file}")
        if inp["max_rows"] is not None and (not isinstance(inp["max_rows"], int) or inp["max_rows"] < 2):
            raise ConfigError("input.max_rows must be null or an integer >= 2")
        syn = inp["synthetic"]
        if not isinstance(syn["total"], int) or syn["total"] < 1:
            raise ConfigError("input.synthetic.total must be a positive integer")
        if not isinstance(syn["n_numeric"], int) or syn["n_numeric"] < 1:
            raise ConfigError("input.synthetic.n_numeric must be a positive integer")
        tax = d["taxonomy"]
        if not tax["classes"] or tax["benign"] not in tax["classes"]:
            raise ConfigError("taxonomy.benign must be one of taxonomy.classes")
        if not (0.0 < float(d["split"]["test_fraction"]) < 1.0):
            raise ConfigError("split.test_fraction must lie in (0, 1)")
        dr = d["dimred"]
        if dr["mi_target"] not in ("traffic_type", "binary"):
            raise ConfigError("dimred.mi_target must be traffic_type or binary")
        for key in ("mi_bins", "n_top_features", "n_components"):
            if not isinstance(dr[key], int) or dr[key] < (2 if key == "mi_bins" else 1):
                raise ConfigError(f"dimred.{key} has an invalid value {dr[key]!r}")
        emb = d["embed"]
        bad = set(emb["methods"]) - {"pca", "tsne", "umap"}
        if bad:
            raise ConfigError(f"embed.methods: unknown methods {sorted(bad)}")
        if emb["dim"] not in (2, 3):
            raise ConfigError("embed.dim must be 2 or 3")
        if not isinstance(emb["row_cap"], int) or emb["row_cap"] < 10:
            raise ConfigError("embed.row_cap must be an integer >= 10")
        bal = d["balance"]
        if bal["method"] not in ("smote", "random_oversample", "none"):
            raise ConfigError(f"balance.method: unknown method {bal['method']!r}")
        if bal["target"] not in ("traffic_type", "binary"):
            raise ConfigError("balance.target must be traffic_type or binary")
        if bal["apply_to"] != "train":
            raise ConfigError("balance.apply_to must be 'train'; the test partition is never balanced")
        if not isinstance(bal["k_neighbors"], int) or bal["k_neighbors"] < 1:
            raise ConfigError("balance.k_neighbors must be a positive integer")
        names = d["classifiers"]["names"]
        if not names:
            raise ConfigError("classifiers.names must list at least one classifier")
        for name in names:
            if name not in VARIANTS:
                raise ConfigError(f"unknown classifier {name!r}; choose from {list(VARIANTS)}")
        hps = d["classifiers"]["hyperparams"] or {}
        for name, hp in hps.items():
            resolve_hyperparams(name, hp)

    def hyperparams(self, variant: str) -> dict:
        return resolve_hyperparams(variant, (self.data["classifiers"]["hyperparams"] or {}).get(variant))

