"""Low-dimensional embedding container and CSV export."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError

METHODS = ("pca", "tsne", "umap")


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    labels: tuple
    method: str
    params: dict = field(default_factory=dict)
    trace: tuple = ()

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] not in (2, 3):
            raise DataError(f"embedding must be n x 2 or n x 3, got {coords.shape}")
        if not np.isfinite(coords).all():
            raise DataError("embedding coordinates are not finite")
        if len(self.labels) != coords.shape[0]:
            raise DataError("label count does not match embedded rows")
        if self.method not in METHODS:
            raise DataError(f"unknown embedding method {self.method!r}")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def write_csv(self, path) -> None:
        axes = ["x", "y", "z"][: self.dim]
        with open(Path(path), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(axes + ["label", "method"])
            for row, lab in zip(self.coords, self.labels):
                w.writerow([repr(float(v)) for v in row] + [lab, self.method])
