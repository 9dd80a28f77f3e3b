import numpy as np
import pytest

from nidspipe.data_model import CATEGORICAL, LABEL, NUMERIC, ColumnSchema, Dataset


def make_dataset(numeric=None, categorical=None, labels=None, label_name="Label"):
    """Build a Dataset from dicts of column name -> values."""
    numeric = numeric or {}
    categorical = categorical or {}
    schema = [ColumnSchema(n, NUMERIC) for n in numeric]
    schema += [ColumnSchema(n, CATEGORICAL) for n in categorical]
    schema.append(ColumnSchema(label_name, LABEL, nullable=False))
    cols = {**numeric, **categorical, label_name: labels}
    return Dataset(schema, cols)


def two_blobs(n_per=20, dim=5, gap=4.0, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n_per, dim))
    b = rng.standard_normal((n_per, dim))
    b[:, 0] += gap * np.sqrt(dim)  # centroid gap well beyond 4 sigma
    X = np.vstack([a, b])
    y = np.array([0] * n_per + [1] * n_per)
    return X, y


def separation_ratio(coords, y):
    """Centroid distance between the two groups over the mean within-group pairwise distance."""
    groups = [coords[y == c] for c in np.unique(y)]
    between = np.linalg.norm(groups[0].mean(axis=0) - groups[1].mean(axis=0))
    within = []
    for g in groups:
        d = np.linalg.norm(g[:, None] - g[None, :], axis=2)
        within.append(d[np.triu_indices(len(g), 1)].mean())
    return between / np.mean(within)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance criteria log, printed as one line per criterion after the run.
ACCEPTANCE: list[tuple[str, str, str]] = []


def record(criterion: str, ok: bool | None, detail: str) -> bool | None:
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    ACCEPTANCE.append((criterion, status, detail))
    print(f"{status} criterion {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in sorted(ACCEPTANCE, key=lambda e: int(e[0])):
        terminalreporter.write_line(f"{status} criterion {criterion}: {detail}")
