"""Anomaly detection pipeline for network flow records.

Preprocessing, mutual-information feature ranking, PCA, class rebalancing,
six from-scratch classifiers and embedding diagnostics (PCA, t-SNE, UMAP).
"""

__version__ = "0.1.0"
