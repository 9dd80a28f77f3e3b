"""Feature ranking, PCA and 2-D/3-D embeddings."""

from .embedding import Embedding
from .mutual_info import RankedFeatures, equal_frequency_bins, mutual_information, rank_features
from .pca import PcaModel, pca_fit, pca_inverse, pca_transform
from .tsne import TsneParams, tsne_embed
from .umap import UmapParams, umap_embed

__all__ = [
    "Embedding", "RankedFeatures", "equal_frequency_bins", "mutual_information",
    "rank_features", "PcaModel", "pca_fit", "pca_inverse", "pca_transform",
    "TsneParams", "tsne_embed", "UmapParams", "umap_embed",
]
