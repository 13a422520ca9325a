"""Topic-enhanced document embeddings, exact cosine retrieval, evaluation."""

from .corpus import (
    Chunk,
    ChunkingConfig,
    Document,
    chunk_document,
    corpus_stats,
    load_chunks,
    load_corpus,
    save_chunks,
    save_corpus,
)
from .embedding import (
    EmbeddingsFile,
    TfIdfModel,
    cosine_similarity,
    embed_tfidf,
    fit_tfidf,
    l2_normalize,
    load_embeddings_file,
    load_tfidf_model,
    save_embeddings_file,
    save_tfidf_model,
    tokenize,
)
from .errors import (
    CorpusFormatError,
    DegenerateClustersError,
    DimensionMismatchError,
    IndexFormatError,
    RemoteProviderError,
    TopicVecError,
    ZeroVectorError,
)
from .metrics import (
    ClusterEvalReport,
    LabeledPoints,
    calinski_harabasz,
    davies_bouldin,
    evaluate_clustering,
    mean_reciprocal_rank,
    recall_at_k,
    silhouette,
)
from .projection import PCAProjection, export_2d, pca_2d
from .remote import RemoteEmbeddingConfig, fetch_remote_embeddings
from .retrieval import (
    Hit,
    SearchResult,
    VectorIndex,
    build_index,
    load_index,
    save_index,
    search,
    two_stage_search,
)
from .synthetic import SyntheticConfig, generate_corpus
from .topics import (
    TopicEmbedding,
    TransformMethod,
    compute_topic_embeddings,
    compute_topic_embeddings_tfidf,
    transform_append,
    transform_average,
    transform_entries,
    transform_query,
)

__version__ = "0.1.0"
