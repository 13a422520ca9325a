"""Exception types shared across the package."""


class TopicVecError(Exception):
    """Base class for all topicvec errors."""


class CorpusFormatError(TopicVecError):
    """A corpus, embeddings, or query file violates its documented format."""


class DimensionMismatchError(TopicVecError):
    """Vectors of incompatible dimensions were combined."""


class ZeroVectorError(TopicVecError):
    """A zero vector appeared where a direction is required."""


class IndexFormatError(TopicVecError):
    """A persisted index file is corrupt, truncated, or of an unknown version."""


class DegenerateClustersError(TopicVecError):
    """Cluster geometry makes the requested validity index undefined."""


class RemoteProviderError(TopicVecError):
    """The remote embedding endpoint failed or returned an invalid response."""
