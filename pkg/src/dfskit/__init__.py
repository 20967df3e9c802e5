"""dfskit: dataset metafiles with checksum-chained integrity, versioned
citation, metadata-driven aggregation, and a local search/recommendation catalog."""

from dfskit.aggregation import AggregationConfig, AggregationReport, aggregate, metajoin
from dfskit.canonical import serialize_canonical
from dfskit.errors import (
    ClockError,
    CollisionError,
    DFSError,
    EmptyDatasetError,
    ImmutabilityError,
    IncompatibleDatasetsError,
    IntegrityError,
    MetafileSyntaxError,
    NoMatchError,
    NotFoundError,
    SchemaError,
    UnknownFileError,
    ValidationError,
)
from dfskit.graph import (
    FieldGraph,
    build_field_graph,
    field_overlap,
    graph_similarity,
    normalize_name,
)
from dfskit.integrity import (
    VersionBump,
    bump,
    cite,
    compute_file_checksum,
    compute_meta_checksum,
)
from dfskit.model import (
    Author,
    DataFileEntry,
    DatasetRef,
    FieldDef,
    FieldRef,
    Finding,
    Link,
    Measurement,
    MetaBlock,
    Metafile,
    parse_metafile,
)
from dfskit.validation import ValidationReport, generate_skeleton, validate

__version__ = "0.1.0"

__all__ = [
    "AggregationConfig",
    "AggregationReport",
    "Author",
    "ClockError",
    "CollisionError",
    "DFSError",
    "DataFileEntry",
    "DatasetRef",
    "EmptyDatasetError",
    "FieldDef",
    "FieldGraph",
    "FieldRef",
    "Finding",
    "ImmutabilityError",
    "IncompatibleDatasetsError",
    "IntegrityError",
    "Link",
    "Measurement",
    "MetaBlock",
    "Metafile",
    "MetafileSyntaxError",
    "NoMatchError",
    "NotFoundError",
    "SchemaError",
    "UnknownFileError",
    "ValidationError",
    "ValidationReport",
    "VersionBump",
    "aggregate",
    "build_field_graph",
    "bump",
    "cite",
    "compute_file_checksum",
    "compute_meta_checksum",
    "field_overlap",
    "generate_skeleton",
    "graph_similarity",
    "metajoin",
    "normalize_name",
    "parse_metafile",
    "serialize_canonical",
    "validate",
]
