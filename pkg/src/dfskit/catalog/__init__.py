"""Local dataset catalog: versioned repository, TF-IDF index, interest profiles."""

from dfskit.catalog.index import (
    INDEX_FILE,
    TfIdfIndex,
    doc_vector,
    document_terms,
    index_build,
    search,
)
from dfskit.catalog.profile import (
    InterestProfile,
    load_profile,
    profile_update,
    recommend,
    save_profile,
)
from dfskit.catalog.repository import Repository

__all__ = [
    "INDEX_FILE",
    "InterestProfile",
    "Repository",
    "TfIdfIndex",
    "doc_vector",
    "document_terms",
    "index_build",
    "load_profile",
    "profile_update",
    "recommend",
    "save_profile",
    "search",
]
