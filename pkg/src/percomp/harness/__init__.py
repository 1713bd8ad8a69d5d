from .store import (  # noqa: F401
    AnnotationStore,
    ConflictError,
    NotInitializedError,
    PairSpec,
    PairTask,
    UnknownPairError,
    build_pairs,
)
