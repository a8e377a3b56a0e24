"""Hot-kernel backend selection.

Imports the compiled extension when present, otherwise the numpy fallback.
Set REFINE_FORCE_FALLBACK=1 to skip the extension (used by the benchmark
and the cross-backend tests).
"""
from __future__ import annotations

import os

if os.environ.get("REFINE_FORCE_FALLBACK"):
    from ._fallback import knn_from_table, pairwise_euclidean, uncertainty_from_table

    BACKEND = "fallback"
else:
    try:
        from ._native import knn_from_table, pairwise_euclidean, uncertainty_from_table

        BACKEND = "native"
    except ImportError:
        from ._fallback import knn_from_table, pairwise_euclidean, uncertainty_from_table

        BACKEND = "fallback"


def backend_name() -> str:
    return BACKEND


__all__ = [
    "BACKEND",
    "backend_name",
    "knn_from_table",
    "pairwise_euclidean",
    "uncertainty_from_table",
]
