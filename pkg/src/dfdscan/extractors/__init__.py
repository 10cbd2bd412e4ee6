"""Technology extractors, grouped into pipeline phases."""
from __future__ import annotations

from .base import (
    PHASES,
    Context,
    Extractor,
    REGISTRY,
    Report,
    ServiceRoot,
    default_extractors,
    register,
    run_pipeline,
    trace_from,
)

_LOADED = False


def _load_all() -> None:
    """Import every extractor module so registration side effects run."""
    global _LOADED
    if _LOADED:
        return
    import importlib

    for mod in ("workspace", "nodes", "flows", "annotations", "finalize"):
        importlib.import_module("." + mod, __name__)
    _LOADED = True


__all__ = [
    "PHASES",
    "Context",
    "Extractor",
    "REGISTRY",
    "Report",
    "ServiceRoot",
    "default_extractors",
    "register",
    "run_pipeline",
    "trace_from",
]
