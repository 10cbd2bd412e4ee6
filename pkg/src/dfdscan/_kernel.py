"""Scan kernel selection.

Prefers the compiled extension when it was built; DFDSCAN_PURE=1 forces the
pure-Python scanner.  Both implement the same contract, so everything above
this module is oblivious to the choice.
"""
from __future__ import annotations

import os

from . import _scan_py

if os.environ.get("DFDSCAN_PURE"):
    scan = _scan_py.scan
    BACKEND = "pure"
else:
    try:
        from . import _scan  # type: ignore[attr-defined]

        scan = _scan.scan
        BACKEND = "compiled"
    except ImportError:
        scan = _scan_py.scan
        BACKEND = "pure"
