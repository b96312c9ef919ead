"""Normalization workbench: weak lambda-calculus, orthogonal constructor
rewriting and term-graph reduction, instrumented with exact step counts."""

import sys as _sys

__version__ = "0.1.0"

# hot paths are iterative, but readback and printing still recurse over
# term depth, which benchmark-sized encodings can push past the default
if _sys.getrecursionlimit() < 10_000:
    _sys.setrecursionlimit(10_000)

from . import crs, encode, graphs, lam, scott, workbench  # noqa: F401
