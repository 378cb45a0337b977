"""bagql: three multiset query languages, six translations between them,
and a differential harness checking that the translations preserve answers
exactly, counts included."""

from .multiset import Multiset, coloring, uncoloring

__all__ = ["Multiset", "coloring", "uncoloring"]

__version__ = "0.1.0"
