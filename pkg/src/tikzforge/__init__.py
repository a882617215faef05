"""tikzforge: data-engine toolkit for TikZ diagram corpora."""

__version__ = "0.1.0"
