"""themeforge: transcript topic extraction, clustering, curation, analytics."""

__version__ = "0.1.0"
