"""Mining competing macro conventions from paper corpora."""

__version__ = "0.1.0"
