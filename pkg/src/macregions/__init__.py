"""Rate-region toolkit for state-dependent cooperative multiple-access channels."""

__version__ = "0.1.0"
