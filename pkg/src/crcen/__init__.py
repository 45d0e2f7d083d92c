"""Class-wise reweighted cross-entropy networks for imbalanced binary data."""

__version__ = "0.1.0"
