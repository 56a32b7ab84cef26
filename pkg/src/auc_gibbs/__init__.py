"""Gibbs posterior inference for the area under the ROC curve."""

__all__ = ["__version__"]

__version__ = "0.1.0"
