"""Random closed subsets of Cantor space under the (k, ell)-induced distribution."""

__version__ = "0.1.0"
