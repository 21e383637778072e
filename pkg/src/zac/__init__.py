"""Static analysis, product-line metrics and visualisation for C++ source trees."""

__version__ = "0.1.0"
