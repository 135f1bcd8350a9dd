"""Numerical toolkit for Anosov-type representations, Hilbert geometry, cusp graphs and Pappus boxes."""

__version__ = "0.1.0"
