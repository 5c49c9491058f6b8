"""Nonparametric choice modeling over rank lists: robust revenue bounds and sparse model recovery."""

__version__ = "0.1.0"
