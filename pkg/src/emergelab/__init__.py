"""Toolkit for algorithmic-information experiments on finite dynamical systems."""

__version__ = "0.1.0"
