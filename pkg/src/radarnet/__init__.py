"""Stochastic-geometry model of automotive radar networks on random street layouts."""

__version__ = "0.1.0"
