"""Numerical toolkit for Brascamp-Lieb constants, their Gaussian extremizers and
quantitative stability of the associated inequalities."""

__version__ = "0.1.0"
