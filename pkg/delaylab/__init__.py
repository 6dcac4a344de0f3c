"""
delaylab - numerical laboratory for the delay difference equation

    x_{n+1} = A + B * x_{n-m} / x_n**2

and its normalized form y_{n+1} = 1 + p * y_{n-m} / y_n**2 with p = B / A**2.

This package provides simulation, linearization, theorem-facing analyses and
parameter sweeps, plus a command line front end that writes CSV and JSON reports.
"""

__version__ = "1.0.0"
