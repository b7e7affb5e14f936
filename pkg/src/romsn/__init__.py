"""Discrete ordinate (DOM) and random ordinate (ROM) solvers for steady radiative transport."""

__version__ = "0.1.0"
