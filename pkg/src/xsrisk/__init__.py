"""Generalized-divergence bounds on the excess minimum risk of Markov chains Y -> X -> Z."""

__version__ = "0.1.0"
