"""Exact computation of saturated log de Rham-Witt complexes of semistable
monomial charts in characteristic p, together with the Koszul-model
comparison machinery, all over truncated coefficient rings Z/p^N."""

__version__ = "0.1.0"
