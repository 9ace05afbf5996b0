"""Separation of characters along sequences in abelian groups, and the
renorming and tree constructions behind the Jamison criterion."""

__version__ = "0.1.0"
