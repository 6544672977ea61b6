"""Attention-based sentence-pair interaction model for question relatedness."""

__version__ = "0.1.0"
