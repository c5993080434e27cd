"""Pseudo-label quality toolkit: scoring, filtering, and evaluation for ASR distillation data."""

__version__ = "0.1.0"
