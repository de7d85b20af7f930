"""Alternating primal/dual LMI synthesis for static and robust output feedback."""

__version__ = "0.1.0"
