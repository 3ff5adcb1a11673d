"""Faster-than-Nyquist signalling toolkit."""
__version__ = "0.1.0"
