"""Autocorrelation and coherence time of air-to-ground channels with a moving
base station, a moving user and a von Mises-Fisher scatterer field."""

__version__ = "0.1.0"
