"""Fluxonium-resonator-fluxonium CZ gate design toolkit."""

__version__ = "0.1.0"
