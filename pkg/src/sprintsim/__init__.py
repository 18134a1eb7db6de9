"""Single-photon Raman interaction in a resonator-coupled multilevel atom."""

__version__ = "0.1.0"
