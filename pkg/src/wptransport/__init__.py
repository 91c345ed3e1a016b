"""Wavepacket transport in disordered lattices and XXZ chains: exact simulation,
circuit synthesis on a single-excitation backend, and readout-error mitigation."""

__version__ = "0.1.0"
