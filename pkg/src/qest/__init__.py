"""Quantum parameter-estimation limits: operator seminorms, displacement
generators, Fisher information, and parity-readout Monte Carlo."""
__version__ = "0.1.0"
