"""Simulation and verification of hybrid measurement/exchange gates on
singlet-triplet double-quantum-dot qubits."""

__version__ = "0.1.0"
