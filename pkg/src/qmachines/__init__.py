"""Quantum heat machines fuelled by non-thermal baths: open-system dynamics, ergotropy
bookkeeping, entropy bounds, engine cycles and a pumped-piston engine."""

from . import catalysis, cycles, entropy_bounds, gaussian, lindblad, passivity, quantum_core

__all__ = ["catalysis", "cycles", "entropy_bounds", "gaussian", "lindblad", "passivity", "quantum_core"]
