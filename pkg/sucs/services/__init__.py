"""Numerical services: algebra, coherent states, dynamics, propagator, lattice."""
