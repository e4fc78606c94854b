"""sucs: SU(n) coherent states, their classical dynamics and exact-oracle verification."""

__version__ = "1.0.0"
__author__ = "sucs Development Team"
