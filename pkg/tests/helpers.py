"""Random inputs shared by the test modules."""

import numpy as np


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def random_psi(rng, n, scale=0.5):
    return scale * (rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1))
