"""Shared independent oracles for the test suite."""

import numpy as np
import pytest
import scipy.linalg

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_string(sites, axes, n):
    """Tensor-product matrix of a Pauli string; site 0 is the least significant bit."""
    ops = [np.eye(2, dtype=complex)] * n
    ops = list(ops)
    for i, a in zip(sites, axes):
        ops[i] = PAULI[a]
    out = np.array([[1.0 + 0j]])
    for i in reversed(range(n)):
        out = np.kron(out, ops[i])
    return out


def kron_sum(terms, n):
    out = np.zeros((2**n, 2**n), dtype=complex)
    for t in terms:
        out += t.coeff * kron_string(t.sites, t.axes, n)
    return out


def magnus_product(hfun, psi0, T, slices=500):
    """Fixed-step 4th-order Magnus propagator using one scipy ``expm`` per slice.

    ``Omega = h/2 (A1 + A2) + sqrt(3) h^2 / 12 [A2, A1]`` with ``A = -i H`` at the
    two Gauss-Legendre nodes of each slice.
    """
    h = T / slices
    c1, c2 = 0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6
    psi = np.array(psi0, dtype=complex)
    for k in range(slices):
        a1 = -1j * hfun((k + c1) * h / T)
        a2 = -1j * hfun((k + c2) * h / T)
        omega = 0.5 * h * (a1 + a2) + np.sqrt(3) / 12 * h * h * (a2 @ a1 - a1 @ a2)
        psi = scipy.linalg.expm(omega) @ psi
    return psi


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
