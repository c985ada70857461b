import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chaoticqa import operators as op
from chaoticqa.errors import (
    DimensionMismatchError,
    NotFlipSymmetricError,
    NotHermitianError,
    ResourceLimitError,
)
from conftest import kron_sum


def random_terms(rng, n, count):
    terms = []
    for _ in range(count):
        k = int(rng.integers(1, n + 1))
        sites = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        axes = "".join(rng.choice(list("xyz"), size=k))
        terms.append(op.PauliString(sites, axes, float(rng.normal())))
    return terms


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


class TestPauliString:
    def test_masks(self):
        p = op.PauliString((0, 2, 3), "xyz")
        assert p.flip_mask == 0b0101
        assert p.phase_mask == 0b1100

    @pytest.mark.parametrize("sites,axes", [((1, 0), "xx"), ((0, 0), "xx"), ((0,), "xy"), ((0,), "w"), ((-1,), "x")])
    def test_invalid(self, sites, axes):
        with pytest.raises(ValueError):
            op.PauliString(sites, axes)

    def test_non_finite_coefficient(self):
        with pytest.raises(ValueError):
            op.PauliString((0,), "x", float("nan"))


class TestAssembleDense:
    def test_single_x(self):
        m = op.assemble_dense([op.PauliString((0,), "x")], 1)
        assert np.array_equal(m, [[0, 1], [1, 0]])

    def test_zz_diagonal(self):
        m = op.assemble_dense([op.PauliString((0, 1), "zz", 0.7)], 2)
        assert np.allclose(m, np.diag([0.7, -0.7, -0.7, 0.7]), atol=0)

    def test_empty_sum(self):
        m = op.assemble_dense([], 3)
        assert m.shape == (8, 8) and not m.any()

    def test_matches_kronecker_reference_exhaustively(self, rng):
        for n in range(1, 5):
            for _ in range(5):
                terms = random_terms(rng, n, 12)
                assert np.allclose(op.assemble_dense(terms, n), kron_sum(terms, n), atol=1e-13)

    def test_all_single_and_pair_strings(self):
        n = 3
        for k in (1, 2):
            for sites in itertools.combinations(range(n), k):
                for axes in itertools.product("xyz", repeat=k):
                    t = [op.PauliString(sites, "".join(axes), 1.0)]
                    assert np.allclose(op.assemble_dense(t, n), kron_sum(t, n), atol=1e-14)

    def test_site_out_of_range(self):
        with pytest.raises(ValueError):
            op.assemble_dense([op.PauliString((3,), "x")], 3)

    def test_size_gate(self):
        with pytest.raises(ResourceLimitError):
            op.assemble_dense([], 15)
        with pytest.raises(ResourceLimitError):
            op.check_size(13)
        op.check_size(13, allow_large=True, copies=0)

    def test_process_wide_override(self):
        try:
            op.allow_large_systems(True)
            op.check_size(13, copies=0)
        finally:
            op.allow_large_systems(False)
        with pytest.raises(ResourceLimitError):
            op.check_size(13, copies=0)


def test_walsh_hadamard_matches_definition(rng):
    a = rng.normal(size=(3, 16))
    z = np.arange(16)
    sign = (-1.0) ** np.array([[bin(i & j).count("1") for j in z] for i in z])
    assert np.allclose(op.walsh_hadamard(a), a @ sign.T)


class TestApply:
    def test_zero_and_identity(self, rng):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert not op.apply(np.zeros(4), [], psi).any()
        assert np.allclose(op.apply(np.ones(4), [], psi), psi)

    def test_matches_full_matrix(self, rng):
        d = rng.normal(size=4)
        m1, m2 = random_hermitian(rng, 4), random_hermitian(rng, 4)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        full = np.diag(d) + 0.3 * m1 - 1.7 * m2
        assert np.allclose(op.apply(d, [(0.3, m1), (-1.7, m2)], psi), full @ psi, atol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            op.apply(np.ones(3), [], np.ones(4))
        with pytest.raises(DimensionMismatchError):
            op.apply(None, [(1.0, np.eye(2))], np.ones(4))

    @given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
           st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
           st.integers(0, 2**31))
    @settings(max_examples=40, deadline=None)
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        d, m = rng.normal(size=8), random_hermitian(rng, 8)
        psi, phi = rng.normal(size=(2, 8)) + 1j * rng.normal(size=(2, 8))
        lhs = op.apply(d, [(0.5, m)], a * psi + b * phi)
        rhs = a * op.apply(d, [(0.5, m)], psi) + b * op.apply(d, [(0.5, m)], phi)
        assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)) * 30)


class TestEigensolve:
    def test_diagonal(self):
        vals, _ = op.eigensolve(np.diag([3.0, -1.0, 2.0]))
        assert np.allclose(vals, [-1, 2, 3])

    def test_pauli_x(self):
        vals, vecs = op.eigensolve(np.array([[0, 1], [1, 0]], dtype=float))
        assert np.allclose(vals, [-1, 1])
        assert np.allclose(np.abs(vecs[:, 0]), 1 / np.sqrt(2))

    def test_against_characteristic_polynomial(self, rng):
        h = random_hermitian(rng, 16)
        ref = np.sort(np.roots(np.poly(h)).real)
        vals, _ = op.eigensolve(h)
        assert np.allclose(vals, ref, atol=1e-8)

    @pytest.mark.parametrize("dim", [2, 8, 64, 256])
    def test_residual_and_reconstruction(self, rng, dim):
        h = random_hermitian(rng, dim)
        vals, vecs = op.eigensolve(h)
        norm = np.linalg.norm(h, 2)
        assert np.all(np.diff(vals) >= 0)
        assert np.max(np.linalg.norm(h @ vecs - vecs * vals, axis=0)) <= 1e-9 * norm
        assert np.allclose(vecs.conj().T @ vecs, np.eye(dim), atol=1e-9)
        assert np.linalg.norm(h - (vecs * vals) @ vecs.conj().T, 2) <= 1e-8 * norm

    def test_subset(self, rng):
        h = random_hermitian(rng, 32)
        full = op.eigensolve(h, vectors=False)
        low = op.eigensolve(h, n_levels=3, vectors=False)
        assert np.allclose(low, full[:3])

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitianError):
            op.eigensolve(np.array([[0, 1], [0, 0]], dtype=float))
        with pytest.raises(DimensionMismatchError):
            op.eigensolve(np.ones((2, 3)))
        with pytest.raises(ValueError):
            op.eigensolve(np.eye(2), n_levels=3)


class TestParity:
    def test_zz_sector_spectra(self):
        zz = np.diag([1.0, -1.0, -1.0, 1.0])
        plus = op.build_parity_block(np.diag(zz).copy(), None, 1)
        minus = op.build_parity_block(np.diag(zz).copy(), None, -1)
        assert plus.matrix.shape == (2, 2)
        both = np.sort(np.concatenate([np.linalg.eigvalsh(plus.matrix), np.linalg.eigvalsh(minus.matrix)]))
        assert np.allclose(np.linalg.eigvalsh(plus.matrix), [-1, 1])
        assert np.allclose(both, np.sort(np.diag(zz)))

    @pytest.mark.parametrize("n", range(1, 7))
    def test_union_of_sectors_is_full_spectrum(self, rng, n):
        dim = 2**n
        diag = rng.normal(size=dim)
        diag = diag + diag[::-1]
        h = random_hermitian(rng, dim)
        h = h + h[::-1, ::-1]
        blocks = [op.build_parity_block(diag, h, s) for s in (1, -1)]
        assert all(b.matrix.shape == (dim // 2, dim // 2) for b in blocks)
        union = np.sort(np.concatenate([np.linalg.eigvalsh(b.matrix) for b in blocks]))
        assert np.allclose(union, np.linalg.eigvalsh(np.diag(diag) + h), atol=1e-8)

    def test_embed_project_roundtrip(self, rng):
        b = op.build_parity_block(None, np.zeros((8, 8)), -1)
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        full = b.embed(v)
        assert np.isclose(np.linalg.norm(full), np.linalg.norm(v))
        assert np.allclose(full[::-1], -full)
        assert np.allclose(b.project(full), v)
        assert b.n == 3

    def test_rejects_asymmetric(self):
        with pytest.raises(NotFlipSymmetricError):
            op.build_parity_block(np.array([0.0, 1.0, 2.0, 3.0]), None, 1)
        with pytest.raises(ValueError):
            op.build_parity_block(np.zeros(4), None, 0)
        with pytest.raises(ValueError):
            op.build_parity_block(None, None, 1)

    def test_flip_indices(self):
        assert np.array_equal(op.flip_indices(2), [3, 2, 1, 0])
