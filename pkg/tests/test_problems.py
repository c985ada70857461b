import itertools
import json

import numpy as np
import pytest

from chaoticqa.errors import DimensionMismatchError, ResourceLimitError
from chaoticqa.problems import (
    ClassicalSpectrum,
    WeightedGraph,
    ground_population,
    labs_energies,
    level_populations,
    maxcut_energies,
    random_regular_graph,
    spin_table,
    toy_classical,
)


def brute_labs(n):
    """Independent enumeration over +-1 tuples; the first tuple entry is site 0."""
    best, count = None, 0
    for seq in itertools.product((1, -1), repeat=n):
        e = sum(sum(seq[i] * seq[i + j] for i in range(n - j)) ** 2 for j in range(1, n))
        if best is None or e < best:
            best, count = e, 1
        elif e == best:
            count += 1
    return best, count


def cut_value(g, z):
    bits = [(z >> i) & 1 for i in range(g.n)]
    return sum(w for i, j, w in g.edges if bits[i] != bits[j])


def test_spin_table_convention():
    s = spin_table(2)
    assert s.tolist() == [[1, 1], [-1, 1], [1, -1], [-1, -1]]


class TestGraphs:
    def test_regular_simple_and_weighted(self):
        for seed in range(20):
            g = random_regular_graph(10, 3, seed)
            deg = np.zeros(10, int)
            for i, j, w in g.edges:
                assert i < j and 0.0 <= w < 1.0
                deg[i] += 1
                deg[j] += 1
            assert np.all(deg == 3)
            assert len({(i, j) for i, j, _ in g.edges}) == 15

    def test_deterministic(self):
        a, b = random_regular_graph(8, 3, 123), random_regular_graph(8, 3, 123)
        assert a.to_json() == b.to_json()
        assert a.to_json() != random_regular_graph(8, 3, 124).to_json()

    def test_json_roundtrip(self):
        g = random_regular_graph(8, 3, 5)
        back = WeightedGraph.from_json(g.to_json())
        assert back.to_json() == g.to_json()
        assert json.loads(g.to_json())["n"] == 8

    @pytest.mark.parametrize("n,d", [(5, 3), (4, 4), (3, 0)])
    def test_invalid(self, n, d):
        with pytest.raises(ValueError):
            random_regular_graph(n, d, 0)

    def test_weights_roughly_uniform(self):
        w = np.array([w for s in range(200) for *_, w in random_regular_graph(8, 3, s).edges])
        assert abs(w.mean() - 0.5) < 0.03
        assert abs(w.var() - 1 / 12) < 0.01


class TestMaxCut:
    def test_single_edge(self):
        c = maxcut_energies(WeightedGraph(n=2, d=1, seed=0, edges=((0, 1, 0.7),)))
        assert np.allclose(c.energies, [0.7, -0.7, -0.7, 0.7])
        assert c.ground_energy == -0.7 and c.degeneracy == 2

    def test_unit_triangle(self):
        g = WeightedGraph(n=3, d=2, seed=0, edges=((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))
        c = maxcut_energies(g)
        assert c.ground_energy == -1.0 and c.degeneracy == 6

    @pytest.mark.parametrize("n", [4, 6, 8, 10])
    def test_cut_identity_exhaustive(self, n):
        g = random_regular_graph(n, 3, 31 + n)
        e = maxcut_energies(g).energies
        wt = g.total_weight
        for z in range(1 << n):
            assert abs(e[z] - (wt - 2 * cut_value(g, z))) < 1e-12

    def test_flip_symmetric(self):
        assert maxcut_energies(random_regular_graph(8, 3, 2)).is_flip_symmetric()


class TestLabs:
    @pytest.mark.parametrize("n", range(3, 11))
    def test_optimum_matches_enumeration(self, n):
        best, count = brute_labs(n)
        c = labs_energies(n)
        assert c.ground_energy == best
        assert c.degeneracy == count

    def test_symmetries(self):
        n = 7
        e = labs_energies(n).energies
        z = np.arange(1 << n)
        rev = np.array([int(format(x, f"0{n}b")[::-1], 2) for x in z])
        alt = int("".join("10"[i % 2] for i in range(n)), 2)
        assert np.array_equal(e, e[::-1])  # global flip
        assert np.array_equal(e, e[rev])  # reversal
        assert np.array_equal(e, e[z ^ alt])  # alternating flip

    def test_limits(self):
        with pytest.raises(ValueError):
            labs_energies(1)
        with pytest.raises(ResourceLimitError):
            labs_energies(15)


class TestSpectrum:
    def test_invalid(self):
        with pytest.raises(ValueError):
            ClassicalSpectrum(np.zeros(3))
        with pytest.raises(ValueError):
            ClassicalSpectrum(np.array([0.0, np.nan]))

    def test_levels_and_populations(self):
        c = ClassicalSpectrum(np.array([1.0, -1.0, -1.0, 2.0]))
        assert c.levels().tolist() == [-1.0, 1.0, 2.0]
        psi = np.array([0.5, 0.5, 0.5, 0.5])
        assert ground_population(psi, c) == pytest.approx(0.5)
        assert level_populations(psi, c) == pytest.approx({-1.0: 0.5, 1.0: 0.25, 2.0: 0.25})
        with pytest.raises(DimensionMismatchError):
            ground_population(np.ones(8), c)

    def test_tie_tolerance(self):
        c = ClassicalSpectrum(np.array([-1.0, -1.0 + 1e-14, 0.0, 0.0]))
        assert c.degeneracy == 2

    def test_toy_landscape(self):
        c = toy_classical()
        assert c.ground_set.tolist() == [3]
        assert np.allclose(c.energies, [-999.8, 1000.0, 1000.0, -1000.2])
        assert c.energies[0] - c.energies[3] == pytest.approx(0.4)
