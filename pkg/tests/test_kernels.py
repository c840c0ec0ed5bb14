import numpy as np
import pytest

from locstruct.kernels import (
    GaussianGlobal,
    GaussianParts,
    LinearParts,
    PreparedAnchors,
    Restriction,
    SumKernel,
    cross_matrix,
    gram_matrix,
    kernel_eval,
    kernel_sup,
    part_kernel_eval,
)
from locstruct.parts import SequenceWindows, ShapeMismatchError, VectorBlocks


SCHEME = VectorBlocks(block_dim=2, num_blocks=3)


def _vec(parts):
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


class TestKernelEval:
    def test_restriction_linear_dot_product(self):
        x = _vec([(1, 2), (0, 0), (0, 0)])
        y = _vec([(0, 0), (3, -1), (0, 0)])
        k = kernel_eval(Restriction(LinearParts()), (x, 0), (y, 1), SCHEME)
        assert k == 1.0  # 1*3 + 2*(-1)

    def test_restriction_gaussian_identical_parts(self):
        x = _vec([(0.3, -1.2), (5, 5), (0, 0)])
        y = _vec([(9, 9), (0.3, -1.2), (1, 1)])
        k = kernel_eval(Restriction(GaussianParts(1.0)), (x, 0), (y, 1), SCHEME)
        assert k == 1.0

    def test_sum_universal_plus_local_at_identical_pair(self):
        x = _vec([(1, 2), (3, 4), (5, 6)])
        spec = SumKernel(GaussianGlobal(1.0), Restriction(GaussianParts(1.0)))
        assert kernel_eval(spec, (x, 0), (x, 0), SCHEME) == 2.0

    def test_gaussian_global_part_gate(self):
        x = _vec([(1, 2), (3, 4), (5, 6)])
        spec = GaussianGlobal(1.0)
        assert kernel_eval(spec, (x, 0), (x, 1), SCHEME) == 0.0
        assert kernel_eval(spec, (x, 2), (x, 2), SCHEME) == 1.0

    def test_incompatible_part_dimensions(self):
        seq = SequenceWindows(4, 2)
        with pytest.raises(ShapeMismatchError):
            part_kernel_eval(LinearParts(), "ab", "abc")
        k = kernel_eval(Restriction(LinearParts()), ("abcd", 0), ("abcd", 1), seq)
        assert k == 0.0  # "ab" vs "bc": no matching positions

    def test_string_kernels_via_one_hot(self):
        assert part_kernel_eval(LinearParts(), "abc", "abd") == 2.0
        g = part_kernel_eval(GaussianParts(1.0), "abc", "abd")
        assert g == pytest.approx(np.exp(-1.0))  # squared distance is 2 per mismatch


class TestRestrictionLocality:
    def test_equal_parts_give_exactly_equal_values(self):
        rng = np.random.default_rng(3)
        spec = Restriction(GaussianParts(0.7))
        for _ in range(200):
            shared = rng.standard_normal(2)
            x = rng.standard_normal(6)
            y = rng.standard_normal(6)
            p, q = rng.integers(3, size=2)
            x[2 * p : 2 * p + 2] = shared
            y[2 * q : 2 * q + 2] = shared
            anchor = (rng.standard_normal(6), int(rng.integers(3)))
            a = kernel_eval(spec, (x, int(p)), anchor, SCHEME)
            b = kernel_eval(spec, (y, int(q)), anchor, SCHEME)
            assert a == b  # bitwise: the kernel sees the parts only


class TestGram:
    def test_single_anchor_gaussian(self):
        x = np.zeros(6)
        g = gram_matrix(Restriction(GaussianParts(1.0)), [(x, 0)], SCHEME)
        assert g.entries.shape == (1, 1)
        assert g.entries[0, 0] == 1.0

    def test_duplicate_anchors_rank_one(self):
        x = np.arange(6.0)
        for spec in (Restriction(GaussianParts(1.0)), Restriction(LinearParts())):
            g = gram_matrix(spec, [(x, 1), (x, 1)], SCHEME).entries
            assert np.allclose(g, g[0, 0] * np.ones((2, 2)), rtol=1e-12, atol=1e-12)
            assert np.linalg.matrix_rank(g, tol=1e-10) == 1

    def test_five_random_anchors_psd(self):
        rng = np.random.default_rng(8)
        anchors = [(rng.standard_normal(6), int(rng.integers(3))) for _ in range(5)]
        g = gram_matrix(Restriction(GaussianParts(1.0)), anchors, SCHEME).entries
        eigs = np.linalg.eigvalsh(g)
        assert eigs.min() >= -1e-10

    @pytest.mark.parametrize("spec", [
        Restriction(LinearParts()),
        Restriction(GaussianParts(0.5)),
        GaussianGlobal(2.0),
        SumKernel(GaussianGlobal(1.0), Restriction(GaussianParts(1.0))),
    ])
    def test_builtin_kernels_psd_on_many_anchors(self, spec):
        rng = np.random.default_rng(21)
        anchors = [(rng.standard_normal(6), int(rng.integers(3))) for _ in range(50)]
        g = gram_matrix(spec, anchors, SCHEME).entries
        eigs = np.linalg.eigvalsh(g)
        assert eigs.min() >= -1e-8 * np.trace(g)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        anchors = [(rng.standard_normal(6), int(rng.integers(3))) for _ in range(20)]
        g = gram_matrix(Restriction(GaussianParts(1.0)), anchors, SCHEME).entries
        assert np.max(np.abs(g - g.T)) <= 1e-12

    @pytest.mark.parametrize("spec", [
        Restriction(LinearParts()),
        Restriction(GaussianParts(0.8)),
        GaussianGlobal(1.5),
        SumKernel(GaussianGlobal(1.0), Restriction(LinearParts())),
    ])
    def test_vectorized_gram_matches_per_entry_eval(self, spec):
        rng = np.random.default_rng(13)
        anchors = [(rng.standard_normal(6), int(rng.integers(3))) for _ in range(8)]
        g = gram_matrix(spec, anchors, SCHEME).entries
        for i in range(8):
            for j in range(8):
                assert g[i, j] == pytest.approx(
                    kernel_eval(spec, anchors[i], anchors[j], SCHEME), abs=1e-12)

    def test_string_gram_fallback(self):
        seq = SequenceWindows(4, 2)
        anchors = [("abab", 0), ("abab", 2), ("bbaa", 1)]
        g = gram_matrix(Restriction(LinearParts()), anchors, seq).entries
        assert g[0, 1] == 2.0  # "ab" vs "ab"
        assert g[0, 2] == 0.0  # "ab" vs "ba": no position matches
        # direct oracle
        for i in range(3):
            for j in range(3):
                assert g[i, j] == kernel_eval(Restriction(LinearParts()), anchors[i], anchors[j], seq)


class TestSumAdditivity:
    def test_sum_equals_components_exactly(self):
        rng = np.random.default_rng(4)
        u = GaussianGlobal(1.3)
        l = Restriction(GaussianParts(0.6))
        spec = SumKernel(u, l)
        for _ in range(50):
            a = (rng.standard_normal(6), int(rng.integers(3)))
            b = (rng.standard_normal(6), int(rng.integers(3)))
            total = kernel_eval(spec, a, b, SCHEME)
            assert total == kernel_eval(u, a, b, SCHEME) + kernel_eval(l, a, b, SCHEME)


class TestPreparedAnchors:
    def test_cross_matches_cross_matrix(self):
        rng = np.random.default_rng(6)
        anchors = [(rng.standard_normal(6), int(rng.integers(3))) for _ in range(7)]
        queries = [(rng.standard_normal(6), int(rng.integers(3))) for _ in range(4)]
        for spec in (Restriction(GaussianParts(1.0)), GaussianGlobal(1.0),
                     SumKernel(GaussianGlobal(1.0), Restriction(LinearParts()))):
            prepared = PreparedAnchors(spec, anchors, SCHEME)
            assert np.allclose(prepared.cross(queries),
                               cross_matrix(spec, anchors, queries, SCHEME),
                               rtol=0, atol=1e-13)


def test_gram_diagonal_within_kernel_sup():
    rng = np.random.default_rng(17)
    anchors = [(rng.standard_normal(6), int(rng.integers(3))) for _ in range(25)]
    for spec in (Restriction(GaussianParts(0.9)), GaussianGlobal(1.2),
                 SumKernel(GaussianGlobal(1.0), Restriction(GaussianParts(1.0)))):
        g = gram_matrix(spec, anchors, SCHEME).entries
        d = np.diag(g)
        assert np.all(d >= 0.0)
        assert np.all(d <= kernel_sup(spec) + 1e-12)


def test_bandwidths_must_be_positive():
    with pytest.raises(ValueError):
        GaussianParts(0.0)
    with pytest.raises(ValueError):
        GaussianGlobal(-1.0)


def test_kernel_sup_bounds():
    assert kernel_sup(Restriction(GaussianParts(2.0))) == 1.0
    assert kernel_sup(GaussianGlobal(1.0)) == 1.0
    assert kernel_sup(SumKernel(GaussianGlobal(1.0), Restriction(GaussianParts(1.0)))) == 2.0
    assert kernel_sup(Restriction(LinearParts())) is None
