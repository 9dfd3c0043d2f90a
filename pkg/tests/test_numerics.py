import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from multilrsga.numerics import (
    BlockLayout,
    SpectralNormError,
    assemble_block_matrix,
    block_get,
    spectral_norm,
    spectral_radius,
)


def test_layout_offsets_and_total():
    layout = BlockLayout((2, 1, 3))
    assert layout.total == 6
    assert layout.offsets == (0, 2, 3, 6)
    assert layout.slice(2) == slice(3, 6)


@pytest.mark.parametrize("dims", [(), (0,), (2, -1)])
def test_layout_rejects_bad_dims(dims):
    with pytest.raises(ValueError):
        BlockLayout(dims)


def test_check_vector():
    layout = BlockLayout((1, 2))
    np.testing.assert_array_equal(layout.check_vector([1, 2, 3]), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        layout.check_vector([1, 2])
    with pytest.raises(ValueError):
        layout.check_vector([1, np.nan, 3])


class TestSpectralNorm:
    def test_identity(self):
        assert spectral_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-10)

    def test_zero(self):
        assert spectral_norm(np.zeros((4, 4))) == 0.0

    def test_rotation(self):
        m = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert spectral_norm(m) == pytest.approx(np.linalg.svd(m, compute_uv=False)[0], abs=1e-10)
        assert spectral_norm(m) == pytest.approx(1.0, abs=1e-10)

    def test_clustered_singular_values(self):
        # nearly orthogonal matrix: plain power iteration stalls here
        m = np.diag([1.0, 1.0 - 1e-9, 1.0 - 2e-9]) @ np.linalg.qr(np.arange(9.0).reshape(3, 3) + np.eye(3))[0]
        assert abs(spectral_norm(m) - np.linalg.norm(m, 2)) <= 1e-10

    def test_rectangular(self, rng):
        for shape in [(1, 5), (5, 1), (3, 7), (7, 3)]:
            m = rng.standard_normal(shape)
            assert abs(spectral_norm(m) - np.linalg.norm(m, 2)) <= 1e-10 * max(1, np.linalg.norm(m, 2))

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            spectral_norm(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            spectral_norm(np.array([[np.inf]]))
        with pytest.raises(ValueError):
            spectral_norm(np.eye(2), tol=0)

    def test_nonconvergence_reports_estimate(self, rng):
        m = rng.standard_normal((4, 4))
        with pytest.raises(SpectralNormError) as exc:
            spectral_norm(m, max_iter=1)
        assert exc.value.estimate > 0

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(-100, 100)))
    def test_matches_svd_and_transpose(self, m):
        ref = np.linalg.norm(m, 2) if m.any() else 0.0
        tol = 1e-10 * max(1.0, ref)
        assert abs(spectral_norm(m) - ref) <= tol
        assert abs(spectral_norm(m) - spectral_norm(m.T)) <= 2 * tol

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (3, 4), elements=st.floats(-10, 10)), st.floats(-50, 50))
    def test_homogeneous(self, m, c):
        assert spectral_norm(c * m) == pytest.approx(abs(c) * spectral_norm(m), rel=1e-9, abs=1e-9)


def test_spectral_radius():
    m = np.array([[0.9, -0.1], [0.1, 0.9]])
    assert spectral_radius(m) == pytest.approx(np.sqrt(0.82), abs=1e-14)


class TestBlocks:
    def test_block_get_identity(self):
        layout = BlockLayout((1, 1, 2))
        np.testing.assert_array_equal(block_get(np.eye(4), layout, 2, 2), np.eye(2))

    def test_block_get_rectangular(self, rng):
        layout = BlockLayout((2, 2))
        m = rng.standard_normal((2, 4))
        np.testing.assert_array_equal(block_get(m, layout, None, 1), m[:, 2:])

    def test_block_get_first_column(self):
        layout = BlockLayout((1, 1))
        np.testing.assert_array_equal(block_get(np.array([[3.0, 4.0]]), layout, None, 0), [[3.0]])

    def test_block_get_out_of_range(self):
        with pytest.raises(IndexError):
            block_get(np.eye(2), BlockLayout((1, 1)), 0, 2)

    def test_assemble(self):
        layout = BlockLayout((1, 1))
        np.testing.assert_array_equal(assemble_block_matrix(layout, {(0, 1): [[3.0]]}),
                                      [[0.0, 3.0], [0.0, 0.0]])
        np.testing.assert_array_equal(assemble_block_matrix(layout, {}), np.zeros((2, 2)))
        out = assemble_block_matrix(BlockLayout((2, 1)), {(0, 0): np.eye(2)})
        np.testing.assert_array_equal(out, np.diag([1.0, 1.0, 0.0]))

    def test_assemble_shape_error_names_block(self):
        with pytest.raises(ValueError, match=r"\(0, 1\)"):
            assemble_block_matrix(BlockLayout((2, 1)), {(0, 1): np.eye(2)})

    def test_roundtrip(self, rng):
        layout = BlockLayout((2, 1, 3))
        blocks = {(i, j): rng.standard_normal((layout.dims[i], layout.dims[j]))
                  for i in range(3) for j in range(3) if (i + j) % 2 == 0}
        full = assemble_block_matrix(layout, blocks)
        for (i, j), b in blocks.items():
            np.testing.assert_array_equal(block_get(full, layout, i, j), b)
