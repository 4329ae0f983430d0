import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from idsor.core import FilterMask, LabelSet, PointCloud, compute_ranges, normalize_intensity
from idsor.errors import AlignmentError, ValidationError


def cloud_with_intensity(values):
    values = np.asarray(values, dtype=float)
    return PointCloud(np.zeros((len(values), 3)), values)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ((10, 20, 40), (0.25, 0.5, 1.0)),
        ((7,), (1.0,)),
        ((0, 0, 0), (0.0, 0.0, 0.0)),
        ((), ()),
    ],
)
def test_normalize_intensity_examples(raw, expected):
    np.testing.assert_array_equal(normalize_intensity(cloud_with_intensity(raw)), expected)


@pytest.mark.parametrize(
    "xyz, expected",
    [((0, 0, 0), 0.0), ((3, 4, 0), 5.0), ((1, 1, 1), np.sqrt(3.0))],
)
def test_compute_ranges_examples(xyz, expected):
    r = compute_ranges(PointCloud([xyz], [1.0]))
    np.testing.assert_allclose(r, [expected], rtol=1e-15)


def test_ranges_match_norm(rng):
    xyz = rng.normal(size=(1000, 3)) * 30
    r = compute_ranges(PointCloud(xyz, np.ones(1000)))
    np.testing.assert_allclose(r, np.linalg.norm(xyz, axis=1), rtol=1e-9)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_rejected_with_index(bad):
    xyz = np.zeros((4, 3))
    xyz[2, 1] = bad
    with pytest.raises(ValidationError, match="index 2"):
        PointCloud(xyz, np.ones(4))
    with pytest.raises(ValidationError, match="index 1"):
        PointCloud(np.zeros((4, 3)), [1.0, bad, 1.0, 1.0])


def test_negative_intensity_rejected():
    with pytest.raises(ValidationError, match="negative intensity at point index 0"):
        PointCloud(np.zeros((1, 3)), [-1.0])


def test_length_mismatch():
    with pytest.raises(AlignmentError):
        PointCloud(np.zeros((3, 3)), np.ones(2))


def test_cloud_arrays_are_read_only():
    c = PointCloud(np.zeros((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        c.xyz[0, 0] = 1.0
    with pytest.raises(ValueError):
        c.intensity[0] = 1.0


def test_mask_counts_and_alignment():
    m = FilterMask(np.array([True, False, True]))
    assert (m.n_kept, m.n_removed, len(m)) == (2, 1, 3)
    assert m.n_kept + m.n_removed == len(m)
    m.check_aligned(3)
    with pytest.raises(AlignmentError):
        m.check_aligned(4)
    assert FilterMask([1, 0]).keep.dtype == bool
    with pytest.raises(ValidationError):
        FilterMask([2, 0])


def test_label_positive():
    ls = LabelSet([110, 0, 40, 110], frozenset({110}))
    np.testing.assert_array_equal(ls.positive, [True, False, False, True])
    np.testing.assert_array_equal(ls.with_positive({0, 40}).positive, [False, True, True, False])


intensities = arrays(
    np.float64, st.integers(1, 60),
    elements=st.floats(0, 1e4, allow_nan=False, allow_infinity=False),
)


@settings(max_examples=200, deadline=None)
@given(intensities, st.floats(1e-3, 1e3))
def test_normalize_invariant_under_scaling(raw, scale):
    a = normalize_intensity(cloud_with_intensity(raw))
    b = normalize_intensity(cloud_with_intensity(raw * scale))
    assert a.min() >= 0 and a.max() <= 1
    if raw.max() > 0:
        assert a.max() == 1.0
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ranges_rotation_invariant(seed):
    rng = np.random.default_rng(seed)
    xyz = rng.normal(size=(200, 3)) * rng.uniform(0.1, 100)
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    a = compute_ranges(PointCloud(xyz, np.ones(200)))
    b = compute_ranges(PointCloud(xyz @ q.T, np.ones(200)))
    np.testing.assert_allclose(a, b, rtol=1e-6)
