import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclap.core_types import make_params
from fraclap.exterior_data import ExteriorData, smooth_cutoff_extension, unit_bump
from fraclap.fields import default_family, smooth_field, validate_field
from fraclap.geometry import Domain


def test_unit_bump_profile():
    t = np.array([-1.5, -1.0, 0.0, 0.5, 1.0, 2.0])
    v = unit_bump(t)
    assert v[2] == 1.0
    assert v[0] == v[1] == v[4] == v[5] == 0.0
    assert v[3] == pytest.approx(np.exp(1 - 1 / 0.75))


@pytest.mark.parametrize("spec", [
    {"kind": "nope"},
    {"kind": "constant"},
    {"kind": "constant", "value": 1.0, "extra": 2},
    {"kind": "annulus_bump", "center": [0, 0], "radius": 1.0, "width": 1.5},
    {"kind": "annulus_bump", "center": [0, 0], "radius": 1.0, "width": 0.0},
    {"kind": "sum", "terms": [{"kind": "constant", "value": 1}, {"kind": "bad"}]},
    {"kind": "truncated", "base": {"kind": "constant"}, "center": [0, 0], "radius": 3},
    [1, 2],
])
def test_invalid_data_specs(spec):
    with pytest.raises(ValueError):
        ExteriorData(spec)


def test_annulus_bump_values(annulus_data):
    y = np.array([[1.5, 0.0], [0.0, -1.5], [1.2, 0.0], [1.8, 0.0], [3.0, 0.0]])
    np.testing.assert_allclose(annulus_data(y), [1.0, 1.0, 0.0, 0.0, 0.0], atol=1e-15)
    assert annulus_data.support_radius == pytest.approx(1.8)


def test_angular_bump_is_direction_limited():
    F = ExteriorData({"kind": "angular_bump", "center": [0, 0], "radius": 2.0, "width": 0.5,
                      "direction": [0, 2], "aperture": 0.8})
    assert F(np.array([0.0, 2.0])) == pytest.approx(1.0)
    assert F(np.array([2.0, 0.0])) == 0.0
    assert F(np.array([0.0, -2.0])) == 0.0


def test_halfspace_truncated_and_sum():
    H = ExteriorData({"kind": "halfspace", "normal": [2, 0], "offset": 1.0, "amplitude": 3.0})
    np.testing.assert_array_equal(H(np.array([[1.5, 9.0], [0.5, 0.0]])), [3.0, 0.0])
    assert H.support_radius == np.inf
    T = ExteriorData({"kind": "truncated", "base": {"kind": "constant", "value": 2.0},
                      "center": [1, 0], "radius": 4.0})
    np.testing.assert_array_equal(T(np.array([[4.5, 0], [-3.5, 0]])), [2.0, 0.0])
    assert T.support_radius == pytest.approx(5.0)
    S = ExteriorData({"kind": "sum", "terms": [H.spec, T.spec]})
    assert S(np.array([1.5, 0.0])) == pytest.approx(5.0)
    assert S.support_radius == np.inf


@pytest.mark.parametrize("spec, zero", [
    ({"kind": "constant", "value": 0.0}, True),
    ({"kind": "constant", "value": 0.5}, False),
    ({"kind": "annulus_bump", "center": [0, 0], "radius": 1.5, "width": 0.3, "amplitude": 0}, True),
    ({"kind": "sum", "terms": [{"kind": "constant", "value": 0}, {"kind": "constant", "value": 0}]}, True),
    ({"kind": "sum", "terms": [{"kind": "constant", "value": 0}, {"kind": "constant", "value": 1}]}, False),
])
def test_is_zero(spec, zero):
    assert ExteriorData(spec).is_zero() is zero


def test_cutoff_extension_agrees_outside_and_vanishes_deep_inside(unit_disk):
    F = ExteriorData({"kind": "constant", "value": 2.0})
    x = np.array([[1.5, 0.0], [1.0, 0.0], [0.0, 0.0], [0.5, 0.0], [0.95, 0.0]])
    v = smooth_cutoff_extension(F, unit_disk, x, eps=0.2)
    assert v[0] == v[1] == 2.0
    assert v[2] == v[3] == 0.0
    assert 0.0 < v[4] < 2.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_cutoff_extension_is_monotone_in_depth(a, b):
    d = Domain.ball([0.0, 0.0], 1.0)
    F = ExteriorData({"kind": "constant", "value": 1.0})
    lo, hi = sorted((a, b))
    v = smooth_cutoff_extension(F, d, np.array([[lo, 0.0], [hi, 0.0]]), eps=0.5)
    assert v[0] <= v[1] + 1e-15
    assert 0.0 <= v.min() and v.max() <= 1.0


def test_field_validation():
    validate_field({"kind": "hermite", "center": [1, 1], "width": 0.3, "axis": 1}, 2)
    bad = [
        {"kind": "gaussian", "center": [1, 1, 1], "width": 0.3},
        {"kind": "gaussian", "center": [1, 1], "width": -1},
        {"kind": "hermite", "center": [1, 1], "width": 0.3, "axis": 2},
        {"kind": "sum", "terms": []},
        {"kind": "gaussian", "center": [1, 1]},
    ]
    for spec in bad:
        with pytest.raises(ValueError):
            validate_field(spec, 2)


def test_hermite_field_is_mean_free(grid64):
    f = smooth_field(grid64, {"kind": "hermite", "center": [4, 4], "width": 0.5, "axis": 0})
    assert abs(f.values.sum()) < 1e-12 * np.abs(f.values).sum()


def test_mean_free_option(grid64):
    f = smooth_field(grid64, {"kind": "gaussian", "center": [4, 4], "width": 0.5}, mean_free=True)
    assert abs(f.values.mean()) < 1e-15


@pytest.mark.parametrize("n, L", [(2, 8.0), (2, 16.0), (3, 8.0)])
def test_default_family_stays_in_central_half(n, L):
    p = make_params(n, 0.5, 64 if n == 2 else 32, L)
    fam = default_family(p)
    assert len(fam) == 6
    rel = np.abs(np.stack(np.meshgrid(*[np.arange(p.grid_size) * p.h] * n, indexing="ij"), -1) - p.center)
    outside = rel.max(-1) > L / 4
    on_edge = rel.max(-1) >= L / 2 - 1e-12
    for spec in fam:
        f = np.abs(smooth_field(p, spec).values)
        assert (f[outside] ** 2).sum() < 1e-4 * (f ** 2).sum()
        assert f[on_edge].max() < 1e-8 * f.max()
