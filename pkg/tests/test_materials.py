import numpy as np
import pytest
from hypothesis import given, strategies as st

from fgmopt.materials import (
    AL_ZRO2,
    MaterialProps,
    VolumeFractionField,
    blend,
    blend_arrays,
    interpolate_vf,
)
from fgmopt.mesh import generate_rectangle


def test_blend_pure_metal_matches_aluminum():
    p = blend(AL_ZRO2, 0.0)
    assert p.E == pytest.approx(70.0e9)
    assert p.k == pytest.approx(233.0)


def test_blend_pure_ceramic_matches_zirconia():
    p = blend(AL_ZRO2, 1.0)
    assert p.E == pytest.approx(200.0e9)
    assert p.alpha == pytest.approx(10.0e-6)


def test_blend_midpoint_values_plane_stress():
    p = blend(AL_ZRO2, 0.5, "stress")
    assert p.E == pytest.approx(135.0e9)
    assert p.alpha == pytest.approx(16.7e-6)
    assert p.beta == pytest.approx(135.0e9 * 16.7e-6 / (1 - 0.3))


@given(st.floats(0.0, 1.0))
def test_blend_affine_in_vc(vc):
    lo, hi, mid = blend(AL_ZRO2, 0.0), blend(AL_ZRO2, 1.0), blend(AL_ZRO2, vc)
    for attr in ("E", "nu", "alpha", "k"):
        expect = (1 - vc) * getattr(lo, attr) + vc * getattr(hi, attr)
        assert getattr(mid, attr) == pytest.approx(expect, rel=1e-12)


@given(st.floats(0.0, 1.0))
def test_plane_stress_beta_identity(vc):
    p = blend(AL_ZRO2, vc, "stress")
    assert p.beta * (1 - p.nu) == pytest.approx(p.E * p.alpha, rel=1e-12)


def test_blend_rejects_out_of_range_vc():
    with pytest.raises(ValueError):
        blend(AL_ZRO2, 1.2)


def test_blend_arrays_matches_scalar():
    vc = np.array([0.0, 0.25, 1.0])
    arr = blend_arrays(AL_ZRO2, vc, "strain")
    for i, v in enumerate(vc):
        p = blend(AL_ZRO2, float(v), "strain")
        assert arr.E[i] == pytest.approx(p.E)
        assert arr.beta[i] == pytest.approx(p.beta)
        assert arr.lam[i] == pytest.approx(p.lambda_lame)
        assert arr.mu[i] == pytest.approx(p.mu_lame)


def test_material_props_validation():
    with pytest.raises(ValueError):
        MaterialProps(E=-1.0, nu=0.3, alpha=1e-6, k=1.0)
    with pytest.raises(ValueError):
        MaterialProps(E=1.0, nu=0.6, alpha=1e-6, k=1.0)
    with pytest.raises(ValueError):
        MaterialProps(E=1.0, nu=0.3, alpha=1e-6, k=0.0)


# ----------------------------------------------------------------------
# volume fraction field + interpolation
# ----------------------------------------------------------------------

def _one_element_field(corner_values):
    mesh = generate_rectangle(1.0, 1.0, 1, 1)
    order = mesh.corner_pos[mesh.elements[0, :4]]
    values = np.empty(4)
    values[order] = corner_values
    return mesh, VolumeFractionField(values)


def test_interpolate_partition_of_unity():
    mesh, field = _one_element_field([1.0, 1.0, 1.0, 1.0])
    for xi, eta in [(-0.3, 0.8), (0.0, 0.0), (1.0, -1.0)]:
        assert interpolate_vf(field, mesh, 0, xi, eta) == pytest.approx(1.0)


def test_interpolate_centroid_average():
    mesh, field = _one_element_field([0.0, 1.0, 1.0, 0.0])
    assert interpolate_vf(field, mesh, 0, 0.0, 0.0) == pytest.approx(0.5)


def test_interpolate_checkerboard_hand_value():
    # corners (0, 1, 0, 1) give V = (1 - xi*eta)/2; at (0.5, -0.5) that is 0.625
    mesh, field = _one_element_field([0.0, 1.0, 0.0, 1.0])
    assert interpolate_vf(field, mesh, 0, 0.5, -0.5) == pytest.approx(0.625, abs=1e-14)


@pytest.mark.parametrize("corner, xi_eta", [(0, (-1, -1)), (1, (1, -1)), (2, (1, 1)), (3, (-1, 1))])
def test_interpolate_reproduces_corners(corner, xi_eta):
    mesh, field = _one_element_field([0.1, 0.4, 0.9, 0.7])
    order = mesh.corner_pos[mesh.elements[0, :4]]
    expect = field.values[order[corner]]
    assert interpolate_vf(field, mesh, 0, *xi_eta) == pytest.approx(expect)


def test_interpolate_range_bounded_by_corners():
    mesh, field = _one_element_field([0.2, 0.5, 0.9, 0.3])
    rng = np.random.default_rng(1)
    for xi, eta in rng.uniform(-1, 1, size=(25, 2)):
        v = interpolate_vf(field, mesh, 0, xi, eta)
        assert 0.2 - 1e-12 <= v <= 0.9 + 1e-12


def test_interpolate_rejects_out_of_range_coords():
    mesh, field = _one_element_field([0, 0, 0, 0])
    with pytest.raises(ValueError):
        interpolate_vf(field, mesh, 0, 1.5, 0.0)


def test_field_clamps_and_is_immutable():
    f = VolumeFractionField([-0.5, 0.3, 1.7])
    assert f.values.tolist() == [0.0, 0.3, 1.0]
    with pytest.raises(ValueError):
        f.values[0] = 0.5


def test_field_rejects_non_finite():
    with pytest.raises(ValueError):
        VolumeFractionField([0.1, np.nan])
