import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from dipolebounds.config import X_DIPOLE, Z_DIPOLE, DipoleOrientation, OpticalConfig, pupil_grid
from dipolebounds.field import (
    _green_xy,
    bfp_field,
    bfp_field_l_derivative,
    collection_efficiency_ratio,
    dipole_unit_vector,
    green_tensor,
    jones_vortex,
    origin_split_angle,
    radial_azimuthal_split,
)

angles = st.floats(0.0, math.pi / 2)
azimuths = st.floats(0.0, 2 * math.pi, exclude_max=True)


def test_unit_vector_examples():
    np.testing.assert_allclose(dipole_unit_vector(DipoleOrientation(0.0, 1.3)), [0, 0, 1])
    np.testing.assert_allclose(dipole_unit_vector(DipoleOrientation(math.pi / 2, 0)), [1, 0, 0], atol=1e-16)
    np.testing.assert_allclose(
        dipole_unit_vector(DipoleOrientation(math.pi / 2, math.pi / 2)), [0, 1, 0], atol=1e-16
    )


@given(angles, azimuths)
def test_unit_vector_norm(theta, phi):
    assert np.linalg.norm(DipoleOrientation(theta, phi).unit_vector()) == pytest.approx(1.0, abs=1e-15)


def test_axial_dipole_azimuth_is_canonical():
    assert DipoleOrientation(0.0, 2.0).phi == 0.0
    assert DipoleOrientation(0.0, 2.0) == Z_DIPOLE


def test_config_validation():
    with pytest.raises(ValueError):
        OpticalConfig(numerical_aperture=1.6)
    with pytest.raises(ValueError):
        OpticalConfig(pupil_grid_side=128)
    with pytest.raises(ValueError):
        OpticalConfig(support_fill=1.0)


def test_grid_support_fill(tiny):
    g = pupil_grid(tiny.replace(pupil_grid_side=513))
    assert g.mask.mean() == pytest.approx(0.60, abs=2e-3)
    assert g.x[g.center, g.center] == 0.0 and g.y[g.center, g.center] == 0.0


def test_green_tensor_on_axis():
    np.testing.assert_array_equal(green_tensor(0.0, 0.7), [[1, 0, 0], [0, 1, 0], [0, 0, 0]])


@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
def test_green_tensor_phi_zero(r):
    g = green_tensor(r, 0.0)
    assert g[0, 0] == pytest.approx((1 - r * r) ** 0.25)
    assert g[0, 1] == 0.0
    assert g[0, 2] == pytest.approx(-r * (1 - r * r) ** -0.25)


@given(st.floats(0.0, 0.99), azimuths)
def test_green_tensor_bottom_row_and_cartesian_form(r, phi):
    g = green_tensor(r, phi)
    assert np.all(g[2] == 0.0)
    gxx, gxy, gyy, gxz, gyz = _green_xy(r * math.cos(phi), r * math.sin(phi))
    np.testing.assert_allclose([gxx, gxy, gyy, gxz, gyz], [g[0, 0], g[0, 1], g[1, 1], g[0, 2], g[1, 2]],
                               rtol=1e-12, atol=1e-14)


def test_green_tensor_domain():
    with pytest.raises(ValueError):
        green_tensor(1.0, 0.0)


def test_field_support_and_phase_only_offset(tiny, oblique):
    g = pupil_grid(tiny)
    f0 = bfp_field(tiny, oblique, 0.0)
    f1 = bfp_field(tiny, oblique, 37.0)
    assert np.all(f0.ex[~g.mask] == 0) and np.all(f1.ey[~g.mask] == 0)
    np.testing.assert_allclose(np.abs(f1.ex), np.abs(f0.ex), rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(np.abs(f1.ey), np.abs(f0.ey), rtol=1e-13, atol=1e-15)
    assert np.all(np.isfinite(f1.ex))


def test_zero_offset_equals_green_times_mu(tiny, oblique):
    g = pupil_grid(tiny)
    m = g.mask
    f = bfp_field(tiny, oblique, 0.0)
    full = green_tensor(g.r[m], np.arctan2(g.y[m], g.x[m])) @ oblique.unit_vector()
    np.testing.assert_allclose(f.ex[m], full[:, 0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(f.ey[m], full[:, 1], rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("phi", [0.0, 0.4, math.pi / 2, 2.5])
def test_transverse_dipole_field_is_inversion_symmetric(tiny, phi):
    # cos(pi/2) is 6e-17 in floating point, so the odd z-part survives at roundoff level
    c = bfp_field(tiny, DipoleOrientation(math.pi / 2, phi), 0.0).components()
    np.testing.assert_allclose(c[..., ::-1, ::-1], c, rtol=0, atol=1e-15)


def test_axial_dipole_field_is_inversion_antisymmetric(tiny):
    c = bfp_field(tiny, Z_DIPOLE, 0.0).components()
    np.testing.assert_array_equal(c[..., ::-1, ::-1], -c)


def test_intermediate_orientation_has_mixed_parity(tiny, oblique):
    c = bfp_field(tiny, oblique, 0.0).components()
    even = 0.5 * (c + c[..., ::-1, ::-1])
    odd = 0.5 * (c - c[..., ::-1, ::-1])
    pe, po = np.sum(np.abs(even) ** 2), np.sum(np.abs(odd) ** 2)
    assert 0.05 < pe / (pe + po) < 0.95


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("l", [0.0, 12.0, 80.0])
def test_derivative_matches_central_difference(tiny, oblique, sign, l):
    step = 0.1
    d = bfp_field_l_derivative(tiny, oblique, l, sign).components()
    fp = bfp_field(tiny, oblique, sign * (l + step) / 2).components()
    fm = bfp_field(tiny, oblique, sign * (l - step) / 2).components()
    fd = (fp - fm) / (2 * step)
    assert np.max(np.abs(d - fd)) / np.max(np.abs(d)) < 1e-6


def test_derivative_is_phase_factor_times_field(tiny, oblique):
    g = pupil_grid(tiny)
    f = bfp_field(tiny, oblique, -10.0)
    d = bfp_field_l_derivative(tiny, oblique, 20.0, -1)
    np.testing.assert_allclose(d.ex, 1j * tiny.wavenumber * g.x / 2 * f.ex, rtol=1e-14, atol=1e-18)


def test_power_has_zero_l_derivative(tiny, oblique):
    f = bfp_field(tiny, oblique, 20.0)
    d = bfp_field_l_derivative(tiny, oblique, 40.0, 1)
    dpow = 2 * np.sum(np.real(np.conj(f.components()) * d.components()))
    assert abs(dpow) < 1e-12 * np.sum(np.abs(f.components()) ** 2)


def test_derivative_rejects_bad_sign(tiny, oblique):
    with pytest.raises(ValueError):
        bfp_field_l_derivative(tiny, oblique, 10.0, 0)


@given(azimuths)
def test_vortex_plate_is_involutory(phi):
    c, s = jones_vortex(np.array([math.cos(phi)]), np.array([math.sin(phi)]))
    j = np.array([[c[0], s[0]], [s[0], -c[0]]])
    np.testing.assert_allclose(j @ j, np.eye(2), atol=1e-15)


def test_split_conserves_power(tiny, oblique):
    f = bfp_field(tiny, oblique, 23.0)
    er, ephi = radial_azimuthal_split(f)
    np.testing.assert_allclose(np.abs(er) ** 2 + np.abs(ephi) ** 2, np.abs(f.ex) ** 2 + np.abs(f.ey) ** 2,
                               rtol=1e-12, atol=1e-15)


def test_axial_dipole_is_entirely_radial(tiny):
    _, ephi = radial_azimuthal_split(bfp_field(tiny, Z_DIPOLE, 15.0))
    assert np.max(np.abs(ephi)) < 1e-15


@settings(max_examples=25, deadline=None)
@given(angles, azimuths)
def test_split_closed_forms(theta, phi_d):
    cfg = OpticalConfig(pupil_grid_side=33)
    g = pupil_grid(cfg)
    o = DipoleOrientation(theta, phi_d)
    fld = bfp_field(cfg, o, 0.0)
    er, ephi = radial_azimuthal_split(fld)
    phi = np.arctan2(g.y, g.x)
    # the on-axis polarization axis is only defined modulo pi
    phi[g.center, g.center] = origin_split_angle(fld)
    m = g.mask
    s = np.sqrt(1 - g.r[m] ** 2)
    ephi_ref = math.sin(o.theta) * np.sin(phi[m] - o.phi) / np.sqrt(s)
    er_ref = (s * math.sin(o.theta) * np.cos(phi[m] - o.phi) - g.r[m] * math.cos(o.theta)) / np.sqrt(s)
    scale = np.max(np.abs(er_ref)) + np.max(np.abs(ephi_ref))
    assert np.max(np.abs(ephi[m] - ephi_ref)) <= 1e-10 * scale
    assert np.max(np.abs(er[m] - er_ref)) <= 1e-10 * scale


@settings(max_examples=25, deadline=None)
@given(angles, azimuths)
def test_azimuthal_component_mirror_identity(theta, phi_d):
    """E_phi(-x, y) == -E_phi(x, -y) at l = 0 for every orientation."""
    cfg = OpticalConfig(pupil_grid_side=33)
    _, ephi = radial_azimuthal_split(bfp_field(cfg, DipoleOrientation(theta, phi_d), 0.0))
    np.testing.assert_allclose(ephi[:, ::-1], -ephi[::-1, :], atol=1e-15)


def _zeta_dblquad(cfg):
    R = cfg.pupil_radius

    def num(phi, r):
        g = green_tensor(r, phi)
        return r * r * (g[0, 2] ** 2 + g[1, 2] ** 2)

    def den(phi, r):
        g = green_tensor(r, phi)
        return r * r * (g[0, 0] ** 2 + g[1, 0] ** 2)

    kw = dict(epsabs=1e-13, epsrel=1e-11)
    return dblquad(num, 0, R, 0, 2 * math.pi, **kw)[0] / dblquad(den, 0, R, 0, 2 * math.pi, **kw)[0]


def test_zeta_matches_independent_quadrature():
    cfg = OpticalConfig()
    zeta = collection_efficiency_ratio(cfg)
    assert 0 < zeta < 1
    assert zeta == pytest.approx(_zeta_dblquad(cfg), rel=1e-6)


def test_zeta_grid_convergence():
    a = collection_efficiency_ratio(OpticalConfig(pupil_grid_side=257), "grid")
    b = collection_efficiency_ratio(OpticalConfig(pupil_grid_side=513), "grid")
    assert abs(a - b) / b < 1e-3
    assert b == pytest.approx(collection_efficiency_ratio(OpticalConfig()), rel=1e-3)
