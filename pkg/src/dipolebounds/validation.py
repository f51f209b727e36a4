"""Quick oracle and invariant checks behind ``dipolebounds validate``.

Each check returns ``(name, passed, detail)``. The defaults use a small grid
so the whole suite runs in seconds; the pytest suite covers the same ground
in more depth.
"""

from __future__ import annotations

import math

import numpy as np

from .classical import fisher_for_modalities
from .config import X_DIPOLE, Z_DIPOLE, DipoleOrientation, OpticalConfig, pupil_grid
from .field import (
    _green_xy,
    bfp_field,
    bfp_field_l_derivative,
    green_tensor,
    origin_split_angle,
    radial_azimuthal_split,
)
from .imaging import iii_fields, modality_images
from .quantum import quantum_fisher, sld_result
from .zernike import zernike_basis

SMALL = OpticalConfig(pupil_grid_side=65, image_fov_nm=2000.0)
OBLIQUE = DipoleOrientation(math.pi / 3, math.pi / 3)


def _rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(np.max(np.abs(b)), 1e-300))


def check_green_tensor(cfg):
    g = pupil_grid(cfg)
    m = g.mask
    full = green_tensor(g.r[m], np.arctan2(g.y[m], g.x[m]))
    gxx, gxy, gyy, gxz, gyz = _green_xy(g.x[m], g.y[m])
    err = max(
        _rel(gxx, full[:, 0, 0]), _rel(gxy, full[:, 0, 1]), _rel(gyy, full[:, 1, 1]),
        _rel(gxz, full[:, 0, 2]), _rel(gyz, full[:, 1, 2]),
    )
    return "green tensor cartesian form", err < 1e-12, f"max rel err {err:.2e}"


def check_field_derivative(cfg, step=0.1):
    worst = 0.0
    for sign in (1, -1):
        for l in (5.0, 50.0):
            d = bfp_field_l_derivative(cfg, OBLIQUE, l, sign)
            fp = bfp_field(cfg, OBLIQUE, sign * (l + step) / 2)
            fm = bfp_field(cfg, OBLIQUE, sign * (l - step) / 2)
            fd = (fp.components() - fm.components()) / (2 * step)
            worst = max(worst, _rel(d.components(), fd))
    return "field l-derivative vs central difference", worst < 1e-6, f"max rel err {worst:.2e}"


def check_split_closed_form(cfg):
    o = OBLIQUE
    g = pupil_grid(cfg)
    fld = bfp_field(cfg, o, 0.0)
    er, ephi = radial_azimuthal_split(fld)
    phi = np.arctan2(g.y, g.x)
    phi[g.center, g.center] = origin_split_angle(fld)
    s = np.sqrt(1 - np.where(g.mask, g.r, 0) ** 2)
    ephi_ref = math.sin(o.theta) * np.sin(phi - o.phi) / np.sqrt(s)
    er_ref = (s * math.sin(o.theta) * np.cos(phi - o.phi) - g.r * math.cos(o.theta)) / np.sqrt(s)
    m = g.mask
    err = max(_rel(ephi[m], ephi_ref[m]), _rel(er[m], er_ref[m]))
    return "radial/azimuthal closed forms", err < 1e-10, f"max rel err {err:.2e}"


def check_zernike_gram(cfg):
    b = zernike_basis(cfg)
    err = float(np.max(np.abs(b.gram() - np.eye(b.size))))
    return "zernike discrete orthonormality", err < 1e-10 and b.size == 45, f"max dev {err:.2e}, B={b.size}"


def check_qfi_routes(cfg):
    worst_dense, worst_pixel = 0.0, 0.0
    for o in (X_DIPOLE, OBLIQUE):
        for l in (5.0, 50.0):
            lo = quantum_fisher(cfg, o, l, "lowrank")
            de = quantum_fisher(cfg, o, l, "dense")
            px = quantum_fisher(cfg, o, l, "pixel")
            worst_dense = max(worst_dense, abs(lo - de) / de)
            worst_pixel = max(worst_pixel, abs(lo - px) / px)
    ok = worst_dense < 1e-6 and worst_pixel < 1e-2
    return "QFI low-rank/dense/pixel agreement", ok, f"dense {worst_dense:.1e}, pixel {worst_pixel:.1e}"


def check_sld_residual(cfg):
    r = sld_result(cfg, OBLIQUE, 20.0, "dense")
    ok = r.residual < 1e-8 and abs(r.qfi - r.qfi_pairsum) <= 1e-8 * r.qfi
    return "SLD defining equation", ok, f"residual {r.residual:.1e}"


def check_normalization(cfg):
    worst = 0.0
    for mod in ("direct", "iii", "polarized"):
        pairs = modality_images(cfg, OBLIQUE, 20.0, mod)
        tot = sum(p.image.total() for p in pairs)
        dtot = sum(p.dimage_dl.sum() * p.image.pixel_area for p in pairs)
        worst = max(worst, abs(tot - 1.0), abs(dtot))
    return "channel normalization", worst < 1e-9, f"max dev {worst:.1e}"


def check_iii_power(cfg):
    f = bfp_field(cfg, OBLIQUE, 15.0).components()
    o1, o2 = iii_fields(f)
    pin = np.sum(np.abs(f) ** 2)
    pout = np.sum(np.abs(o1) ** 2) + np.sum(np.abs(o2) ** 2)
    err = abs(pout - pin) / pin
    return "III two-port power conservation", err < 1e-10, f"rel err {err:.1e}"


def check_nulls(cfg):
    worst = 0.0
    for o in (X_DIPOLE, DipoleOrientation(math.pi / 2, 0.7)):
        f = bfp_field(cfg, o, 0.0).components()
        o1, _ = iii_fields(f)
        worst = max(worst, np.sum(np.abs(o1) ** 2) / np.sum(np.abs(f) ** 2))
    f = bfp_field(cfg, Z_DIPOLE, 0.0).components()
    _, o2 = iii_fields(f)
    worst = max(worst, np.sum(np.abs(o2) ** 2) / np.sum(np.abs(f) ** 2))
    for o in (OBLIQUE, DipoleOrientation(0.3, 1.1)):
        fld = bfp_field(cfg, o, 0.0)
        _, ephi = radial_azimuthal_split(fld)
        _, o2 = iii_fields(ephi)
        worst = max(worst, np.sum(np.abs(o2) ** 2) / fld.power() * pupil_grid(cfg).cell_area)
    return "exact III nulls at l=0", worst < 1e-20, f"max null fraction {worst:.1e}"


def check_information_ordering(cfg):
    worst = 0.0
    for o in (X_DIPOLE, OBLIQUE):
        k = quantum_fisher(cfg, o, 10.0)
        fis = fisher_for_modalities(cfg, o, 10.0, ["direct", "iii", "rphi_iii"])
        worst = max(worst, max(f.total for f in fis.values()) / k)
    return "classical FI <= QFI", worst <= 1.005, f"max FI/QFI {worst:.4f}"


CHECKS = (
    check_green_tensor,
    check_field_derivative,
    check_split_closed_form,
    check_zernike_gram,
    check_qfi_routes,
    check_sld_residual,
    check_normalization,
    check_iii_power,
    check_nulls,
    check_information_ordering,
)


def run_validation(cfg: OpticalConfig = SMALL) -> list[tuple]:
    return [(name, bool(ok), detail) for name, ok, detail in (c(cfg) for c in CHECKS)]
