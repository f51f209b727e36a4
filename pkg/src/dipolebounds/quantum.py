"""One-photon density matrices of the dipole pair and their quantum Fisher information.

Two routes to the QFI are provided. The dense route builds the full
``2B x 2B`` density matrix in the Zernike basis and diagonalizes it. The
low-rank route works in the span of the constituent states and their
derivatives, which contains both rho and d(rho)/dl, so it is exact while only
diagonalizing a matrix of dimension at most twice the number of pure states.
The same low-rank route applied to the raw pupil samples gives a pixel-basis
QFI with no modal truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import X_DIPOLE, Y_DIPOLE, Z_DIPOLE, DipoleOrientation, OpticalConfig
from .field import PupilField, bfp_field, bfp_field_l_derivative, collection_efficiency_ratio
from .zernike import ModalState, normalized_state_and_derivative, project_field, zernike_basis

EPS_EIG = 1e-12


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    rho: np.ndarray
    drho_dl: np.ndarray

    @property
    def dim(self) -> int:
        return self.rho.shape[0]


@dataclass(frozen=True, eq=False)
class SldResult:
    """SLD operator, QFI and the spectrum of rho used to build them."""

    sld: np.ndarray
    qfi: float
    eigenvalues: np.ndarray
    kept: int
    qfi_pairsum: float
    residual: float


# -- states -----------------------------------------------------------------


def _source_fields(cfg: OpticalConfig, orientation: DipoleOrientation, separation: float):
    """Fields and separation-derivatives of the sources at +l/2 and -l/2."""
    out = []
    for sign in (1, -1):
        out.append(
            (
                bfp_field(cfg, orientation, sign * separation / 2.0),
                bfp_field_l_derivative(cfg, orientation, separation, sign),
            )
        )
    return out


def modal_states(cfg: OpticalConfig, orientation: DipoleOrientation, separation: float, n_max=None):
    """Normalized Zernike-basis states ``psi_+, psi_-`` and their l-derivatives.

    Returned as ``(psi_plus, psi_minus, dpsi_plus, dpsi_minus)`` ModalStates.
    """
    basis = zernike_basis(cfg, n_max)
    states, derivs = [], []
    for fld, dfld in _source_fields(cfg, orientation, separation):
        c = project_field(fld, basis).coefficients
        dc = project_field(dfld, basis).coefficients
        psi, dpsi = normalized_state_and_derivative(c, dc)
        states.append(ModalState(psi, np.linalg.norm(c)))
        derivs.append(ModalState(dpsi))
    return states[0], states[1], derivs[0], derivs[1]


def _pixel_vector(fld: PupilField) -> np.ndarray:
    m = fld.grid.mask
    w = math.sqrt(fld.grid.cell_area)
    return w * np.concatenate([fld.ex[m], fld.ey[m]])


def pixel_states(cfg: OpticalConfig, orientation: DipoleOrientation, separation: float):
    """States in the discretized pupil-sample basis (no modal compression)."""
    states, derivs = [], []
    for fld, dfld in _source_fields(cfg, orientation, separation):
        psi, dpsi = normalized_state_and_derivative(_pixel_vector(fld), _pixel_vector(dfld))
        states.append(psi)
        derivs.append(dpsi)
    return states, derivs


# -- density matrices -------------------------------------------------------


def _vec(s):
    return s.coefficients if isinstance(s, ModalState) else np.asarray(s)


def assemble_density(psi_plus, psi_minus, dpsi_plus, dpsi_minus) -> DensityMatrix:
    """Equal-weight mixture of the two source states and its l-derivative."""
    a, b, da, db = (_vec(s) for s in (psi_plus, psi_minus, dpsi_plus, dpsi_minus))
    if not (a.shape == b.shape == da.shape == db.shape) or a.ndim != 1:
        raise ValueError("state vectors must share one 1-D shape")
    rho = 0.5 * (np.outer(a, a.conj()) + np.outer(b, b.conj()))
    d = 0.5 * (np.outer(da, a.conj()) + np.outer(db, b.conj()))
    return DensityMatrix(rho, d + d.conj().T)


def isotropic_weights(zeta: float) -> np.ndarray:
    """Mixture weights of the x, y and z dipoles for an isotropic emitter."""
    return np.array([1.0, 1.0, zeta]) / (2.0 + zeta)


ISOTROPIC_ORIENTATIONS = (X_DIPOLE, Y_DIPOLE, Z_DIPOLE)


def density_matrix(cfg: OpticalConfig, orientation: DipoleOrientation, separation: float) -> DensityMatrix:
    return assemble_density(*modal_states(cfg, orientation, separation))


def assemble_isotropic_density(cfg: OpticalConfig, separation: float, zeta: float | None = None) -> DensityMatrix:
    if zeta is None:
        zeta = collection_efficiency_ratio(cfg)
    w = isotropic_weights(zeta)
    parts = [density_matrix(cfg, o, separation) for o in ISOTROPIC_ORIENTATIONS]
    rho = sum(wi * p.rho for wi, p in zip(w, parts))
    drho = sum(wi * p.drho_dl for wi, p in zip(w, parts))
    return DensityMatrix(rho, drho)


# -- SLD / QFI --------------------------------------------------------------


def compute_sld_qfi(dm: DensityMatrix, eps: float = EPS_EIG) -> SldResult:
    """Symmetric logarithmic derivative and QFI in the eigenbasis of rho.

    Pairs of eigenvalues with ``D_k + D_k' <= eps * max(D)`` are left out.
    """
    rho = 0.5 * (dm.rho + dm.rho.conj().T)
    try:
        d, vecs = np.linalg.eigh(rho)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    if not np.all(np.isfinite(d)):
        raise EigenSolverError("non-finite eigenvalues")
    cutoff = eps * d.max()
    dsum = d[:, None] + d[None, :]
    pairs = dsum > cutoff
    drho_e = vecs.conj().T @ dm.drho_dl @ vecs
    sld_e = np.zeros_like(drho_e)
    sld_e[pairs] = 2.0 * drho_e[pairs] / dsum[pairs]

    qfi = float(np.real(np.trace(sld_e @ sld_e @ np.diag(d))))
    pairsum = float(np.sum(2.0 * np.abs(drho_e[pairs]) ** 2 / dsum[pairs]))

    keep = d > cutoff
    sld = vecs @ sld_e @ vecs.conj().T
    # defining equation, checked in the original basis on the support of rho
    proj = vecs[:, keep] @ vecs[:, keep].conj().T
    lhs = proj @ (0.5 * (sld @ dm.rho + dm.rho @ sld) - dm.drho_dl) @ proj
    ref = np.linalg.norm(dm.drho_dl)
    residual = float(np.linalg.norm(lhs) / ref) if ref > 0 else float(np.linalg.norm(lhs))
    return SldResult(sld, qfi, d, int(keep.sum()), pairsum, residual)


def pure_state_qfi(psi, dpsi) -> float:
    psi, dpsi = _vec(psi), _vec(dpsi)
    return float(4.0 * (np.vdot(dpsi, dpsi).real - abs(np.vdot(psi, dpsi)) ** 2))


def mixture_qfi(weights, states, derivatives, eps: float = EPS_EIG) -> SldResult:
    """QFI of ``sum_j w_j |a_j><a_j|`` restricted to span{a_j, da_j}.

    Works from the Gram matrix of the vectors only, so the ambient dimension
    may be large (pupil samples). The returned SLD is expressed in an
    orthonormal basis of that span.
    """
    vecs = np.stack([_vec(s) for s in states] + [_vec(s) for s in derivatives], axis=1)
    n = len(states)
    gram = vecs.conj().T @ vecs
    lam, u = np.linalg.eigh(0.5 * (gram + gram.conj().T))
    keep = lam > 1e-13 * lam.max()
    u, lam = u[:, keep], lam[keep]
    # coordinates of each vector in the orthonormal basis V u / sqrt(lam)
    coords = (u.conj().T @ gram) / np.sqrt(lam)[:, None]
    a, da = coords[:, :n], coords[:, n:]
    w = np.asarray(weights, dtype=float)
    rho = (a * w) @ a.conj().T
    d = (da * w) @ a.conj().T
    return compute_sld_qfi(DensityMatrix(rho, d + d.conj().T), eps)


def _pair_terms(cfg, source, separation, states_fn):
    if isinstance(source, DipoleOrientation):
        orientations, weights = (source,), np.ones(1)
    elif source == "isotropic":
        orientations = ISOTROPIC_ORIENTATIONS
        weights = isotropic_weights(collection_efficiency_ratio(cfg))
    else:
        raise ValueError(f"unknown source {source!r}")
    w, s, ds = [], [], []
    for wo, o in zip(weights, orientations):
        states, derivs = states_fn(cfg, o, separation)
        for st, dst in zip(states, derivs):
            w.append(0.5 * wo)
            s.append(st)
            ds.append(dst)
    return w, s, ds


def _zernike_states(cfg, o, separation):
    pp, pm, dpp, dpm = modal_states(cfg, o, separation)
    return (pp, pm), (dpp, dpm)


def quantum_fisher(cfg: OpticalConfig, source, separation: float, method: str = "lowrank") -> float:
    """QFI per collected photon (nm^-2) for a fixed orientation or ``"isotropic"``.

    ``method`` is ``"lowrank"`` or ``"dense"`` (Zernike basis) or ``"pixel"``
    (raw pupil samples, no truncation).
    """
    return sld_result(cfg, source, separation, method).qfi


def sld_result(cfg: OpticalConfig, source, separation: float, method: str = "lowrank") -> SldResult:
    if method == "dense":
        if source == "isotropic":
            dm = assemble_isotropic_density(cfg, separation)
        else:
            dm = density_matrix(cfg, source, separation)
        return compute_sld_qfi(dm)
    if method == "lowrank":
        return mixture_qfi(*_pair_terms(cfg, source, separation, _zernike_states))
    if method == "pixel":
        return mixture_qfi(*_pair_terms(cfg, source, separation, pixel_states))
    raise ValueError(f"unknown method {method!r}")


def qcrb(qfi: float) -> float:
    """Variance bound 1/QFI."""
    if not qfi > 0:
        raise ValueError("QFI must be positive")
    return 1.0 / qfi
