"""Precision limits for resolving two closely spaced dipole emitters.

Computes the quantum Fisher information of the one-photon state collected by
a high-NA objective and the classical Fisher information of direct imaging
and image inversion interferometry (unpolarized and radially/azimuthally
filtered), with full vectorial fields.
"""

from .classical import FisherBreakdown, crb, fisher_information, modality_fisher
from .config import DESK, FULL, DipoleOrientation, OpticalConfig
from .field import (
    bfp_field,
    bfp_field_l_derivative,
    collection_efficiency_ratio,
    dipole_unit_vector,
    green_tensor,
    radial_azimuthal_split,
)
from .imaging import (
    direct_image,
    iii_outputs,
    isotropic_images,
    polarized_iii_images,
    tube_lens_image,
)
from .quantum import (
    assemble_density,
    assemble_isotropic_density,
    compute_sld_qfi,
    qcrb,
    quantum_fisher,
)
from .zernike import project_field, zernike_basis, zernike_eval, zernike_radial

__version__ = "0.1.0"
