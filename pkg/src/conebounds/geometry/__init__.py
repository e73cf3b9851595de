"""Cone and norm-ball geometry."""

from .cones import (
    ConeHandle,
    FullSpace,
    Ray,
    fit_scale,
    polar_cone,
    polar_scale,
    profile,
    project_polar,
    project_tangent,
    tangent_cone,
)
from .models import KINDS, ZERO_TOL, SignalDescriptor, StructureModel, describe
from .norms import (
    block_soft_threshold,
    dual_norm,
    project_ball,
    project_l12_ball,
    project_l1_ball,
    project_nuclear_ball,
    project_simplex,
    prox,
    regularizer,
    singular_value_threshold,
    soft_threshold,
)
from .restricted import project_cone_image, restricted_min_singular
from .width import WidthEstimate, gamma_d, width_closed_form, width_monte_carlo

project_polar_cone = project_polar
project_tangent_cone = project_tangent
