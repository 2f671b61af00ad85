"""Computational geometric integration: chains, forms, cochains, and friends."""

from .chains import (
    AffineMap,
    Chain,
    CubicalCell,
    Simplex,
    boundary,
    chain_from_json,
    chain_to_json,
    detect_overlaps,
    homotopy_chains,
    integrate_measure,
    is_cycle,
    mass,
    prism,
    pushforward,
    support_neighborhood,
    theta_growth,
    translate,
)
from .forms import (
    CutoffForm,
    PolyForm,
    apply_cutoff,
    comass,
    comass_field,
    exterior_derivative,
    form_from_json,
    form_to_json,
    integrate_over_chain,
    lq_norm,
    sobolev_norm,
)
from .cochains import (
    AveragedCochain,
    Cochain,
    average,
    check_certificate,
    coboundary,
    continuity_experiment,
    form_cochain,
    reconstruct_form,
    riesz_lemma_check,
)
from .complexes import (
    ChainComplex,
    NotRepresentableError,
    build_cubical_complex,
    embed_chain,
    flat_norm,
    flat_norm_chain,
)
from .deformation import DeformationResult, deform, empirical_constants
from .gridfield import GridField, maximal_function, riesz_potential
from .modulus import ModulusResult, p_modulus
from .polynomial import Polynomial

__all__ = [
    "AveragedCochain",
    "ChainComplex",
    "Cochain",
    "DeformationResult",
    "GridField",
    "ModulusResult",
    "NotRepresentableError",
    "average",
    "build_cubical_complex",
    "check_certificate",
    "coboundary",
    "continuity_experiment",
    "deform",
    "embed_chain",
    "empirical_constants",
    "flat_norm",
    "flat_norm_chain",
    "form_cochain",
    "maximal_function",
    "p_modulus",
    "reconstruct_form",
    "riesz_lemma_check",
    "riesz_potential",
    "AffineMap",
    "Chain",
    "CubicalCell",
    "CutoffForm",
    "PolyForm",
    "Polynomial",
    "Simplex",
    "apply_cutoff",
    "boundary",
    "chain_from_json",
    "chain_to_json",
    "comass",
    "comass_field",
    "detect_overlaps",
    "exterior_derivative",
    "form_from_json",
    "form_to_json",
    "homotopy_chains",
    "integrate_measure",
    "integrate_over_chain",
    "is_cycle",
    "lq_norm",
    "mass",
    "prism",
    "pushforward",
    "sobolev_norm",
    "support_neighborhood",
    "theta_growth",
    "translate",
]
