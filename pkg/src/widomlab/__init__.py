"""widomlab: capacities, equilibrium measures, weighted Chebyshev and
orthogonal polynomial Widom factors on finite unions of real intervals."""

__version__ = "0.1.0"

from .realsets import (
    Interval,
    RationalFunction,
    RealCompactSet,
    RealPolynomial,
    hausdorff_distance,
    normalize,
    polynomial_preimage,
    sublevel_bands,
)
from .potential import (
    EquilibriumMeasure,
    GreenValue,
    Singularity,
    capacity_preimage_poly,
    capacity_preimage_rational_check,
    equilibrium_measure,
    green,
    green_interval_closed_form,
    green_pullback_poly,
    integrate,
)

__all__ = [
    "Interval",
    "RealCompactSet",
    "RealPolynomial",
    "RationalFunction",
    "normalize",
    "polynomial_preimage",
    "sublevel_bands",
    "hausdorff_distance",
    "EquilibriumMeasure",
    "GreenValue",
    "Singularity",
    "equilibrium_measure",
    "integrate",
    "green",
    "green_interval_closed_form",
    "capacity_preimage_poly",
    "capacity_preimage_rational_check",
    "green_pullback_poly",
]
