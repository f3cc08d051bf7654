"""Terminated protograph-based LDPC convolutional code ensembles on the BEC."""

from .density_evolution import DEConfig, threshold, threshold_curve
from .ensembles import FamilySpec, edge_spread, gcd_spread, preset, terminate
from .protograph import BaseMatrix, build_protograph, degree_census, design_rate
from .weight_enumerator import delta_min, exact_average_enumerator, spectral_shape

__version__ = "0.1.0"
