"""Normal forms at radial points: exact jet algebra, symbolic normalization
certificates and floating-point flow checks."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .jets import JetCaps, JetSeries, Monomial, filtration_order, jet_add, jet_derive, jet_invert, jet_mul, make_jet
from .lower import NormalizationCertificate, homological_solve_order_k, normalize_full, replay_full
from .principal import PrincipalCertificate, exp_ad_pullback, normalize_principal, replay_principal
from .symbols import ClassicalSymbol, chart_hamilton_field, graded_bracket, lagrange_bracket, radial_check
