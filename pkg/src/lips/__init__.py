"""Bifurcations of lips polycycles on a Möbius band: curves, counts and cyclicity."""

__version__ = "0.1.0"

from .errors import (DegeneracyError, DomainError, EscapeError, LipsError, NumericalError,
                     OutOfScopeError, RangeError)
from .jets import (Jet, ModelFunction, check_genericity, eval_inverse_jet, eval_jet, identity,
                   polynomial, reference, sine)
from .normalform import Params, classify_stratum, coeff_C1, coeff_C2, verify_transition_ode
from .blowup import BlownParams, DomainD, blow_down, blow_up, horn_asymptotics, select_domain_D
from .poincare import ReturnSystem, find_period2_roots, fixed_point, period2_residual
from .curves import (PlanarCurve, SingularPoint, all_curves, endpoint_tangency, find_cusps,
                     find_flips, find_self_intersections, trace_L0, trace_Lambda0, trace_l_pm)
from .oracle import CountGrid, diagram_consistency, scan_grid
from .cyclicity import CyclicityReport, cyclicity_bound
