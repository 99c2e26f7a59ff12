"""Computational Finsler geometry engine.

Truncated Taylor jets of ``F**2`` give exact-in-arithmetic derivatives; on
top of them sit the fundamental and Cartan tensors, the spray, the
Berwald-type connection family, its curvatures, geodesics and the
identity-verification suite.
"""

from .catalog import MetricSpec, get_metric, list_catalog, validate
from .connections import FamilyParams, berwald, chern, compatibility_defect, family, torsion_defect
from .curvature import flag_curvature, hh_curvature, hv_curvature, pn_slice
from .errors import (
    ConvexityError,
    DomainError,
    FinslerError,
    FlagError,
    JetOrderError,
    SeriesError,
    SlitBundleError,
)
from .jets import EvalPoint, JetRequest, eval_jet, fd_jet

__all__ = [
    "ConvexityError", "DomainError", "EvalPoint", "FamilyParams", "FinslerError", "FlagError",
    "JetOrderError", "JetRequest", "MetricSpec", "SeriesError", "SlitBundleError", "berwald",
    "chern", "compatibility_defect", "eval_jet", "family", "fd_jet", "flag_curvature",
    "get_metric", "hh_curvature", "hv_curvature", "list_catalog", "pn_slice", "torsion_defect",
    "validate",
]
