"""Exception hierarchy shared by every anosovlab module.

Each error carries a short machine-readable ``code`` so the CLI can emit
structured error JSON without string matching.
"""

from __future__ import annotations


class AnosovLabError(Exception):
    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class NonFiniteEntries(AnosovLabError):
    code = "non_finite_entries"


class NotSpecialLinear(AnosovLabError):
    code = "not_special_linear"


class SvdFailure(AnosovLabError):
    code = "svd_failure"


class EigenFailure(AnosovLabError):
    code = "eigen_failure"


class NoSingularGap(AnosovLabError):
    code = "no_singular_gap"

    def __init__(self, k: int, message: str | None = None):
        self.k = k
        super().__init__(message or f"no singular value gap at index {k}")


class DimMismatch(AnosovLabError):
    code = "dim_mismatch"


class NotProximal(AnosovLabError):
    code = "not_proximal"


class PointNotInterior(AnosovLabError):
    code = "point_not_interior"


class LineBoundaryIntersectionFailure(AnosovLabError):
    code = "line_boundary_intersection_failure"


class UnboundedDual(AnosovLabError):
    code = "unbounded_dual"


class ChartVanishes(AnosovLabError):
    code = "chart_vanishes"


class NotOnBoundary(AnosovLabError):
    code = "not_on_boundary"


class InvalidDomain(AnosovLabError):
    code = "invalid_domain"


class DepthOverflow(AnosovLabError):
    code = "depth_overflow"


class VertexOutOfRange(AnosovLabError):
    code = "vertex_out_of_range"


class TruncationTooShallow(AnosovLabError):
    code = "truncation_too_shallow"


class NotHyperbolic(AnosovLabError):
    code = "not_hyperbolic"


class DegenerateInput(AnosovLabError):
    code = "degenerate_input"


class NotBiproximal(AnosovLabError):
    code = "not_biproximal"


class ULimitNotConverged(AnosovLabError):
    code = "u_limit_not_converged"


class EmptyNet(AnosovLabError):
    code = "empty_net"


class PowerNotFound(AnosovLabError):
    code = "power_not_found"


class SeedNotInGoodRegion(AnosovLabError):
    code = "seed_not_in_good_region"


class IncidenceViolated(AnosovLabError):
    code = "incidence_violated"


class DegenerateConfiguration(AnosovLabError):
    code = "degenerate_configuration"


class CoincidentArguments(AnosovLabError):
    code = "coincident_arguments"
