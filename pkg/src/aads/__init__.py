"""Numerical laboratory for the geometry of asymptotically anti-de Sitter
(AAdS) spacetimes: charts and conformal completions, wedge/diamond region
algebra, geodesic flows and world functions, modular time functions with
surface gravities, and the Fefferman-Graham near-boundary expansion.

Global conventions are documented in :mod:`aads.tensor` (signature and
curvature) and :mod:`aads.models` (charts, covering, boundary order).
"""

from .errors import (AadsError, AmbiguousGeodesicError, ConfigurationError,
                     ConstructionError, CoverageError, DegeneratePlaneError,
                     DomainError, ExtrapolationDivergenceError, NonConvexError,
                     OffHorizonError, PreconditionError, SingularityError,
                     StencilError, UnsupportedError)
from .tensor import (ChartPoint, CurvatureBundle, SpacetimeModel,
                     christoffel_at, conformal_ricci_check, curvature_at,
                     einstein_residual, metric_at, sectional_curvature)
from .models import (BoundaryPoint, ModelSpec, ads, antipodal,
                     antipodal_inverse, boundary_chronology,
                     boundary_to_minkowski, build_model, chart, flat,
                     minkowski_to_boundary, schwarzschild, transition,
                     transition_velocity)
from .geodesics import (GeodesicState, GeodesicTrajectory, conjugate_points,
                        connect, integrate, lorentzian_distance,
                        null_expansion, world_function)
from .regions import (DiamondSpec, WedgeSpec, causal_complement,
                      chronological_relation, diamond_volume,
                      envelope_contains, rehren_inverse, rehren_map,
                      wedge_flow)
from .modular import (ModularFrame, ads_wedge_frame, flat_frame,
                      horizon_sequence, modular_field, surface_gravity,
                      time_function)
from .fg import (BoundaryData, FGCoefficientTable, electric_weyl,
                 fg_constraint_residual, fg_expand, reconstructed_model)
from .experiments import (DelayReport, fermat_extremum_check,
                          fermat_potential, time_delay, wedge_overlap_volume)

__version__ = "0.1.0"
