"""Numerical laboratory for energy-minimizing maps into NPC and CAT(-1)
metric spaces: model domains, metric targets, a Frechet-mean relaxation
solver, and margin checks for the variational and curvature inequalities."""

from .charts import ExactModel, NormalChart, bishop_gromov_profile
from .curvature import CurvatureData, constant_curvature, flat_curvature
from .mesh import (BallRegion, DomainTag, MeshDomain, build_mesh,
                   geodesic_ball_region, load_mesh_json, save_mesh_json)
from .quadrature import (QuadraticForm, curvature_ball_integrals,
                         integrate_quadratic_ball,
                         integrate_quadratic_product_sphere,
                         integrate_quadratic_sphere, unit_ball_volume)
from .solver import (EnergyDensityField, MapState, PullbackTensor, SolverConfig,
                     dirichlet_energy, energy_density, energy_density_field,
                     pullback_tensor_estimate, relax_vertex, solve_harmonic)
from .targets import (EuclideanSpace, FrechetConfig, GeodesicSegment,
                      HyperbolicPlane, MetricTree, ProductSpace, TreePoint,
                      check_cat1_comparison, check_npc_comparison, frechet_mean,
                      frechet_objective, make_tripod, space_from_config)

__version__ = "0.1.0"
