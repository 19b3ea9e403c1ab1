"""Lattice index sets, stationary random fields and their extremal clusters."""

from .analysis import (Estimate, GofReport, ReplicationTable, estimate_local_index, estimate_max_cdf,
                       estimate_theta_runs, independence_check, mean_cluster_size,
                       order_statistic_cdf, poisson_gof, representation_check, run_experiment)
from .clustering import (ClusterMeasure, RegionQuery, SubsetFamily, count, distance_clusters,
                         exceedance_clusters, exceedance_points, grid_clusters,
                         original_scale_counts, uniform_cluster)
from .config import ExperimentConfig, load_config
from .fields import (FieldSample, IIDModel, Marginal, MovingMaximum, exact_max_cdf, simulate,
                     theoretical_theta, threshold)
from .geometry import (Ball, BlockPartition, Box, DependenceSpec, Ellipsoid, LatticeRegion,
                       PConvexSet, assumption_report, build_partition, intrinsic_volumes,
                       lattice_points, minkowski_sum_count, order_neighborhood, separated_core)

__version__ = "0.1.0"
