from sensipy.metrics.measure import (EmpiricalMeasure, CouplingPlan, merge_atoms,
                                     pushforward_discrete, product_measure,
                                     on_common_support, random_discrete_measure)
from sensipy.metrics.wasserstein import (wasserstein_1d, wasserstein_discrete_exact,
                                         coupling_upper_bound, coupling_distances,
                                         ground_cost, quantile_refinement, MAX_EXACT_ATOMS)
from sensipy.metrics.gaussian import GaussianSpec, gelbrich_gaussian, psd_sqrt
from sensipy.metrics.tv import (tv_discrete, tv_measures, tv_by_events, tv_coupling_mass,
                                maximal_coupling)
