from sensipy.pde.solver import DiffusionSolver, solve, assemble, interface_coefficients
from sensipy.pde.norms import h1_seminorm, l2_norm, linf_norm, inner_product
from sensipy.pde.stability import (poincare_constant, discrete_poincare_constant,
                                   stability_bound, LipschitzConstants, lipschitz_constants,
                                   solution_operator_constant, data_distance, data_radius,
                                   difference_bound, LipschitzReport, empirical_lipschitz_ratio)
from sensipy.pde.qoi import (QoiSpec, QuantityOfInterest, PointEvaluation, SubdomainMean,
                             L2Distance, H1Distance, qoi_eval)
