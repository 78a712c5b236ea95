from sensipy.grf.matern import (MaternParams, GaussianFieldModel, matern_cov,
                                build_cov_matrix, cholesky_factor, sample_field,
                                sample_values, fields_from_innovations)
from sensipy.grf.kl import (KLBasis, kl_decompose, kl_from_model, sample_truncated,
                            sample_coupled_truncated, truncated_values)
from sensipy.grf.bounds import (covering_number, dudley_entropy_integral, MomentEstimate,
                                exp_moment_estimate, exp_moment_bound, TailCheck,
                                borell_tis_tail_check, sup_norms)
