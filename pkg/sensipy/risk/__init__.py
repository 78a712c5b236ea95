from sensipy.risk.functional import (SpectralDensity, RiskFunctional, Expectation,
                                     EssentialSupremum, ValueAtRisk, AverageValueAtRisk,
                                     EntropicValueAtRisk, SpectralRisk, Semideviation,
                                     expectation, esssup, var, avar, avar_dual, spectral,
                                     evar, semideviation, semideviation_mixture)
from sensipy.risk.spec import RiskSpec, RiskFactory, RISK_KINDS, evaluate
from sensipy.risk.sensitivity import (SensitivityBound, ProductRisk, support_norm_bound,
                                      conjugate_order, sensitivity_bound, greedy_avar,
                                      product_risk_discrete)
