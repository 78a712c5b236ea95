from sensipy.experiments.config import (GridConfig, FieldConfig, PerturbationConfig,
                                        SourceConfig, QoiConfig, RiskConfig,
                                        SensitivityConfig, StudyConfig, load_config,
                                        parse_config, STUDIES as STUDY_NAMES)
from sensipy.experiments.report import Quantity, Check, StudyReport
from sensipy.experiments.sampling import (DataSamples, CoupledSamples, draw_coupled,
                                          perturbed_model, integrability_constant,
                                          gaussian_input_distance)
from sensipy.experiments.studies import (run_perturbation_study, run_truncation_study,
                                         run_risk_sensitivity_study, run_tv_study,
                                         run_local_lipschitz_study, run_study, STUDIES)
