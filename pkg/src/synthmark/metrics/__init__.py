from .correlation import CorrelationDiff, correlation_diffs, kendall_tau
from .improvement import ImprovementFactor, improvement_factor
from .inconsistency import InconsistencyCount, InconsistencyRule, count_inconsistencies
from .marginals import KMarginalResult, k_marginal_score, sampling_equivalence
from .pca import PcaResult, ks_statistic, pca_compare
from .pmse import PmseResult, pmse
from .regression import RegressionResult, regression_slope_error
from .univariate import UnivariateError, univariate_errors
