"""U-statistics, U-quantiles and GL-statistics for dependent time series."""

__version__ = "0.1.0"

from .kernels import KernelSpec, AnalyticModel, builtin_kernel, analytic_model_uniform_qn  # noqa: E402
from .uprocess import u_statistic, empirical_u_dist, hoeffding_parts, u_process_path  # noqa: E402
from .uquantile import u_quantile, qn_select, bahadur_remainder  # noqa: E402
from .glstat import GLSpec, gl_statistic, gl_sigma2  # noqa: E402
from .dependence import Seed, sequence_model, generate  # noqa: E402
from .longrun import LongRunCov, estimate_gamma, estimate_u  # noqa: E402

__all__ = [
    "KernelSpec", "AnalyticModel", "builtin_kernel", "analytic_model_uniform_qn",
    "u_statistic", "empirical_u_dist", "hoeffding_parts", "u_process_path",
    "u_quantile", "qn_select", "bahadur_remainder",
    "GLSpec", "gl_statistic", "gl_sigma2",
    "Seed", "sequence_model", "generate",
    "LongRunCov", "estimate_gamma", "estimate_u",
]
