"""Linear eigenvalue statistics of Jacobi beta-ensembles (beta = 1, 2, 4).

Three independent routes to the mean, variance and moment-generating
function of sum_j F(s(x_j)):

* ``mgf``: exact finite-N values from finite-rank Fredholm determinants,
* ``asymptotics``: large-N limits in the bulk (sine kernel) and at the hard
  edge (Bessel kernel),
* ``sampler``: Metropolis-within-Gibbs Monte Carlo from the joint density.
"""
from .asymptotics import (StatPrediction, joe_bulk, joe_edge, jse_bulk, jse_edge, jue_bulk,
                          jue_edge, predict)
from .ensemble import (EnsembleSpec, ParameterError, StatResult, TestFunction,
                       make_test_function)
from .kernels import (PhiFamily, bessel_kernel, c_constant, epsilon_phi, finite_kernel,
                      l_kernel, phi, scaled_kernel_error, sine_kernel)
from .mgf import (MgfError, MgfRequest, cumulants, mgf_exact, nystrom_det, trace_log_terms,
                  verify_skew_gram)
from .sampler import McResult, SamplerError, estimate_stats, linear_statistic, sample_chain

__version__ = "0.1.0"

__all__ = [
    "EnsembleSpec", "ParameterError", "StatResult", "TestFunction", "make_test_function",
    "PhiFamily", "bessel_kernel", "c_constant", "epsilon_phi", "finite_kernel", "l_kernel",
    "phi", "scaled_kernel_error", "sine_kernel",
    "MgfError", "MgfRequest", "cumulants", "mgf_exact", "nystrom_det", "trace_log_terms",
    "verify_skew_gram",
    "StatPrediction", "jue_bulk", "jue_edge", "jse_bulk", "jse_edge", "joe_bulk", "joe_edge",
    "predict",
    "McResult", "SamplerError", "estimate_stats", "linear_statistic", "sample_chain",
]
