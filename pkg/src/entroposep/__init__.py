"""Maximum-entropy continuous ensembles of pure states and separability certificates."""

__version__ = "0.1.0"

from .bipartite import (NoCertificate, SeparabilityCertificate, SolveConfig, solve_bipartite,
                        verify_certificate)
from .hermitian import (DensityMatrix, as_density, eig_hermitian, kron, partial_trace,
                        ppt_min_eigenvalue, trace_distance)
from .kfunctional import divided_diff_exp, grad_k_operator, k_grad_eigen, k_value
from .single import EnsembleParam, reconstruct_mc, sample_ensemble, solve_single
from .smeared import sample_smeared, smear
from .sphere import McEstimate, mc_product_projector_mean, mc_projector_mean
from .states import maximally_mixed, werner

__all__ = [
    "DensityMatrix", "EnsembleParam", "McEstimate", "NoCertificate", "SeparabilityCertificate",
    "SolveConfig", "as_density", "divided_diff_exp", "eig_hermitian", "grad_k_operator",
    "k_grad_eigen", "k_value", "kron", "mc_product_projector_mean", "mc_projector_mean",
    "maximally_mixed", "partial_trace", "ppt_min_eigenvalue", "reconstruct_mc",
    "sample_ensemble", "sample_smeared", "smear", "solve_bipartite", "solve_single",
    "trace_distance", "verify_certificate", "werner",
]
