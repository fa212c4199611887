"""Non-harmonic pseudo-differential calculus on the unit cube.

The model problems are ``-i d/dx`` on [0, 1] with ``h``-weighted boundary
condition (``Oh1D``) and the Laplacian with per-axis weights (``OhND``).
Their biorthogonal eigenfunction systems ``u_xi``, ``v_xi`` replace the
Fourier basis in transforms, convolutions, Sobolev spaces, quantization and
the symbolic calculus.
"""
from .eigensystem import EigenData, ModelProblem, Window, angle_weight, eigendata, eigenvalue, window_for
from .transform import (AliasingWarning, GridFunction, SpectralCoeffs, WindowMismatch, forward_l, forward_lstar,
                        inverse_l, inverse_lstar, l2_inner, l2_norm, plancherel_pair)
from .convolution import conv_integral_oh1, conv_spectral, conv_star_spectral
from .spaces import NegativeRadicand, hausdorff_young_check, lp_norm, phi_s, sobolev_inner, sobolev_norm
from .quantization import SymbolTable, op_apply, op_apply_star, schwartz_kernel, symbol_extract
from .calculus import AdmissibleFamily, adjoint_symbol, amplitude_reduce, compose, difference_apply
from .parametrix import apriori_check, elliptic_solve, ellipticity_check, parametrix

__version__ = "0.1.0"

__all__ = [
    "EigenData", "ModelProblem", "Window", "angle_weight", "eigendata", "eigenvalue", "window_for",
    "AliasingWarning", "GridFunction", "SpectralCoeffs", "WindowMismatch", "forward_l", "forward_lstar",
    "inverse_l", "inverse_lstar", "l2_inner", "l2_norm", "plancherel_pair",
    "conv_integral_oh1", "conv_spectral", "conv_star_spectral",
    "NegativeRadicand", "hausdorff_young_check", "lp_norm", "phi_s", "sobolev_inner", "sobolev_norm",
    "SymbolTable", "op_apply", "op_apply_star", "schwartz_kernel", "symbol_extract",
    "AdmissibleFamily", "adjoint_symbol", "amplitude_reduce", "compose", "difference_apply",
    "apriori_check", "elliptic_solve", "ellipticity_check", "parametrix",
]
