"""Anisotropic surface measures, polar-coordinate quadrature, and
convolution-power decay on Z^d."""

from .dilation import (DilationGroup, Endomorphism, dilate, group_laws_report,
                       is_contracting, mat_exp)
from .homogeneous import (PosHomFunction, make_weierstrass, norm_power, p1, p2,
                          polar_compose, polar_decompose, semi_elliptic,
                          subhom_check, sym_check)
from .lattice import (LatticeFunction, conv_power, convolve, find_omega,
                      fourier_eval, inversion_check)
from .expansion import (PointClassification, PowerSeries, classify,
                        classify_point, decompose, infer_weights, log_series,
                        mu_phi, taylor_at)
from .measure import (SigmaEstimate, SurfaceRegion, e_independence_test,
                      ft_relation_check, integrate_on_S, polar_integrate,
                      quasi_cone_volume, shell_derivative_check, sigma,
                      surface_ft, sym_invariance_test)
from .smoothsurface import (ChartPatch, chart_density, chart_integrate,
                            euler_identity_check, grad, volume_form_ratio_check)
from .decay import (DecayRecord, OscillatoryInstance, decay_curve,
                    hypothesis_gate, localization_report, localized_integral,
                    slope_fit, theorem_bound_check, van_der_corput_check)

__version__ = "0.1.0"
