// SPDX-License-Identifier: Apache-2.0
//
// Per-round success probabilities of syndrome extraction and the qubit
// fidelity bound built from them.
//
// One round of q-SE on an error u produces x_m with joint density
//   P(u, x_m) = C sum_n G_{1/kappa}(n sqrt(pi)) G_Delta(sqrt2 x_m - u - n sqrt(pi)) G_sigma0(u),
// G_s(z) = exp(-z^2 / 2 s^2), C = [sqrt2 pi sigma0 Delta Theta_3(0, exp(-pi kappa^2 / 2))]^{-1}.
//
// Tracking fails when the decoded step f*(x_m) differs from f*(x_m - u/sqrt2),
// the step the error-free outcome would have produced. Truncation fails when
// the output is not the single dominant branch of the four half-lattice
// components; its probability depends on t = sqrt2 x_m - u only.
#pragma once

#include <complex>

#include "gkp/core.hpp"
#include "gkp/grid.hpp"
#include "gkp/quadrature.hpp"

namespace gkp {

/// Normalization C of the joint density, from the theta-function closed form.
double tracking_normalization(const GkpParams& params, double sigma0);

/// P(u, x_m) as above.
double joint_syndrome_density(const GkpParams& params, double sigma0, double u, double x_m);

struct SuccessProbability {
    double success = 1.0;
    double failure = 0.0;  // computed directly, not as 1 - success, to keep precision
    double error_estimate = 0.0;
};

/// Single round. The failure region is integrated boundary by boundary as
/// x_m = b_j + tau u / sqrt2, tau in [0, 1]. Throws QuadratureError.
SuccessProbability tracking_success_single(const GkpParams& params, double sigma0);

/// Lower bound over M rounds: [P_1(2 sigma0 / sqrt5)]^M.
SuccessProbability tracking_success_multi(const GkpParams& params, double sigma0, int rounds);

/// Gram matrix of the four normalized half-lattice branches a0 Q_beta + a1 Q_{1+beta},
/// beta in {-1/2, 0, 1/2, 1}, at the primed widths, by grid quadrature.
struct BranchGram {
    std::complex<double> entries[4][4] = {};
};
BranchGram branch_gram(const GkpParams& params, std::complex<double> a0, std::complex<double> a1,
                       const GridSpec& spec = {});

/// |A|^2 at t = sqrt2 x_m - u: weight of the dominant branch in the output.
double truncation_amplitude_squared(const GkpParams& params, const BranchGram& gram, double t);

/// Normalized density of t, sum_n G_{1/kappa}(n sqrt(pi)) G_Delta(t - n sqrt(pi)) / (Delta sqrt(2 pi) Theta_3).
double truncation_t_density(const GkpParams& params, double t);

/// Single round: integral of (1 - |A|^2) against the t density, cell by cell.
/// The joint density factorizes in (u, t), so sigma0 only enters the multi-round bound.
SuccessProbability truncation_success_single(const GkpParams& params, double sigma0,
                                             std::complex<double> a0 = 1.0, std::complex<double> a1 = 0.0,
                                             const GridSpec& spec = {});

/// Lower bound over M rounds: [P_1(2 sigma0 / sqrt5)]^M.
SuccessProbability truncation_success_multi(const GkpParams& params, double sigma0, int rounds,
                                            std::complex<double> a0 = 1.0, std::complex<double> a1 = 0.0,
                                            const GridSpec& spec = {});

/// F = (f_rho - 1/2) p_succ + 1/2. Throws DomainError unless f_rho in [1/2, 1] and p_succ in [0, 1].
double qubit_fidelity_bound(double f_rho, double p_succ);

}  // namespace gkp
