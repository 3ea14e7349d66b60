// SPDX-License-Identifier: Apache-2.0
//
// Memoryless (single-round) and memory-assisted (multi-round) MMSE decoders.
//
// Over M rounds the q-quadrature posterior of the error vector u is, in the
// Laplace approximation, Gaussian with precision
//   Sigma^{-1} = I / sigma0^2 + K / Delta^2,
//   K_{ab} = sum_{h=max(a,b)}^{M} 2^{a+b} / 4^h,
// and linear term b_k = 2^k sum_{j>=k} F_j / 2^j / Delta^2. The decoder
// estimates theta_M^err = a . u with a_k = 2^{-(M+1-k)}.
#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "gkp/core.hpp"

namespace gkp {

enum class PosteriorMethod { SingleRound, Neumann, Exact };

struct PosteriorEstimate {
    double mean = 0.0;
    double variance = 0.0;
    Quadrature quadrature = Quadrature::Q;
    int rounds_used = 0;
    PosteriorMethod method = PosteriorMethod::Neumann;
    bool outside_small_width_regime = false;
};

class ConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Peak width the likelihood of `quadrature` sees: Delta for Q, 2 Delta for P.
double likelihood_width(double delta, Quadrature quadrature);

PosteriorEstimate single_round_estimate(const GkpParams& params, double sigma0, double m, Quadrature quadrature);

/// theta(m, u~) = u~/2 - f*(m), the memoryless corrective estimate.
double memoryless_correction(const GkpParams& params, double sigma0, double m, Quadrature quadrature);

struct PrecisionMatrix {
    int m = 0;
    double sigma0 = 0.0;
    double delta = 0.0;
    Eigen::MatrixXd entries;
};

/// K_{ab} / Delta^2 part via the geometric tail (4/3)(4^{-max} - 4^{-M-1}) 2^{a+b}.
PrecisionMatrix build_precision_matrix(int rounds, double sigma0, double delta);

/// Neumann expansion sigma0^2 sum_{n=0}^{order} (-r K)^n, r = (sigma0/Delta)^2.
/// Throws ConvergenceError when sigma0/Delta >= 1/2.
Eigen::MatrixXd covariance_neumann(const PrecisionMatrix& precision, int order);

/// Wrapped effective measurements F_h; |F_h| <= sqrt(pi)/2.
std::vector<double> wrap_measurements(std::span<const double> effective);

/// u~_k to order (sigma0/Delta)^4, O(M^2) with suffix sums. delta here is the
/// likelihood width (already substituted for the p quadrature).
std::vector<double> u_tilde(std::span<const double> f, double sigma0, double delta);

/// Second-order closed-form variance of theta_M^err.
double v_q_closed_form(int rounds, double sigma0, double delta, Quadrature quadrature);

/// Exact Laplace-approximation posterior via direct inversion of the precision matrix.
PosteriorEstimate exact_posterior(std::span<const double> f, double sigma0, double delta, Quadrature quadrature);

/// Memory-assisted estimate of theta_M^err from wrapped measurements. Uses the
/// series form when sigma0/likelihood-width < 1/2, exact inversion otherwise.
PosteriorEstimate combined_estimate(std::span<const double> f, double sigma0, double delta, Quadrature quadrature);

/// Streaming estimator: consumes raw syndromes one round at a time.
class Algorithm1Stream {
  public:
    Algorithm1Stream(double sigma0, double delta, Quadrature quadrature = Quadrature::Q);

    void push(double raw_syndrome);

    std::span<const double> effective_measurements() const { return effective_; }
    std::span<const double> wrapped() const { return wrapped_; }
    /// theta_M^err estimate and its variance from everything pushed so far.
    PosteriorEstimate estimate() const;

  private:
    double sigma0_;
    double delta_;
    Quadrature quadrature_;
    double step_sum_ = 0.0;
    std::vector<double> effective_;
    std::vector<double> wrapped_;
};

struct Algorithm1Result {
    PosteriorEstimate estimate;
    std::vector<double> wrapped;
    std::vector<double> effective;
};

Algorithm1Result run_algorithm_1(std::span<const double> raw_syndromes, double sigma0, double delta,
                                 Quadrature quadrature = Quadrature::Q);

}  // namespace gkp
