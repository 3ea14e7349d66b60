// SPDX-License-Identifier: Apache-2.0
//
// Math primitives for finite-energy GKP states: Gaussians, the Gaussian-comb
// codeword wavefunctions, lattice truncation and the rounding/step functions
// that describe measurement-induced shifts.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gkp {

inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kSqrtHalfPi = 1.2533141373155002512;  // sqrt(pi/2)
inline constexpr double kSqrt2 = std::numbers::sqrt2;

class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

enum class Quadrature { Q, P };

inline const char* to_string(Quadrature q) { return q == Quadrature::Q ? "q" : "p"; }

/// Code widths (Delta, kappa). Delta is the peak width, 1/kappa the envelope width.
class GkpParams {
  public:
    GkpParams(double delta, double kappa);

    double delta() const { return delta_; }
    double kappa() const { return kappa_; }

    /// Widths of the state emerging from a q-SE step: (Delta/sqrt2, kappa*sqrt2).
    GkpParams primed() const;

    /// Widths seen by the p-quadrature likelihood: (2 Delta, kappa/2).
    GkpParams for_quadrature(Quadrature q) const;

  private:
    double delta_;
    double kappa_;
};

/// Cutoff on the comb index s in |s| <= s_max.
struct LatticeTruncation {
    int s_max = 0;
    double tail_epsilon = 0.0;

    /// Smallest s_max with G_{1/kappa}((2 s_max + 2) sqrt(pi)) < tail_epsilon.
    static LatticeTruncation for_params(const GkpParams& params, double tail_epsilon = 1e-12);
};

/// exp(-z^2 / (2 sigma^2)).
double gaussian(double sigma, double z);

/// Unnormalized codeword sum over s of G_{1/kappa}[(2s+mu)sqrt(pi)] G_Delta[x-(2s+mu)sqrt(pi)].
double gkp_wavefunction(const GkpParams& params, double mu, const LatticeTruncation& trunc, double x);

/// psi_0 + psi_1, both unnormalized; equivalent to a comb on every multiple of sqrt(pi).
double gkp_plus_wavefunction(const GkpParams& params, const LatticeTruncation& trunc, double x);

/// L2 normalization constant N_mu such that N_mu * gkp_wavefunction has unit norm.
/// Uses the exact pairwise Gaussian overlap sum over retained comb terms.
double gkp_normalizer(const GkpParams& params, double mu, const LatticeTruncation& trunc);

/// Nearest integer, ties away from zero.
long long round_nearest(double x);

/// Least non-negative residue of n modulo 4.
int rem4(long long n);

/// Centered residue of n modulo 4 in {-1, 0, 1, 2}.
int rem4_centered(long long n);

/// s(x) = rem(round(x / sqrt(pi/2)), 4) / 2.
double s_step(double x);

/// f*(x) = (sqrt(pi)/2) rem*(round(x / sqrt(pi/2)), 4).
double f_step_star(double x);

/// Wrapped measurement F = y - sqrt(pi) round(y / sqrt(pi)), |F| <= sqrt(pi)/2.
double wrap_to_lattice(double y);

/// Jacobi theta Theta_3(0, q) = sum_n q^{n^2} for 0 <= q < 1.
double jacobi_theta3(double nome, double term_cutoff = 1e-15);

}  // namespace gkp
