// SPDX-License-Identifier: Apache-2.0
//
// Analytic model of repeated displacement error + syndrome extraction.
//
// After h rounds without correction the qubit is displaced by
//   theta_h = theta_err(u) - theta_step(x_m),
// where theta_err = sum_j u_j / 2^{h-j+1} is the (unknown) accumulated error and
// theta_step = sum_k f*(X_k) / 2^{h-k} is the (known) measurement-induced part.
// The effective measurement X_h and effective error U_h obey
//   X_h = x_m^(h) + (1/sqrt2) S_h,   U_h = u_h + A_h - S_h,
// with running accumulators S_{h+1} = S_h/2 + f*(X_h), A_{h+1} = (A_h + u_h)/2.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gkp/core.hpp"
#include "gkp/rng.hpp"

namespace gkp {

struct ErrorChannel {
    explicit ErrorChannel(double sigma0);
    double sigma0;
};

struct ErrorSample {
    double u;
    double v;
};

ErrorSample sample_error(const ErrorChannel& channel, CounterRng& rng);

/// psi_+(sqrt2 m - effective_error) with the quadrature's widths; unnormalized.
double syndrome_likelihood(const GkpParams& params, Quadrature quadrature, double effective_error, double m);

/// Inverse-CDF sampler for the syndrome likelihood. The likelihood depends on
/// (m, effective error) only through sqrt2 m - effective error, so a single
/// table at zero error serves every round.
class SyndromeSampler {
  public:
    SyndromeSampler(const GkpParams& params, Quadrature quadrature);

    double sample(double effective_error, CounterRng& rng) const;

    /// Normalized density and CDF of m at zero effective error (table interpolation).
    double density(double m) const;
    double cdf(double m) const;

    double half_width() const { return half_width_; }
    double step() const { return step_; }
    Quadrature quadrature() const { return quadrature_; }

  private:
    Quadrature quadrature_;
    double half_width_;
    double step_;
    std::vector<double> pdf_;
    std::vector<double> cdf_;
};

struct RoundRecord {
    double u = 0, v = 0;          // true errors this round
    double x_m = 0, p_m = 0;      // raw syndromes
    double x_eff = 0, p_eff = 0;  // effective measurements
    double u_eff = 0, v_eff = 0;  // effective errors entering this round's likelihood
};

struct ShiftLedger {
    double theta_err_q = 0, theta_step_q = 0;
    double theta_err_p = 0, theta_step_p = 0;

    double total_q() const { return theta_err_q - theta_step_q; }
    double total_p() const { return theta_err_p - theta_step_p; }
};

/// Running geometric accumulators for one quadrature.
struct ShiftAccumulator {
    double step_sum = 0.0;   // S_h
    double error_sum = 0.0;  // A_h

    double effective_measurement(double m) const { return m + step_sum / kSqrt2; }
    double effective_error(double e) const { return e + error_sum - step_sum; }
    /// Folds round h in; afterwards error_sum = theta_err(h), step_sum = theta_step(h).
    void push(double e, double effective_m) {
        step_sum = 0.5 * step_sum + f_step_star(effective_m);
        error_sum = 0.5 * (error_sum + e);
    }
};

class SyndromeHistory {
  public:
    SyndromeHistory(GkpParams params, ErrorChannel channel, std::uint64_t rng_seed = 0);

    /// Appends a round given true errors and raw syndromes.
    const RoundRecord& advance_round(double u, double v, double x_m, double p_m);

    /// Effective errors the next round's likelihood would see for errors (u, v).
    double next_effective_error(Quadrature q, double error) const;

    std::span<const RoundRecord> rounds() const { return rounds_; }
    std::size_t size() const { return rounds_.size(); }
    const GkpParams& params() const { return params_; }
    const ErrorChannel& channel() const { return channel_; }
    std::uint64_t rng_seed() const { return rng_seed_; }

    /// Ledger after all recorded rounds, from the running accumulators.
    ShiftLedger current_ledger() const;

  private:
    GkpParams params_;
    ErrorChannel channel_;
    std::uint64_t rng_seed_;
    std::vector<RoundRecord> rounds_;
    ShiftAccumulator q_;
    ShiftAccumulator p_;
};

/// Flat-sum shift decomposition after round h (1-based). Cross-checks the
/// nested form sum_k theta(X_k, u_k) / 2^{h-k} and throws std::logic_error on mismatch.
ShiftLedger total_shift(const SyndromeHistory& history, std::size_t h);

/// Nested form sum_k (u_k/2 - f*(X_k)) / 2^{h-k} for one quadrature.
double total_shift_nested(const SyndromeHistory& history, std::size_t h, Quadrature q);

/// Samplers for both quadratures, built once and shared read-only across trials.
struct SamplerPair {
    SamplerPair(const GkpParams& params) : q(params, Quadrature::Q), p(params, Quadrature::P) {}
    SyndromeSampler q;
    SyndromeSampler p;
};

/// One trial of M rounds of error followed by q-SE and p-SE, drawing syndromes
/// from the likelihood at the current effective error.
SyndromeHistory simulate_trial(const GkpParams& params, const ErrorChannel& channel, const SamplerPair& samplers,
                               int rounds, CounterRng& rng);

struct DriftStatistics {
    int rounds = 0;
    double step_bound = 0.0;  // 2 sqrt(pi) (1 - 2^{-M})
    double error_variance_prediction = 0.0;  // sigma0^2 (1 - 4^{-M}) / 3
    std::vector<double> abs_theta_q, abs_theta_p;
    std::vector<double> theta_step_q, theta_step_p;
    std::vector<double> theta_err_q, theta_err_p;
};

/// Monte Carlo of |theta_M| over independent trials; trial t uses stream split(t) of seed.
DriftStatistics drift_statistics(const GkpParams& params, const ErrorChannel& channel, int rounds, int trials,
                                 std::uint64_t seed);

}  // namespace gkp
