// SPDX-License-Identifier: Apache-2.0
#include "gkp/shift_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gkp {

ErrorChannel::ErrorChannel(double sigma) : sigma0(sigma) {
    if (!(sigma > 0.0)) throw DomainError("ErrorChannel: sigma0 must be positive");
}

ErrorSample sample_error(const ErrorChannel& channel, CounterRng& rng) {
    const double u = channel.sigma0 * rng.normal();
    const double v = channel.sigma0 * rng.normal();
    return {u, v};
}

double syndrome_likelihood(const GkpParams& params, Quadrature quadrature, double effective_error, double m) {
    const GkpParams widths = params.for_quadrature(quadrature);
    const auto trunc = LatticeTruncation::for_params(widths);
    return gkp_plus_wavefunction(widths, trunc, kSqrt2 * m - effective_error);
}

SyndromeSampler::SyndromeSampler(const GkpParams& params, Quadrature quadrature)
    : quadrature_(quadrature), step_(kSqrtPi / 400.0) {
    const GkpParams widths = params.for_quadrature(quadrature);
    const auto trunc = LatticeTruncation::for_params(widths);
    // Envelope of psi_+(sqrt2 m) has width 1/(sqrt2 kappa) in m; cover nine of them.
    half_width_ = std::max(6.0 * kSqrtPi, 9.0 / (kSqrt2 * widths.kappa()));
    const auto n = static_cast<std::size_t>(std::ceil(2.0 * half_width_ / step_)) + 1;
    half_width_ = 0.5 * step_ * static_cast<double>(n - 1);
    pdf_.resize(n);
    cdf_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = -half_width_ + step_ * static_cast<double>(i);
        pdf_[i] = gkp_plus_wavefunction(widths, trunc, kSqrt2 * m);
    }
    cdf_[0] = 0.0;
    for (std::size_t i = 1; i < n; ++i) cdf_[i] = cdf_[i - 1] + 0.5 * step_ * (pdf_[i - 1] + pdf_[i]);
    const double total = cdf_.back();
    for (std::size_t i = 0; i < n; ++i) {
        pdf_[i] /= total;
        cdf_[i] /= total;
    }
}

double SyndromeSampler::sample(double effective_error, CounterRng& rng) const {
    const double shift = effective_error / kSqrt2;
    if (!(std::abs(shift) < half_width_)) {
        std::ostringstream msg;
        msg << "SyndromeSampler: effective error " << effective_error << " drifts beyond the tabulated window +/-"
            << half_width_;
        throw std::out_of_range(msg.str());
    }
    const double target = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    const auto hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - cdf_.begin(), 1, cdf_.size() - 1));
    const std::size_t lo = hi - 1;
    const double span = cdf_[hi] - cdf_[lo];
    const double frac = span > 0.0 ? (target - cdf_[lo]) / span : 0.5;
    return -half_width_ + step_ * (static_cast<double>(lo) + frac) + shift;
}

double SyndromeSampler::density(double m) const {
    const double pos = (m + half_width_) / step_;
    if (pos < 0.0 || pos > static_cast<double>(pdf_.size() - 1)) return 0.0;
    const auto i = std::min(static_cast<std::size_t>(pos), pdf_.size() - 2);
    const double t = pos - static_cast<double>(i);
    return (1.0 - t) * pdf_[i] + t * pdf_[i + 1];
}

double SyndromeSampler::cdf(double m) const {
    const double pos = (m + half_width_) / step_;
    if (pos <= 0.0) return 0.0;
    if (pos >= static_cast<double>(cdf_.size() - 1)) return 1.0;
    const auto i = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(i);
    return (1.0 - t) * cdf_[i] + t * cdf_[i + 1];
}

SyndromeHistory::SyndromeHistory(GkpParams params, ErrorChannel channel, std::uint64_t rng_seed)
    : params_(params), channel_(channel), rng_seed_(rng_seed) {}

const RoundRecord& SyndromeHistory::advance_round(double u, double v, double x_m, double p_m) {
    RoundRecord r;
    r.u = u;
    r.v = v;
    r.x_m = x_m;
    r.p_m = p_m;
    r.x_eff = q_.effective_measurement(x_m);
    r.p_eff = p_.effective_measurement(p_m);
    r.u_eff = q_.effective_error(u);
    r.v_eff = p_.effective_error(v);
    q_.push(u, r.x_eff);
    p_.push(v, r.p_eff);
    rounds_.push_back(r);
    return rounds_.back();
}

double SyndromeHistory::next_effective_error(Quadrature q, double error) const {
    return (q == Quadrature::Q ? q_ : p_).effective_error(error);
}

ShiftLedger SyndromeHistory::current_ledger() const {
    return {q_.error_sum, q_.step_sum, p_.error_sum, p_.step_sum};
}

double total_shift_nested(const SyndromeHistory& history, std::size_t h, Quadrature q) {
    const auto rounds = history.rounds();
    if (h > rounds.size()) throw std::out_of_range("total_shift_nested: round beyond history");
    double theta = 0.0;
    for (std::size_t k = 1; k <= h; ++k) {
        const RoundRecord& r = rounds[k - 1];
        const double single = q == Quadrature::Q ? 0.5 * r.u - f_step_star(r.x_eff) : 0.5 * r.v - f_step_star(r.p_eff);
        theta += std::ldexp(single, -static_cast<int>(h - k));
    }
    return theta;
}

ShiftLedger total_shift(const SyndromeHistory& history, std::size_t h) {
    const auto rounds = history.rounds();
    if (h > rounds.size()) throw std::out_of_range("total_shift: round beyond history");
    ShiftLedger ledger;
    for (std::size_t j = 1; j <= h; ++j) {
        const RoundRecord& r = rounds[j - 1];
        const int err_exp = -static_cast<int>(h - j + 1);
        const int step_exp = -static_cast<int>(h - j);
        ledger.theta_err_q += std::ldexp(r.u, err_exp);
        ledger.theta_err_p += std::ldexp(r.v, err_exp);
        ledger.theta_step_q += std::ldexp(f_step_star(r.x_eff), step_exp);
        ledger.theta_step_p += std::ldexp(f_step_star(r.p_eff), step_exp);
    }
    const double nested_q = total_shift_nested(history, h, Quadrature::Q);
    const double nested_p = total_shift_nested(history, h, Quadrature::P);
    const double scale = 1.0 + std::abs(ledger.theta_step_q) + std::abs(ledger.theta_step_p);
    if (std::abs(nested_q - ledger.total_q()) > 1e-12 * scale ||
        std::abs(nested_p - ledger.total_p()) > 1e-12 * scale) {
        throw std::logic_error("total_shift: flat and nested shift forms disagree");
    }
    return ledger;
}

SyndromeHistory simulate_trial(const GkpParams& params, const ErrorChannel& channel, const SamplerPair& samplers,
                               int rounds, CounterRng& rng) {
    SyndromeHistory history(params, channel);
    for (int h = 0; h < rounds; ++h) {
        const ErrorSample e = sample_error(channel, rng);
        const double x_m = samplers.q.sample(history.next_effective_error(Quadrature::Q, e.u), rng);
        const double p_m = samplers.p.sample(history.next_effective_error(Quadrature::P, e.v), rng);
        history.advance_round(e.u, e.v, x_m, p_m);
    }
    return history;
}

DriftStatistics drift_statistics(const GkpParams& params, const ErrorChannel& channel, int rounds, int trials,
                                 std::uint64_t seed) {
    if (rounds < 1 || trials < 1) throw DomainError("drift_statistics: rounds and trials must be >= 1");
    DriftStatistics out;
    out.rounds = rounds;
    out.step_bound = 2.0 * kSqrtPi * (1.0 - std::ldexp(1.0, -rounds));
    out.error_variance_prediction = channel.sigma0 * channel.sigma0 * (1.0 - std::ldexp(1.0, -2 * rounds)) / 3.0;
    const auto n = static_cast<std::size_t>(trials);
    for (auto* v : {&out.abs_theta_q, &out.abs_theta_p, &out.theta_step_q, &out.theta_step_p, &out.theta_err_q,
                    &out.theta_err_p}) {
        v->assign(n, 0.0);
    }
    const SamplerPair samplers(params);
    const CounterRng base(seed, 0);
#pragma omp parallel for schedule(static)
    for (long long t = 0; t < trials; ++t) {
        CounterRng rng = base.split(static_cast<std::uint64_t>(t));
        const SyndromeHistory h = simulate_trial(params, channel, samplers, rounds, rng);
        const ShiftLedger l = h.current_ledger();
        const auto i = static_cast<std::size_t>(t);
        out.theta_err_q[i] = l.theta_err_q;
        out.theta_err_p[i] = l.theta_err_p;
        out.theta_step_q[i] = l.theta_step_q;
        out.theta_step_p[i] = l.theta_step_p;
        out.abs_theta_q[i] = std::abs(l.total_q());
        out.abs_theta_p[i] = std::abs(l.total_p());
    }
    return out;
}

}  // namespace gkp
