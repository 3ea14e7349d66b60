// SPDX-License-Identifier: Apache-2.0
#include "gkp/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace gkp {

namespace {

// sum_{n=m}^{M} 4^{-n} scaled by 2^{a+b}: (4/3)(2^{a+b-2m} - 2^{a+b-2M-2}).
double kernel_entry(int a, int b, int rounds) {
    const int m = std::max(a, b);
    return (4.0 / 3.0) * (std::ldexp(1.0, a + b - 2 * m) - std::ldexp(1.0, a + b - 2 * rounds - 2));
}

void require_convergent(double sigma0, double delta) {
    if (!(sigma0 / delta < 0.5)) {
        throw ConvergenceError("Neumann series requires sigma0/Delta < 1/2");
    }
}

}  // namespace

double likelihood_width(double delta, Quadrature quadrature) {
    return quadrature == Quadrature::Q ? delta : 2.0 * delta;
}

PosteriorEstimate single_round_estimate(const GkpParams& params, double sigma0, double m, Quadrature quadrature) {
    const double d = likelihood_width(params.delta(), quadrature);
    const double f = wrap_to_lattice(kSqrt2 * m);
    PosteriorEstimate e;
    e.mean = sigma0 * sigma0 * f / (d * d + sigma0 * sigma0);
    e.variance = d * d * sigma0 * sigma0 / (d * d + sigma0 * sigma0);
    e.quadrature = quadrature;
    e.rounds_used = 1;
    e.method = PosteriorMethod::SingleRound;
    e.outside_small_width_regime = !(d < 0.5 * kSqrtPi && sigma0 < 0.5 * kSqrtPi);
    return e;
}

double memoryless_correction(const GkpParams& params, double sigma0, double m, Quadrature quadrature) {
    const double u_est = single_round_estimate(params, sigma0, m, quadrature).mean;
    return 0.5 * u_est - f_step_star(m);
}

PrecisionMatrix build_precision_matrix(int rounds, double sigma0, double delta) {
    if (rounds <= 0) throw DomainError("build_precision_matrix: rounds must be >= 1");
    if (!(sigma0 > 0.0) || !(delta > 0.0)) throw DomainError("build_precision_matrix: widths must be positive");
    PrecisionMatrix p{rounds, sigma0, delta, Eigen::MatrixXd(rounds, rounds)};
    const double inv_s2 = 1.0 / (sigma0 * sigma0);
    const double inv_d2 = 1.0 / (delta * delta);
    for (int a = 1; a <= rounds; ++a) {
        for (int b = 1; b <= rounds; ++b) {
            p.entries(a - 1, b - 1) = (a == b ? inv_s2 : 0.0) + inv_d2 * kernel_entry(a, b, rounds);
        }
    }
    return p;
}

Eigen::MatrixXd covariance_neumann(const PrecisionMatrix& precision, int order) {
    if (order < 0) throw DomainError("covariance_neumann: order must be >= 0");
    require_convergent(precision.sigma0, precision.delta);
    const int n = precision.m;
    const double s2 = precision.sigma0 * precision.sigma0;
    const double r = s2 / (precision.delta * precision.delta);
    Eigen::MatrixXd k(n, n);
    for (int a = 1; a <= n; ++a)
        for (int b = 1; b <= n; ++b) k(a - 1, b - 1) = kernel_entry(a, b, n);
    const Eigen::MatrixXd step = -r * k;
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd sum = term;
    for (int i = 1; i <= order; ++i) {
        term = term * step;
        sum += term;
    }
    return s2 * sum;
}

std::vector<double> wrap_measurements(std::span<const double> effective) {
    std::vector<double> f(effective.size());
    for (std::size_t i = 0; i < effective.size(); ++i) f[i] = wrap_to_lattice(kSqrt2 * effective[i]);
    return f;
}

std::vector<double> u_tilde(std::span<const double> f, double sigma0, double delta) {
    require_convergent(sigma0, delta);
    const int m = static_cast<int>(f.size());
    const double r = (sigma0 / delta) * (sigma0 / delta);
    // scaled suffix sums: t[h] = 2^h sum_{j>=h} F_j / 2^j
    std::vector<double> t(f.size() + 1, 0.0);
    for (int h = m; h >= 1; --h) t[h] = f[h - 1] + 0.5 * (h < m ? t[h + 1] : 0.0);
    std::vector<double> u(f.size());
    for (int k = 1; k <= m; ++k) {
        double second = 0.0;
        for (int h = 1; h <= m; ++h) second += kernel_entry(k, h, m) * t[h];
        u[k - 1] = r * (t[k] - r * second);
    }
    return u;
}

double v_q_closed_form(int rounds, double sigma0, double delta, Quadrature quadrature) {
    if (rounds < 1) throw DomainError("v_q_closed_form: rounds must be >= 1");
    const double d = likelihood_width(delta, quadrature);
    const double r = (sigma0 / d) * (sigma0 / d);
    const double q1 = std::ldexp(1.0, -2 * rounds);  // 4^{-M}
    return sigma0 * sigma0 / 3.0 *
           ((1.0 - q1) + r * (4.0 / 9.0) * (q1 * q1 + 3.0 * (1.0 + 2.0 * rounds) * q1 - 4.0));
}

PosteriorEstimate exact_posterior(std::span<const double> f, double sigma0, double delta, Quadrature quadrature) {
    const int m = static_cast<int>(f.size());
    if (m < 1) throw DomainError("exact_posterior: empty syndrome list");
    const double d = likelihood_width(delta, quadrature);
    const PrecisionMatrix p = build_precision_matrix(m, sigma0, d);
    Eigen::VectorXd b(m);
    double t = 0.0;
    for (int h = m; h >= 1; --h) {
        t = f[h - 1] + 0.5 * t;
        b(h - 1) = t / (d * d);
    }
    Eigen::VectorXd a(m);
    for (int k = 1; k <= m; ++k) a(k - 1) = std::ldexp(1.0, k - m - 1);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(p.entries);
    const Eigen::VectorXd mean = ldlt.solve(b);
    const Eigen::VectorXd sa = ldlt.solve(a);
    PosteriorEstimate e;
    e.mean = a.dot(mean);
    e.variance = a.dot(sa);
    e.quadrature = quadrature;
    e.rounds_used = m;
    e.method = PosteriorMethod::Exact;
    return e;
}

PosteriorEstimate combined_estimate(std::span<const double> f, double sigma0, double delta, Quadrature quadrature) {
    const int m = static_cast<int>(f.size());
    if (m < 1) throw DomainError("combined_estimate: empty syndrome list");
    const double d = likelihood_width(delta, quadrature);
    if (!(sigma0 / d < 0.5)) return exact_posterior(f, sigma0, delta, quadrature);
    const std::vector<double> u = u_tilde(f, sigma0, d);
    PosteriorEstimate e;
    for (int k = 1; k <= m; ++k) e.mean += std::ldexp(u[k - 1], k - m - 1);
    e.variance = v_q_closed_form(m, sigma0, delta, quadrature);
    e.quadrature = quadrature;
    e.rounds_used = m;
    e.method = PosteriorMethod::Neumann;
    return e;
}

Algorithm1Stream::Algorithm1Stream(double sigma0, double delta, Quadrature quadrature)
    : sigma0_(sigma0), delta_(delta), quadrature_(quadrature) {}

void Algorithm1Stream::push(double raw_syndrome) {
    const double x_eff = raw_syndrome + step_sum_ / kSqrt2;
    effective_.push_back(x_eff);
    wrapped_.push_back(wrap_to_lattice(kSqrt2 * x_eff));
    step_sum_ = 0.5 * step_sum_ + f_step_star(x_eff);
}

PosteriorEstimate Algorithm1Stream::estimate() const {
    return combined_estimate(wrapped_, sigma0_, delta_, quadrature_);
}

Algorithm1Result run_algorithm_1(std::span<const double> raw_syndromes, double sigma0, double delta,
                                 Quadrature quadrature) {
    if (raw_syndromes.empty()) throw DomainError("run_algorithm_1: empty syndrome list");
    Algorithm1Stream stream(sigma0, delta, quadrature);
    for (double x : raw_syndromes) stream.push(x);
    return {stream.estimate(), {stream.wrapped().begin(), stream.wrapped().end()},
            {stream.effective_measurements().begin(), stream.effective_measurements().end()}};
}

}  // namespace gkp
