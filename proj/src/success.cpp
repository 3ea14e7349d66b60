// SPDX-License-Identifier: Apache-2.0
#include "gkp/success.hpp"

#include <cmath>
#include <numbers>

namespace gkp {

namespace {

constexpr double kBetas[4] = {-0.5, 0.0, 0.5, 1.0};
const double kSqrt5 = std::sqrt(5.0);

double theta_nome(const GkpParams& params) {
    return std::exp(-std::numbers::pi * params.kappa() * params.kappa() / 2.0);
}

void check_width(double sigma0) {
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw DomainError("success: sigma0 must be positive");
}

// Last lattice index whose envelope weight is still above double resolution.
int lattice_reach(const GkpParams& params) {
    return static_cast<int>(std::ceil(std::sqrt(2.0 * 42.0) / (params.kappa() * kSqrtPi))) + 2;
}

// Failure probability over M rounds from a single-round failure f.
SuccessProbability power_bound(const SuccessProbability& one, int rounds) {
    if (rounds < 1) throw DomainError("success: rounds must be >= 1");
    SuccessProbability out;
    const double log_success = std::log1p(-one.failure);
    out.failure = -std::expm1(rounds * log_success);
    out.success = std::exp(rounds * log_success);
    out.error_estimate = rounds * one.error_estimate;
    return out;
}

}  // namespace

double tracking_normalization(const GkpParams& params, double sigma0) {
    check_width(sigma0);
    return 1.0 / (kSqrt2 * std::numbers::pi * sigma0 * params.delta() * jacobi_theta3(theta_nome(params)));
}

double joint_syndrome_density(const GkpParams& params, double sigma0, double u, double x_m) {
    const double c = tracking_normalization(params, sigma0);
    const double y = kSqrt2 * x_m - u;
    const long long centre = std::llround(y / kSqrtPi);
    const long long spread = static_cast<long long>(std::ceil(12.0 * params.delta() / kSqrtPi)) + 1;
    const double env = 1.0 / params.kappa();
    double sum = 0.0;
    for (long long n = centre - spread; n <= centre + spread; ++n) {
        const double c_n = static_cast<double>(n) * kSqrtPi;
        sum += gaussian(env, c_n) * gaussian(params.delta(), y - c_n);
    }
    return c * sum * gaussian(sigma0, u);
}

SuccessProbability tracking_success_single(const GkpParams& params, double sigma0) {
    check_width(sigma0);
    const double reach_u = 12.0 * sigma0;
    const int jmax = lattice_reach(params);
    AdaptiveOptions opt;
    opt.rel_tol = 1e-8;
    opt.abs_tol = 1e-22;
    opt.max_depth = 10;
    double failure = 0.0, error = 0.0;
    for (int j = -jmax - 1; j <= jmax; ++j) {
        const double b = (j + 0.5) * kSqrtHalfPi;
        auto integrand = [&](double u, double tau) {
            return joint_syndrome_density(params, sigma0, u, b + tau * u / kSqrt2) * std::abs(u) / kSqrt2;
        };
        for (const double sign : {-1.0, 1.0}) {
            const auto r = integrate_2d(integrand, sign < 0 ? -reach_u : 0.0, sign < 0 ? 0.0 : reach_u, 0.0, 1.0, opt);
            failure += r.value;
            error += r.error;
        }
    }
    return {1.0 - failure, failure, error};
}

SuccessProbability tracking_success_multi(const GkpParams& params, double sigma0, int rounds) {
    return power_bound(tracking_success_single(params, 2.0 * sigma0 / kSqrt5), rounds);
}

BranchGram branch_gram(const GkpParams& params, std::complex<double> a0, std::complex<double> a1,
                       const GridSpec& spec) {
    const GkpParams primed = params.primed();
    std::vector<WaveGrid1D> branches;
    branches.reserve(4);
    for (double beta : kBetas) branches.push_back(prepare_qubit(primed, a0, a1, spec, beta));
    BranchGram g;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) g.entries[a][b] = inner_product(branches[a], branches[b]);
    return g;
}

double truncation_amplitude_squared(const GkpParams& params, const BranchGram& gram, double t) {
    const GkpParams primed = params.primed();
    const auto trunc = LatticeTruncation::for_params(primed);
    double w[4];
    for (int k = 0; k < 4; ++k) w[k] = gkp_wavefunction(primed, -kBetas[k], trunc, 0.5 * t);
    // dominant branch: -beta = round(t / sqrt(pi)) / 2 mod 2, folded into [-1/2, 1]
    const long long r = std::llround(t / kSqrtPi);
    double minus_beta = std::fmod(-0.5 * static_cast<double>(r), 2.0);
    if (minus_beta < 0.0) minus_beta += 2.0;
    if (minus_beta > 1.25) minus_beta -= 2.0;
    const int dom = static_cast<int>(std::lround(2.0 * minus_beta)) + 1;  // -1/2 -> 0, ..., 1 -> 3
    std::complex<double> a = 0.0, norm = 0.0;
    for (int k = 0; k < 4; ++k) {
        a += gram.entries[dom][k] * w[k];
        for (int l = 0; l < 4; ++l) norm += w[k] * gram.entries[k][l] * w[l];
    }
    const double denom = norm.real() * gram.entries[dom][dom].real();
    if (!(denom > 0.0)) return 0.0;
    return std::norm(a) / denom;
}

double truncation_t_density(const GkpParams& params, double t) {
    const long long centre = std::llround(t / kSqrtPi);
    const long long spread = static_cast<long long>(std::ceil(12.0 * params.delta() / kSqrtPi)) + 1;
    const double env = 1.0 / params.kappa();
    double sum = 0.0;
    for (long long n = centre - spread; n <= centre + spread; ++n) {
        const double c_n = static_cast<double>(n) * kSqrtPi;
        sum += gaussian(env, c_n) * gaussian(params.delta(), t - c_n);
    }
    const double norm = params.delta() * std::sqrt(2.0 * std::numbers::pi) * jacobi_theta3(theta_nome(params));
    return sum / norm;
}

SuccessProbability truncation_success_single(const GkpParams& params, double sigma0, std::complex<double> a0,
                                             std::complex<double> a1, const GridSpec& spec) {
    check_width(sigma0);
    const BranchGram gram = branch_gram(params, a0, a1, spec);
    const int kmax = lattice_reach(params);
    AdaptiveOptions opt;
    opt.rel_tol = 1e-9;
    opt.abs_tol = 1e-17;  // 1 - |A|^2 carries ~1e-16 cancellation noise
    double failure = 0.0, error = 0.0;
    for (int k = -kmax; k <= kmax; ++k) {
        auto integrand = [&](double t) {
            return (1.0 - truncation_amplitude_squared(params, gram, t)) * truncation_t_density(params, t);
        };
        const auto r = integrate_1d(integrand, (k - 0.5) * kSqrtPi, (k + 0.5) * kSqrtPi, opt);
        failure += r.value;
        error += r.error;
    }
    return {1.0 - failure, failure, error};
}

SuccessProbability truncation_success_multi(const GkpParams& params, double sigma0, int rounds,
                                            std::complex<double> a0, std::complex<double> a1, const GridSpec& spec) {
    return power_bound(truncation_success_single(params, 2.0 * sigma0 / kSqrt5, a0, a1, spec), rounds);
}

double qubit_fidelity_bound(double f_rho, double p_succ) {
    if (!(f_rho >= 0.5 && f_rho <= 1.0)) throw DomainError("qubit_fidelity_bound: f_rho must lie in [1/2, 1]");
    if (!(p_succ >= 0.0 && p_succ <= 1.0)) throw DomainError("qubit_fidelity_bound: p_succ must lie in [0, 1]");
    return (f_rho - 0.5) * p_succ + 0.5;
}

}  // namespace gkp
