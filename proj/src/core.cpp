// SPDX-License-Identifier: Apache-2.0
#include "gkp/core.hpp"

#include <cmath>
#include <limits>

namespace gkp {

GkpParams::GkpParams(double delta, double kappa) : delta_(delta), kappa_(kappa) {
    if (!(delta > 0.0) || !(kappa > 0.0)) {
        throw DomainError("GkpParams: widths must be positive");
    }
    if (!(delta * kappa < 1.0)) {
        throw DomainError("GkpParams: require delta * kappa < 1");
    }
}

GkpParams GkpParams::primed() const { return GkpParams(delta_ / kSqrt2, kappa_ * kSqrt2); }

GkpParams GkpParams::for_quadrature(Quadrature q) const {
    if (q == Quadrature::Q) return *this;
    return GkpParams(2.0 * delta_, kappa_ / 2.0);
}

LatticeTruncation LatticeTruncation::for_params(const GkpParams& params, double tail_epsilon) {
    if (!(tail_epsilon > 0.0 && tail_epsilon < 1.0)) {
        throw DomainError("LatticeTruncation: tail_epsilon must lie in (0, 1)");
    }
    const double sigma = 1.0 / params.kappa();
    LatticeTruncation t{0, tail_epsilon};
    while (gaussian(sigma, (2.0 * t.s_max + 2.0) * kSqrtPi) >= tail_epsilon) {
        ++t.s_max;
    }
    return t;
}

double gaussian(double sigma, double z) {
    if (!(sigma > 0.0)) throw DomainError("gaussian: sigma must be positive");
    return std::exp(-z * z / (2.0 * sigma * sigma));
}

namespace {

// Comb indices are centred on the term nearest the envelope peak so that
// arbitrary peak offsets mu keep the retained window symmetric.
long long comb_centre(double mu) { return round_nearest(-mu / 2.0); }

}  // namespace

double gkp_wavefunction(const GkpParams& params, double mu, const LatticeTruncation& trunc, double x) {
    const double env_sigma = 1.0 / params.kappa();
    const double delta = params.delta();
    const long long c = comb_centre(mu);
    double sum = 0.0;
    for (long long s = c - trunc.s_max; s <= c + trunc.s_max; ++s) {
        const double peak = (2.0 * static_cast<double>(s) + mu) * kSqrtPi;
        const double d = x - peak;
        sum += std::exp(-peak * peak / (2.0 * env_sigma * env_sigma) - d * d / (2.0 * delta * delta));
    }
    return sum;
}

double gkp_plus_wavefunction(const GkpParams& params, const LatticeTruncation& trunc, double x) {
    return gkp_wavefunction(params, 0.0, trunc, x) + gkp_wavefunction(params, 1.0, trunc, x);
}

double gkp_normalizer(const GkpParams& params, double mu, const LatticeTruncation& trunc) {
    // int G_D(x-a) G_D(x-b) dx = D sqrt(pi) exp(-(a-b)^2 / (4 D^2))
    const double delta = params.delta();
    const double kappa = params.kappa();
    const long long c = comb_centre(mu);
    double norm2 = 0.0;
    for (long long s = c - trunc.s_max; s <= c + trunc.s_max; ++s) {
        const double a = (2.0 * static_cast<double>(s) + mu) * kSqrtPi;
        const double wa = std::exp(-0.5 * kappa * kappa * a * a);
        for (long long r = c - trunc.s_max; r <= c + trunc.s_max; ++r) {
            const double b = (2.0 * static_cast<double>(r) + mu) * kSqrtPi;
            const double wb = std::exp(-0.5 * kappa * kappa * b * b);
            norm2 += wa * wb * std::exp(-(a - b) * (a - b) / (4.0 * delta * delta));
        }
    }
    return 1.0 / std::sqrt(norm2 * delta * kSqrtPi);
}

long long round_nearest(double x) { return std::llround(x); }

int rem4(long long n) {
    const long long r = n % 4;
    return static_cast<int>(r < 0 ? r + 4 : r);
}

int rem4_centered(long long n) {
    const int r = rem4(n);
    return r == 3 ? -1 : r;
}

double s_step(double x) { return 0.5 * rem4(round_nearest(x / kSqrtHalfPi)); }

double f_step_star(double x) { return 0.5 * kSqrtPi * rem4_centered(round_nearest(x / kSqrtHalfPi)); }

double wrap_to_lattice(double y) {
    return y - kSqrtPi * static_cast<double>(round_nearest(y / kSqrtPi));
}

double jacobi_theta3(double nome, double term_cutoff) {
    if (!(nome >= 0.0 && nome < 1.0)) throw DomainError("jacobi_theta3: nome must lie in [0, 1)");
    double sum = 1.0;
    for (long long n = 1;; ++n) {
        const double term = 2.0 * std::pow(nome, static_cast<double>(n * n));
        sum += term;
        if (term < term_cutoff * sum) break;
    }
    return sum;
}

}  // namespace gkp
