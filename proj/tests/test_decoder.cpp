// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gkp/decoder.hpp"
#include "gkp/shift_model.hpp"

using namespace gkp;

namespace {

constexpr double kDelta = 0.2182;
const double kSigma0 = std::sqrt(0.0005);

// Precision matrix with the inner h sum evaluated term by term.
Eigen::MatrixXd precision_by_loop(int m, double s0, double d) {
    Eigen::MatrixXd p(m, m);
    for (int a = 1; a <= m; ++a)
        for (int b = 1; b <= m; ++b) {
            double inner = 0.0;
            for (int h = std::max(a, b); h <= m; ++h) inner += std::pow(2.0, a + b) / std::pow(4.0, h);
            p(a - 1, b - 1) = (a == b ? 1.0 / (s0 * s0) : 0.0) + inner / (d * d);
        }
    return p;
}

// Exact Gaussian posterior mean of a.u by completing the square.
double exact_mean_oracle(const std::vector<double>& f, double s0, double d) {
    const int m = static_cast<int>(f.size());
    const Eigen::MatrixXd sigma = precision_by_loop(m, s0, d).inverse();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    // likelihood sum_h (F_h - sum_{k<=h} 2^{k-h} u_k)^2 / 2 Delta^2
    for (int h = 1; h <= m; ++h)
        for (int k = 1; k <= h; ++k) b(k - 1) += std::pow(2.0, k - h) * f[h - 1] / (d * d);
    const Eigen::VectorXd mu = sigma * b;
    double out = 0.0;
    for (int k = 1; k <= m; ++k) out += mu(k - 1) * std::pow(2.0, k - m - 1);
    return out;
}

// Triple loop over (h, n, j) without suffix sums or geometric tails.
std::vector<double> u_tilde_naive(const std::vector<double>& f, double s0, double d) {
    const int m = static_cast<int>(f.size());
    const double r = (s0 / d) * (s0 / d);
    std::vector<double> u(m);
    for (int k = 1; k <= m; ++k) {
        double first = 0.0;
        for (int j = k; j <= m; ++j) first += f[j - 1] / std::pow(2.0, j);
        double second = 0.0;
        for (int h = 1; h <= m; ++h) {
            double tail = 0.0;
            for (int n = std::max(k, h); n <= m; ++n) tail += std::pow(2.0, k + h) / std::pow(4.0, n);
            double suffix = 0.0;
            for (int j = h; j <= m; ++j) suffix += f[j - 1] / std::pow(2.0, j);
            second += tail * suffix * std::pow(2.0, h);
        }
        u[k - 1] = r * (std::pow(2.0, k) * first - r * second);
    }
    return u;
}

std::vector<double> random_f(int m, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-0.5 * kSqrtPi, 0.5 * kSqrtPi);
    std::vector<double> f(m);
    for (double& x : f) x = dist(gen);
    return f;
}

}  // namespace

TEST_CASE("single round estimate") {
    const GkpParams params(kDelta, kDelta);
    SUBCASE("on-lattice syndrome gives zero mean") {
        CHECK(single_round_estimate(params, kSigma0, kSqrtPi / kSqrt2, Quadrature::Q).mean == doctest::Approx(0.0));
    }
    SUBCASE("wide prior trusts the measurement") {
        const auto e = single_round_estimate(params, 1e4, 0.1, Quadrature::Q);
        CHECK(e.mean == doctest::Approx(wrap_to_lattice(kSqrt2 * 0.1)).epsilon(1e-6));
        CHECK(e.outside_small_width_regime);
    }
    SUBCASE("mean matches 1D quadrature of the exact posterior") {
        const double m = 0.1;
        const auto trunc = LatticeTruncation::for_params(params);
        double num = 0.0, den = 0.0;
        const double lim = 12.0 * kSigma0;
        const int n = 20000;
        for (int i = 0; i <= n; ++i) {
            const double u = -lim + 2.0 * lim * i / n;
            const double w = gkp_plus_wavefunction(params, trunc, kSqrt2 * m - u) * std::exp(-u * u / (2 * kSigma0 * kSigma0));
            num += u * w;
            den += w;
        }
        const double mean = single_round_estimate(params, kSigma0, m, Quadrature::Q).mean;
        CHECK(std::abs(mean - num / den) < 0.02 * std::abs(num / den));
    }
    SUBCASE("p quadrature uses doubled peak width") {
        const double d = 2 * kDelta;
        const auto e = single_round_estimate(params, kSigma0, 0.1, Quadrature::P);
        CHECK(e.variance == doctest::Approx(d * d * kSigma0 * kSigma0 / (d * d + kSigma0 * kSigma0)));
    }
}

TEST_CASE("memoryless correction") {
    const GkpParams params(kDelta, kDelta);
    CHECK(memoryless_correction(params, kSigma0, 0.0, Quadrature::Q) == doctest::Approx(0.0));
    const double m = 0.37;
    const double est = single_round_estimate(params, kSigma0, m, Quadrature::Q).mean;
    CHECK(memoryless_correction(params, kSigma0, m, Quadrature::Q) == doctest::Approx(0.5 * est - f_step_star(m)));
}

TEST_CASE("memoryless residual variance matches posterior prediction") {
    const GkpParams params(kDelta, kDelta);
    const ErrorChannel channel(kSigma0);
    const SyndromeSampler sampler(params, Quadrature::Q);
    CounterRng rng(11, 0);
    const int n = 100000;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = channel.sigma0 * rng.normal();
        const double m = sampler.sample(u, rng);
        const double residual = 0.5 * u - 0.5 * single_round_estimate(params, kSigma0, m, Quadrature::Q).mean;
        sq += residual * residual;
    }
    const double predicted = 0.25 * kDelta * kDelta * kSigma0 * kSigma0 / (kDelta * kDelta + kSigma0 * kSigma0);
    CHECK(std::abs(sq / n / predicted - 1.0) < 0.10);
}

TEST_CASE("precision matrix") {
    SUBCASE("scalar case") {
        const auto p = build_precision_matrix(1, kSigma0, kDelta);
        CHECK(p.entries(0, 0) == doctest::Approx(1 / (kSigma0 * kSigma0) + 1 / (kDelta * kDelta)));
    }
    SUBCASE("geometric closed form equals explicit loop") {
        const auto p = build_precision_matrix(3, kSigma0, kDelta);
        const Eigen::MatrixXd ref = precision_by_loop(3, kSigma0, kDelta);
        CHECK(((p.entries - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff()) < 1e-14);
        CHECK((p.entries - p.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("huge Delta leaves the prior") {
        const auto p = build_precision_matrix(4, kSigma0, 1e12);
        CHECK((p.entries - Eigen::MatrixXd::Identity(4, 4) / (kSigma0 * kSigma0)).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("positive definite") {
        const auto p = build_precision_matrix(20, kSigma0, kDelta);
        CHECK(Eigen::LLT<Eigen::MatrixXd>(p.entries).info() == Eigen::Success);
    }
    CHECK_THROWS_AS(build_precision_matrix(0, kSigma0, kDelta), DomainError);
}

TEST_CASE("Neumann covariance") {
    const auto p = build_precision_matrix(5, kSigma0, kDelta);
    const Eigen::MatrixXd direct = p.entries.inverse();
    const double r2 = std::pow(kSigma0 / kDelta, 4);
    double previous = INFINITY;
    for (int order = 1; order <= 3; ++order) {
        const Eigen::MatrixXd c = covariance_neumann(p, order);
        const double gap = (c - direct).cwiseAbs().maxCoeff() / direct.cwiseAbs().maxCoeff();
        if (order == 1) CHECK(gap < 4.0 * r2);
        CHECK(gap < previous);
        previous = gap;
        CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-18);
    }
    const auto wide = build_precision_matrix(5, kSigma0, 1e300);
    for (int order = 0; order <= 3; ++order) {
        CHECK((covariance_neumann(wide, order) - kSigma0 * kSigma0 * Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK_THROWS_AS(covariance_neumann(build_precision_matrix(3, 0.5, 1.0), 1), ConvergenceError);
}

TEST_CASE("precision times Neumann covariance is near identity") {
    // C = 8 calibrated once at the default parameters and frozen
    const double r2 = std::pow(kSigma0 / kDelta, 4);
    for (int m = 1; m <= 20; ++m) {
        const auto p = build_precision_matrix(m, kSigma0, kDelta);
        const Eigen::MatrixXd prod = p.entries * covariance_neumann(p, 1);
        CHECK((prod - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() < 8.0 * r2);
    }
}

TEST_CASE("u tilde") {
    SUBCASE("zero input") {
        for (double u : u_tilde(std::vector<double>(7, 0.0), kSigma0, kDelta)) CHECK(u == 0.0);
    }
    SUBCASE("suffix-sum form equals triple loop") {
        for (int m : {1, 4, 17, 60}) {
            const auto f = random_f(m, 100 + m);
            const auto fast = u_tilde(f, kSigma0, kDelta);
            const auto slow = u_tilde_naive(f, kSigma0, kDelta);
            for (int k = 0; k < m; ++k) CHECK(fast[k] == doctest::Approx(slow[k]).epsilon(1e-12));
        }
    }
    SUBCASE("one round reduces to the series of the single-round ratio") {
        const double f1 = 0.3;
        const double exact = kSigma0 * kSigma0 * f1 / (kDelta * kDelta + kSigma0 * kSigma0);
        const double u1 = u_tilde(std::vector<double>{f1}, kSigma0, kDelta)[0];
        CHECK(std::abs(u1 - exact) < 2.0 * std::pow(kSigma0 / kDelta, 6) * std::abs(f1));
    }
    SUBCASE("four rounds against the exact Gaussian posterior") {
        const double r2 = std::pow(kSigma0 / kDelta, 4);
        for (unsigned seed = 1; seed <= 10; ++seed) {
            const auto f = random_f(4, seed);
            const double exact = exact_mean_oracle(f, kSigma0, kDelta);
            const double approx = combined_estimate(f, kSigma0, kDelta, Quadrature::Q).mean;
            // relative to the natural scale r |F|_inf; exact means can nearly cancel
            double fmax = 0.0;
            for (double x : f) fmax = std::max(fmax, std::abs(x));
            CHECK(std::abs(approx - exact) <= 10.0 * r2 * (kSigma0 * kSigma0 / (kDelta * kDelta)) * fmax);
        }
    }
    CHECK_THROWS_AS(u_tilde(std::vector<double>{0.1}, 0.6, 1.0), ConvergenceError);
}

TEST_CASE("combined estimate properties") {
    const auto f = random_f(30, 7);
    auto neg = f;
    for (double& x : neg) x = -x;
    const auto e = combined_estimate(f, kSigma0, kDelta, Quadrature::Q);
    CHECK(combined_estimate(neg, kSigma0, kDelta, Quadrature::Q).mean == -e.mean);
    CHECK(combined_estimate(std::vector<double>(9, 0.0), kSigma0, kDelta, Quadrature::Q).mean == 0.0);
    double raw = 0.0;
    for (int k = 1; k <= 30; ++k) raw += f[k - 1] * std::pow(2.0, k - 31);
    // shrinkage bound with series-truncation margin
    const double shrink = kSigma0 * kSigma0 / (kSigma0 * kSigma0 + kDelta * kDelta);
    CHECK(std::abs(e.mean) <= 2.0 * std::abs(raw) * shrink * (1 + 1e-2) + 1e-15);
    SUBCASE("fallback to exact inversion outside the convergent regime") {
        const auto big = combined_estimate(f, 0.2, 0.3, Quadrature::Q);
        CHECK(big.method == PosteriorMethod::Exact);
        CHECK(big.mean == doctest::Approx(exact_mean_oracle(f, 0.2, 0.3)).epsilon(1e-10));
    }
}

TEST_CASE("closed-form residual variance") {
    const double s2 = kSigma0 * kSigma0;
    CHECK(v_q_closed_form(1, 1e-6, 1.0, Quadrature::Q) == doctest::Approx(0.25e-12).epsilon(1e-9));
    const double limit = s2 / 3.0 * (1.0 - 16.0 / 9.0 * s2 / (kDelta * kDelta));
    CHECK(v_q_closed_form(200, kSigma0, kDelta, Quadrature::Q) == doctest::Approx(limit).epsilon(1e-12));
    double previous = 0.0;
    for (int m = 1; m <= 200; ++m) {
        const double v = v_q_closed_form(m, kSigma0, kDelta, Quadrature::Q);
        CHECK(v >= previous * (1.0 - 1e-15));
        CHECK(v <= s2 / 3.0);
        previous = v;
    }
    const double r2 = std::pow(kSigma0 / kDelta, 4);
    for (int m : {1, 2, 3, 5, 10, 20}) {
        Eigen::VectorXd a(m);
        for (int k = 1; k <= m; ++k) a(k - 1) = std::pow(2.0, k - m - 1);
        const double direct = a.dot(precision_by_loop(m, kSigma0, kDelta).inverse() * a);
        CHECK(std::abs(v_q_closed_form(m, kSigma0, kDelta, Quadrature::Q) / direct - 1.0) < 5.0 * r2);
    }
}

TEST_CASE("algorithm 1 streaming equals batch") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> raw(6);
    for (double& x : raw) x = dist(gen);
    const auto res = run_algorithm_1(raw, kSigma0, kDelta);
    // batch: effective measurements via the explicit nested sum
    std::vector<double> eff(raw.size());
    for (std::size_t h = 0; h < raw.size(); ++h) {
        double s = 0.0;
        for (std::size_t k = 0; k < h; ++k) s += f_step_star(eff[k]) * std::pow(2.0, -static_cast<double>(h - 1 - k));
        eff[h] = raw[h] + s / kSqrt2;
    }
    const auto batch = combined_estimate(wrap_measurements(eff), kSigma0, kDelta, Quadrature::Q);
    CHECK(std::abs(res.estimate.mean - batch.mean) <= 1e-12 * std::max(1e-3, std::abs(batch.mean)));
    for (double f : res.wrapped) CHECK(std::abs(f) <= 0.5 * kSqrtPi);

    const double two_cells = 2.0 * kSqrt2 * kSqrtPi;
    const std::vector<double> lattice{0.0, two_cells, -two_cells, 0.0};
    CHECK(run_algorithm_1(lattice, kSigma0, kDelta).estimate.mean == doctest::Approx(0.0));

    const GkpParams params(kDelta, kDelta);
    const double single = single_round_estimate(params, kSigma0, 0.1, Quadrature::Q).mean;
    const double one = run_algorithm_1(std::vector<double>{0.1}, kSigma0, kDelta).estimate.mean;
    // theta_1^err = u_1 / 2
    CHECK(std::abs(one - 0.5 * single) < std::pow(kSigma0 / kDelta, 6) * kSqrt2 * 0.1);
}
