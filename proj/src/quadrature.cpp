// SPDX-License-Identifier: Apache-2.0
#include "gkp/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace gkp {

namespace {

GaussLegendreRule build_rule(int n) {
    GaussLegendreRule r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        r.nodes[lo] = -x;
        r.nodes[hi] = x;
        r.weights[lo] = w;
        r.weights[hi] = w;
    }
    return r;
}

double rule_1d(const std::function<double(double)>& f, double a, double b, const GaussLegendreRule& r, long& evals) {
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
    evals += static_cast<long>(r.nodes.size());
    return s * h;
}

double rule_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay, double by,
               const GaussLegendreRule& r, long& evals) {
    const double hx = 0.5 * (bx - ax), cx = 0.5 * (ax + bx);
    const double hy = 0.5 * (by - ay), cy = 0.5 * (ay + by);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        const double x = cx + hx * r.nodes[i];
        double row = 0.0;
        for (std::size_t j = 0; j < r.nodes.size(); ++j) row += r.weights[j] * f(x, cy + hy * r.nodes[j]);
        s += r.weights[i] * row;
    }
    evals += static_cast<long>(r.nodes.size() * r.nodes.size());
    return s * hx * hy;
}

struct Accum {
    double value = 0.0;
    double error = 0.0;
    long evals = 0;
    bool failed = false;
};

void adapt_1d(const std::function<double(double)>& f, double a, double b, double whole, double tol, int depth,
              const AdaptiveOptions& opt, const GaussLegendreRule& r, Accum& acc) {
    const double m = 0.5 * (a + b);
    const double left = rule_1d(f, a, m, r, acc.evals);
    const double right = rule_1d(f, m, b, r, acc.evals);
    const double diff = std::abs(left + right - whole);
    if (diff <= tol || depth >= opt.max_depth) {
        if (diff > tol) acc.failed = true;
        acc.value += left + right;
        acc.error += diff;
        return;
    }
    adapt_1d(f, a, m, left, 0.5 * tol, depth + 1, opt, r, acc);
    adapt_1d(f, m, b, right, 0.5 * tol, depth + 1, opt, r, acc);
}

void adapt_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay, double by,
              double whole, double tol, int depth, const AdaptiveOptions& opt, const GaussLegendreRule& r,
              Accum& acc) {
    const double mx = 0.5 * (ax + bx), my = 0.5 * (ay + by);
    const double q[4] = {rule_2d(f, ax, mx, ay, my, r, acc.evals), rule_2d(f, mx, bx, ay, my, r, acc.evals),
                         rule_2d(f, ax, mx, my, by, r, acc.evals), rule_2d(f, mx, bx, my, by, r, acc.evals)};
    const double sum = q[0] + q[1] + q[2] + q[3];
    const double diff = std::abs(sum - whole);
    if (diff <= tol || depth >= opt.max_depth) {
        if (diff > tol) acc.failed = true;
        acc.value += sum;
        acc.error += diff;
        return;
    }
    adapt_2d(f, ax, mx, ay, my, q[0], 0.25 * tol, depth + 1, opt, r, acc);
    adapt_2d(f, mx, bx, ay, my, q[1], 0.25 * tol, depth + 1, opt, r, acc);
    adapt_2d(f, ax, mx, my, by, q[2], 0.25 * tol, depth + 1, opt, r, acc);
    adapt_2d(f, mx, bx, my, by, q[3], 0.25 * tol, depth + 1, opt, r, acc);
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    static std::mutex mutex;
    static std::map<int, GaussLegendreRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
    return it->second;
}

IntegralResult integrate_1d(const std::function<double(double)>& f, double a, double b, const AdaptiveOptions& opt) {
    const GaussLegendreRule& r = gauss_legendre(opt.order);
    Accum acc;
    const double whole = rule_1d(f, a, b, r, acc.evals);
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(whole));
    adapt_1d(f, a, b, whole, tol, 0, opt, r, acc);
    if (acc.failed && acc.error > std::max(opt.abs_tol, opt.rel_tol * std::abs(acc.value))) {
        throw QuadratureError("integrate_1d: tolerance not reached", acc.error);
    }
    return {acc.value, acc.error, acc.evals};
}

IntegralResult integrate_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay,
                            double by, const AdaptiveOptions& opt) {
    const GaussLegendreRule& r = gauss_legendre(opt.order);
    Accum acc;
    const double whole = rule_2d(f, ax, bx, ay, by, r, acc.evals);
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(whole));
    adapt_2d(f, ax, bx, ay, by, whole, tol, 0, opt, r, acc);
    if (acc.failed && acc.error > std::max(opt.abs_tol, opt.rel_tol * std::abs(acc.value))) {
        throw QuadratureError("integrate_2d: tolerance not reached", acc.error);
    }
    return {acc.value, acc.error, acc.evals};
}

}  // namespace gkp
