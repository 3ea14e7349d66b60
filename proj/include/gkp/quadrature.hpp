// SPDX-License-Identifier: Apache-2.0
//
// Gauss-Legendre rules and adaptive tensor-product integration on rectangles.
#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace gkp {

/// Raised when adaptive integration cannot reach the requested tolerance.
class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(const std::string& what, double achieved) : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const { return achieved_; }

  private:
    double achieved_;
};

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// n-point rule by Newton iteration on P_n; cached per n.
const GaussLegendreRule& gauss_legendre(int n);

struct IntegralResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    long evaluations = 0;
};

struct AdaptiveOptions {
    double abs_tol = 1e-14;
    double rel_tol = 1e-9;
    int order = 12;
    int max_depth = 14;
};

/// Adaptive Gauss-Legendre on [a, b]. Throws QuadratureError on non-convergence.
IntegralResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                            const AdaptiveOptions& opt = {});

/// Adaptive tensor-product Gauss-Legendre on [ax, bx] x [ay, by]; a cell is
/// accepted when its four quarters agree with the whole to within tolerance.
IntegralResult integrate_2d(const std::function<double(double, double)>& f, double ax, double bx, double ay,
                            double by, const AdaptiveOptions& opt = {});

}  // namespace gkp
