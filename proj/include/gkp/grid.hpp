// SPDX-License-Identifier: Apache-2.0
//
// Quadrature-grid wavefunction engine for one and two modes.
//
// Samples sit at x_j = (j - n/2) dx on [-x_max, x_max). The momentum grid is
// p_k = (k - n/2) dp with dp = 2 pi / (n dx), and the centered transform
//   psi~(p_k) = dx / sqrt(2 pi) sum_j psi(x_j) exp(-i p_k x_j)
// is unitary in the continuum normalization sum |psi|^2 dx = 1. Every
// operation treats the samples as a periodic band-limited function, so
// translations, rotations and rescalings are exact while the state stays
// inside both windows.
#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "gkp/core.hpp"
#include "gkp/rng.hpp"

namespace gkp {

using cplx = std::complex<double>;

struct GridSpec {
    std::size_t n = 1024;
    double x_max = 20.0;

    double dx() const { return 2.0 * x_max / static_cast<double>(n); }
    double dp() const;
    double x(std::size_t i) const { return -x_max + static_cast<double>(i) * dx(); }
    double p(std::size_t k) const { return (static_cast<double>(k) - 0.5 * static_cast<double>(n)) * dp(); }
    double p_max() const { return 0.5 * static_cast<double>(n) * dp(); }
    /// Throws DomainError unless n is a power of two >= 16 and x_max > 0.
    void validate() const;
};

class GridError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct WaveGrid1D {
    GridSpec spec;
    std::vector<cplx> amp;

    explicit WaveGrid1D(GridSpec s = {});
    double norm_squared() const;
    void normalize();
    double x_min() const { return spec.x(0); }
    double dx() const { return spec.dx(); }
};

/// Row-major n x n array; amp[i * n + j] holds Phi(x_i, y_j), mode 0 along i.
struct WaveGrid2D {
    GridSpec spec;
    std::vector<cplx> amp;

    explicit WaveGrid2D(GridSpec s = {});
    static WaveGrid2D product(const WaveGrid1D& mode0, const WaveGrid1D& mode1);
    cplx& at(std::size_t i, std::size_t j) { return amp[i * spec.n + j]; }
    cplx at(std::size_t i, std::size_t j) const { return amp[i * spec.n + j]; }
    double norm_squared() const;
    void normalize();
};

cplx inner_product(const WaveGrid1D& a, const WaveGrid1D& b);
/// |<a|b>|^2 / (<a|a><b|b>).
double fidelity(const WaveGrid1D& a, const WaveGrid1D& b);

/// Centered unitary transform to momentum samples at p_k, and its inverse.
std::vector<cplx> to_momentum(const WaveGrid1D& state);
WaveGrid1D from_momentum(const GridSpec& spec, std::span<const cplx> momentum);

/// psi(x) -> psi(x - s).
void translate(WaveGrid1D& state, double s);
/// psi(x) -> exp(i v x) psi(x - u).
void displace(WaveGrid1D& state, double u, double v);
/// psi(x) -> a^{-1/2} psi(x / a); throws GridError if support would leave the grid.
void squeeze(WaveGrid1D& state, double a);

/// <n> = (<x^2> + <p^2> - 1) / 2 with <p^2> from spectral differentiation.
double mean_boson_number(const WaveGrid1D& state);

/// Normalized comb psi_mu sampled on the grid. Throws GridError when the
/// state is under-resolved or its envelope reaches the grid edge.
WaveGrid1D prepare_codeword(const GkpParams& params, double mu, const GridSpec& spec);
WaveGrid1D prepare_plus(const GkpParams& params, const GridSpec& spec);
/// a0 N_alpha psi_alpha + a1 N_{1+alpha} psi_{1+alpha}, normalized; requires |a0|^2 + |a1|^2 = 1.
WaveGrid1D prepare_qubit(const GkpParams& params, cplx a0, cplx a1, const GridSpec& spec, double alpha = 0.0);

/// out(x, y) = in(x cos phi + y sin phi, -x sin phi + y cos phi) via three shears.
void apply_rotation(WaveGrid2D& state, double phi);
void apply_beamsplitter_50_50(WaveGrid2D& state);
void apply_squeeze(WaveGrid2D& state, int mode, double a);
/// Q: translate the mode by shift; P: multiply by exp(i shift x).
void apply_displacement(WaveGrid2D& state, int mode, double shift, Quadrature quadrature);

struct MeasurementResult {
    WaveGrid1D state;  // remaining mode, normalized
    double density = 0.0;
};

/// Conditions on outcome m of `mode` measured in `quadrature`. Off-grid q
/// outcomes use the band-limited (Dirichlet-kernel) interpolant; p outcomes
/// evaluate the transform integral directly at m.
MeasurementResult measure_quadrature(const WaveGrid2D& state, int mode, Quadrature quadrature, double m);
/// Marginal density of `mode` on its x grid (Q) or p grid (P).
std::vector<double> marginal_density(const WaveGrid2D& state, int mode, Quadrature quadrature);

struct BeamSplitter {};
struct Squeeze {
    int mode;
    double factor;
};
struct Displacement {
    int mode;
    double shift;
    Quadrature quadrature;
};
struct Measurement {
    int mode;
    Quadrature quadrature;
    double outcome;
};
using CircuitElement = std::variant<BeamSplitter, Squeeze, Displacement, Measurement>;

struct CircuitSpec {
    std::vector<CircuitElement> elements;
    /// Throws DomainError if a squeeze factor is non-positive or a measurement is not last.
    void validate() const;
};

/// Runs elements in order; the circuit must end with a measurement.
MeasurementResult run_circuit(WaveGrid2D state, const CircuitSpec& circuit);

struct RoundOutput {
    WaveGrid1D after_qse;
    WaveGrid1D output;
    double density_x = 0.0;
    double density_p = 0.0;
};

/// Displacement (u, v), then q-SE with aux psi_+ and p-SE with aux psi_0 at
/// widths (Delta/sqrt2, kappa sqrt2).
RoundOutput run_qse_pse(const WaveGrid1D& qubit, const GkpParams& params, double u, double v, double x_m, double p_m);
/// Same round with all squeezing moved onto the p-SE auxiliary state; the raw
/// p outcome relates to the original one by p_m = sqrt2 p_m_raw.
RoundOutput run_recompiled_circuit(const WaveGrid1D& qubit, const GkpParams& params, double u, double v, double x_m,
                                   double p_m_raw);

/// Draws an outcome of `mode` from the state's own marginal: a grid cell by its
/// sampled weight, then a point inside it by rejection against the exact density.
double sample_outcome(const WaveGrid2D& state, int mode, Quadrature quadrature, CounterRng& rng);

struct SampledRound {
    RoundOutput round;
    double x_m = 0.0;
    double p_m = 0.0;
};

/// run_qse_pse with both outcomes drawn from the circuit's own distributions.
SampledRound sample_qse_pse(const WaveGrid1D& qubit, const GkpParams& params, double u, double v, CounterRng& rng);

enum class ReferenceModel {
    /// Peak lattice moved by theta_q, envelope centred at u/2, each peak
    /// carrying exp(i theta_p c) at its own centre c.
    Lattice,
    /// Q(x - theta_q) exp(i theta_p x).
    Literal,
};

WaveGrid1D shifted_reference(const GkpParams& params, cplx a0, cplx a1, double u, double v, double x_m, double p_m,
                             const GridSpec& spec, ReferenceModel model = ReferenceModel::Lattice);

struct CombFit {
    double offset = 0.0;  // lattice offset modulo the spacing, in [-spacing/2, spacing/2)
    double delta = 0.0;   // fitted peak width
    double kappa = 0.0;   // fitted inverse envelope width
    double envelope_center = 0.0;
};

/// Fits a comb of period `spacing` to |psi|^2.
CombFit fit_comb(const WaveGrid1D& state, double spacing);

void write_state_binary(std::ostream& out, const WaveGrid1D& state);
void write_state_binary(std::ostream& out, const WaveGrid2D& state);
/// Reads either container; mode count is returned through `modes`.
std::vector<cplx> read_state_binary(std::istream& in, GridSpec& spec, int& modes);
void write_density_csv(std::ostream& out, const WaveGrid1D& state);

}  // namespace gkp
