// SPDX-License-Identifier: Apache-2.0
#include "gkp/grid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "fft.hpp"

namespace gkp {

namespace {

constexpr int FFTW_FORWARD_SIGN = -1;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kInvSqrtTwoPi = 1.0 / std::sqrt(kTwoPi);
// Probability mass a rescaling may push off the grid before it is an error.
constexpr double kSupportTolerance = 1e-5;

int as_int(std::size_t n) { return static_cast<int>(n); }

double sign_of(std::size_t k) { return (k & 1U) ? -1.0 : 1.0; }

// Frequency of plain-FFT bin k in units of 2 pi / (n dx); Nyquist maps to -n/2.
double bin_frequency(std::size_t k, std::size_t n) {
    return k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
}

// Unscaled centered DFT: F_{k'} = sum_j f_j exp(-2 pi i k' j' / n), primes centred.
void centered_dft(cplx* d, std::size_t n, int sign) {
    for (std::size_t j = 0; j < n; ++j) d[j] *= sign_of(j);
    detail::fft_line(d, as_int(n), sign);
    for (std::size_t k = 0; k < n; ++k) d[k] *= sign_of(k);
}

void to_momentum_line(cplx* d, const GridSpec& s) {
    centered_dft(d, s.n, FFTW_FORWARD_SIGN);
    const double scale = s.dx() * kInvSqrtTwoPi;
    for (std::size_t k = 0; k < s.n; ++k) d[k] *= scale;
}

void from_momentum_line(cplx* d, const GridSpec& s) {
    centered_dft(d, s.n, -FFTW_FORWARD_SIGN);
    const double scale = s.dp() * kInvSqrtTwoPi;
    for (std::size_t k = 0; k < s.n; ++k) d[k] *= scale;
}

void translate_line(cplx* d, const GridSpec& s, double shift) {
    if (shift == 0.0) return;
    const std::size_t n = s.n;
    detail::fft_line(d, as_int(n), FFTW_FORWARD_SIGN);
    const double w = kTwoPi / (static_cast<double>(n) * s.dx());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) d[k] *= std::polar(inv_n, -w * bin_frequency(k, n) * shift);
    detail::fft_line(d, as_int(n), -FFTW_FORWARD_SIGN);
}

struct LineMass {
    double total = 0.0;
    double outside = 0.0;
};

LineMass line_mass(const cplx* d, std::size_t n, double index_radius) {
    LineMass m;
    for (std::size_t j = 0; j < n; ++j) {
        const double w = std::norm(d[j]);
        m.total += w;
        if (std::abs(static_cast<double>(j) - 0.5 * static_cast<double>(n)) > index_radius) m.outside += w;
    }
    return m;
}

double line_mass_beyond(const cplx* d, std::size_t n, double index_radius) {
    const LineMass m = line_mass(d, n, index_radius);
    return m.total > 0.0 ? m.outside / m.total : 0.0;
}

// Evaluates the band-limited interpolant of centred samples at alpha * j'
// (chirp-z / Bluestein with a 2n circular convolution).
class ScaledResampler {
  public:
    ScaledResampler(std::size_t n, double alpha) : n_(n), big_(2 * n), chirp_(n), kernel_(2 * n, 0.0) {
        const double c = std::numbers::pi * alpha / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double kp = static_cast<double>(k) - 0.5 * static_cast<double>(n);
            chirp_[k] = std::polar(1.0, c * kp * kp);
        }
        for (std::size_t d = 0; d < n; ++d) {
            const double dd = static_cast<double>(d);
            kernel_[d] = std::polar(1.0, -c * dd * dd);
            if (d > 0) kernel_[big_ - d] = kernel_[d];
        }
        detail::fft_line(kernel_.data(), as_int(big_), FFTW_FORWARD_SIGN);
    }

    void apply(cplx* d, std::vector<cplx>& work) const {
        work.assign(big_, 0.0);
        std::copy(d, d + n_, work.begin());
        centered_dft(work.data(), n_, FFTW_FORWARD_SIGN);
        const double inv_n = 1.0 / static_cast<double>(n_);
        for (std::size_t k = 0; k < n_; ++k) work[k] *= chirp_[k] * inv_n;
        detail::fft_line(work.data(), as_int(big_), FFTW_FORWARD_SIGN);
        const double inv_big = 1.0 / static_cast<double>(big_);
        for (std::size_t k = 0; k < big_; ++k) work[k] *= kernel_[k] * inv_big;
        detail::fft_line(work.data(), as_int(big_), -FFTW_FORWARD_SIGN);
        for (std::size_t m = 0; m < n_; ++m) d[m] = work[m] * chirp_[m];
    }

  private:
    std::size_t n_;
    std::size_t big_;
    std::vector<cplx> chirp_;
    std::vector<cplx> kernel_;
};

// psi(x) -> a^{-1/2} psi(x/a) on one contiguous line, in whichever domain contracts.
// Returns the mass that the rescaling pushes off the window, measured before it is lost.
class LineSqueezer {
  public:
    LineSqueezer(const GridSpec& s, double a) : spec_(s), a_(a), resampler_(s.n, a >= 1.0 ? 1.0 / a : a) {}

    LineMass apply(cplx* d, std::vector<cplx>& work) const {
        const double radius = 0.5 * static_cast<double>(spec_.n);
        LineMass m;
        if (a_ >= 1.0) {
            m = line_mass(d, spec_.n, radius / a_);
            resampler_.apply(d, work);
            const double scale = 1.0 / std::sqrt(a_);
            for (std::size_t j = 0; j < spec_.n; ++j) d[j] *= scale;
        } else {
            to_momentum_line(d, spec_);
            m = line_mass(d, spec_.n, radius * a_);
            resampler_.apply(d, work);
            const double scale = std::sqrt(a_);
            for (std::size_t j = 0; j < spec_.n; ++j) d[j] *= scale;
            from_momentum_line(d, spec_);
        }
        return m;
    }

  private:
    GridSpec spec_;
    double a_;
    ScaledResampler resampler_;
};

void check_squeeze_loss(const LineMass& m) {
    if (m.total > 0.0 && m.outside > kSupportTolerance * m.total) {
        throw GridError("squeeze: rescaled support exceeds the grid");
    }
}

// Band-limited interpolation weight of sample at offset t (symmetric Nyquist).
double dirichlet(double t, const GridSpec& s) {
    const double n = static_cast<double>(s.n);
    const double den = n * std::tan(std::numbers::pi * t / (n * s.dx()));
    if (std::abs(den) < 1e-300 || std::abs(t) < 1e-14 * s.dx()) return 1.0;
    return std::sin(std::numbers::pi * t / s.dx()) / den;
}

// Per-line shift for a shear: lines along `axis`, shift depends on the other coordinate.
void shear(WaveGrid2D& st, int axis, double coefficient) {
    const GridSpec& s = st.spec;
    const std::size_t n = s.n;
    if (coefficient == 0.0) return;
    const int stride = axis == 0 ? as_int(n) : 1;
    const int dist = axis == 0 ? 1 : as_int(n);
    detail::fft_inplace(st.amp.data(), as_int(n), as_int(n), stride, dist, FFTW_FORWARD_SIGN);
    const double w = kTwoPi / (static_cast<double>(n) * s.dx());
    const double inv_n = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static)
    for (long long li = 0; li < static_cast<long long>(n); ++li) {
        const auto line = static_cast<std::size_t>(li);
        // translate line by -coefficient * (other coordinate)
        const double shift = -coefficient * s.x(line);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = axis == 0 ? k * n + line : line * n + k;
            st.amp[idx] *= std::polar(inv_n, -w * bin_frequency(k, n) * shift);
        }
    }
    detail::fft_inplace(st.amp.data(), as_int(n), as_int(n), stride, dist, -FFTW_FORWARD_SIGN);
}

template <typename Fn>
void for_each_line(WaveGrid2D& st, int mode, Fn&& fn) {
    const std::size_t n = st.spec.n;
#pragma omp parallel
    {
        std::vector<cplx> line(n), work;
#pragma omp for schedule(static)
        for (long long li = 0; li < static_cast<long long>(n); ++li) {
            const auto other = static_cast<std::size_t>(li);
            if (mode == 1) {
                fn(&st.amp[other * n], work);
            } else {
                for (std::size_t i = 0; i < n; ++i) line[i] = st.amp[i * n + other];
                fn(line.data(), work);
                for (std::size_t i = 0; i < n; ++i) st.amp[i * n + other] = line[i];
            }
        }
    }
}

void check_mode(int mode) {
    if (mode != 0 && mode != 1) throw DomainError("grid: mode must be 0 or 1");
}

// Envelope weight of comb peaks at offset + k spacing lying beyond the window,
// plus any sampled mass that already sits at the edge.
void check_support(const WaveGrid1D& st, const GkpParams& params, double spacing, double offset) {
    const double edge = 0.98 * 0.5 * static_cast<double>(st.spec.n);
    const double env = 1.0 / params.kappa();
    double total = 0.0, outside = 0.0;
    const double reach = 12.0 * env + st.spec.x_max;
    const long long kmax = static_cast<long long>(std::ceil(reach / spacing)) + 1;
    for (long long k = -kmax; k <= kmax; ++k) {
        const double c = offset + static_cast<double>(k) * spacing;
        const double w = gaussian(env, c) * gaussian(env, c);
        total += w;
        if (std::abs(c) + 3.0 * params.delta() > st.spec.x_max) outside += w;
    }
    if (outside > kSupportTolerance * total || line_mass_beyond(st.amp.data(), st.spec.n, edge) > kSupportTolerance) {
        throw GridError("grid: state support reaches the grid edge");
    }
}

}  // namespace

double GridSpec::dp() const { return kTwoPi / (static_cast<double>(n) * dx()); }

void GridSpec::validate() const {
    if (n < 16 || !std::has_single_bit(n)) throw DomainError("GridSpec: n must be a power of two >= 16");
    if (!(x_max > 0.0)) throw DomainError("GridSpec: x_max must be positive");
}

WaveGrid1D::WaveGrid1D(GridSpec s) : spec(s), amp(s.n, 0.0) { spec.validate(); }

double WaveGrid1D::norm_squared() const {
    double sum = 0.0;
    for (const cplx& a : amp) sum += std::norm(a);
    return sum * spec.dx();
}

void WaveGrid1D::normalize() {
    const double nrm = norm_squared();
    if (!(nrm > 0.0)) throw GridError("normalize: zero state");
    const double scale = 1.0 / std::sqrt(nrm);
    for (cplx& a : amp) a *= scale;
}

WaveGrid2D::WaveGrid2D(GridSpec s) : spec(s), amp(s.n * s.n, 0.0) { spec.validate(); }

WaveGrid2D WaveGrid2D::product(const WaveGrid1D& mode0, const WaveGrid1D& mode1) {
    if (mode0.spec.n != mode1.spec.n || mode0.spec.x_max != mode1.spec.x_max) {
        throw DomainError("WaveGrid2D::product: modes must share a grid");
    }
    WaveGrid2D out(mode0.spec);
    const std::size_t n = out.spec.n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.amp[i * n + j] = mode0.amp[i] * mode1.amp[j];
    return out;
}

double WaveGrid2D::norm_squared() const {
    double sum = 0.0;
    for (const cplx& a : amp) sum += std::norm(a);
    return sum * spec.dx() * spec.dx();
}

void WaveGrid2D::normalize() {
    const double nrm = norm_squared();
    if (!(nrm > 0.0)) throw GridError("normalize: zero state");
    const double scale = 1.0 / std::sqrt(nrm);
    for (cplx& a : amp) a *= scale;
}

cplx inner_product(const WaveGrid1D& a, const WaveGrid1D& b) {
    if (a.spec.n != b.spec.n || a.spec.x_max != b.spec.x_max) throw DomainError("inner_product: grid mismatch");
    cplx sum = 0.0;
    for (std::size_t i = 0; i < a.amp.size(); ++i) sum += std::conj(a.amp[i]) * b.amp[i];
    return sum * a.spec.dx();
}

double fidelity(const WaveGrid1D& a, const WaveGrid1D& b) {
    return std::norm(inner_product(a, b)) / (a.norm_squared() * b.norm_squared());
}

std::vector<cplx> to_momentum(const WaveGrid1D& state) {
    std::vector<cplx> out = state.amp;
    to_momentum_line(out.data(), state.spec);
    return out;
}

WaveGrid1D from_momentum(const GridSpec& spec, std::span<const cplx> momentum) {
    WaveGrid1D out(spec);
    if (momentum.size() != spec.n) throw DomainError("from_momentum: size mismatch");
    std::copy(momentum.begin(), momentum.end(), out.amp.begin());
    from_momentum_line(out.amp.data(), spec);
    return out;
}

void translate(WaveGrid1D& state, double s) { translate_line(state.amp.data(), state.spec, s); }

void displace(WaveGrid1D& state, double u, double v) {
    translate(state, u);
    for (std::size_t i = 0; i < state.spec.n; ++i) state.amp[i] *= std::polar(1.0, v * state.spec.x(i));
}

void squeeze(WaveGrid1D& state, double a) {
    if (!(a > 0.0)) throw DomainError("squeeze: factor must be positive");
    if (a == 1.0) return;
    const LineSqueezer sq(state.spec, a);
    std::vector<cplx> work;
    std::vector<cplx> saved = state.amp;
    const LineMass m = sq.apply(state.amp.data(), work);
    if (m.total > 0.0 && m.outside > kSupportTolerance * m.total) {
        state.amp = std::move(saved);
        throw GridError("squeeze: rescaled support exceeds the grid");
    }
}

double mean_boson_number(const WaveGrid1D& state) {
    const double nrm = state.norm_squared();
    double x2 = 0.0;
    for (std::size_t i = 0; i < state.spec.n; ++i) x2 += state.spec.x(i) * state.spec.x(i) * std::norm(state.amp[i]);
    x2 *= state.spec.dx() / nrm;
    const std::vector<cplx> mom = to_momentum(state);
    double p2 = 0.0;
    for (std::size_t k = 0; k < state.spec.n; ++k) p2 += state.spec.p(k) * state.spec.p(k) * std::norm(mom[k]);
    p2 *= state.spec.dp() / nrm;
    return 0.5 * (x2 + p2 - 1.0);
}

WaveGrid1D prepare_codeword(const GkpParams& params, double mu, const GridSpec& spec) {
    WaveGrid1D out(spec);
    if (params.delta() < 2.0 * spec.dx()) throw GridError("prepare: peak width under-resolved by the grid");
    const auto trunc = LatticeTruncation::for_params(params);
    for (std::size_t i = 0; i < spec.n; ++i) out.amp[i] = gkp_wavefunction(params, mu, trunc, spec.x(i));
    check_support(out, params, 2.0 * kSqrtPi, mu * kSqrtPi);
    out.normalize();
    return out;
}

WaveGrid1D prepare_plus(const GkpParams& params, const GridSpec& spec) {
    WaveGrid1D out(spec);
    if (params.delta() < 2.0 * spec.dx()) throw GridError("prepare: peak width under-resolved by the grid");
    const auto trunc = LatticeTruncation::for_params(params);
    for (std::size_t i = 0; i < spec.n; ++i) out.amp[i] = gkp_plus_wavefunction(params, trunc, spec.x(i));
    check_support(out, params, kSqrtPi, 0.0);
    out.normalize();
    return out;
}

WaveGrid1D prepare_qubit(const GkpParams& params, cplx a0, cplx a1, const GridSpec& spec, double alpha) {
    if (std::abs(std::norm(a0) + std::norm(a1) - 1.0) > 1e-12) {
        throw DomainError("prepare_qubit: amplitudes must satisfy |a0|^2 + |a1|^2 = 1");
    }
    WaveGrid1D out(spec);
    if (params.delta() < 2.0 * spec.dx()) throw GridError("prepare: peak width under-resolved by the grid");
    const auto trunc = LatticeTruncation::for_params(params);
    const double n0 = gkp_normalizer(params, alpha, trunc);
    const double n1 = gkp_normalizer(params, 1.0 + alpha, trunc);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double x = spec.x(i);
        out.amp[i] = a0 * n0 * gkp_wavefunction(params, alpha, trunc, x) +
                     a1 * n1 * gkp_wavefunction(params, 1.0 + alpha, trunc, x);
    }
    check_support(out, params, kSqrtPi, alpha * kSqrtPi);
    out.normalize();
    return out;
}

void apply_rotation(WaveGrid2D& state, double phi) {
    // [[1,t],[0,1]] [[1,0],[-sin,1]] [[1,t],[0,1]] = rotation, t = tan(phi/2)
    const double t = std::tan(0.5 * phi);
    shear(state, 0, t);
    shear(state, 1, -std::sin(phi));
    shear(state, 0, t);
}

void apply_beamsplitter_50_50(WaveGrid2D& state) { apply_rotation(state, 0.25 * std::numbers::pi); }

void apply_squeeze(WaveGrid2D& state, int mode, double a) {
    check_mode(mode);
    if (!(a > 0.0)) throw DomainError("squeeze: factor must be positive");
    if (a == 1.0) return;
    const LineSqueezer sq(state.spec, a);
    double total = 0.0, outside = 0.0;
    for_each_line(state, mode, [&](cplx* line, std::vector<cplx>& work) {
        const LineMass m = sq.apply(line, work);
#pragma omp atomic
        total += m.total;
#pragma omp atomic
        outside += m.outside;
    });
    check_squeeze_loss({total, outside});
}

void apply_displacement(WaveGrid2D& state, int mode, double shift, Quadrature quadrature) {
    check_mode(mode);
    const GridSpec& s = state.spec;
    if (quadrature == Quadrature::Q) {
        for_each_line(state, mode, [&](cplx* line, std::vector<cplx>&) { translate_line(line, s, shift); });
        return;
    }
    const std::size_t n = s.n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) state.amp[i * n + j] *= std::polar(1.0, shift * s.x(mode == 0 ? i : j));
}

MeasurementResult measure_quadrature(const WaveGrid2D& state, int mode, Quadrature quadrature, double m) {
    check_mode(mode);
    const GridSpec& s = state.spec;
    const std::size_t n = s.n;
    const double limit = quadrature == Quadrature::Q ? s.x_max : s.p_max();
    if (!(std::abs(m) < limit)) throw GridError("measure: outcome outside the grid");
    std::vector<cplx> kernel(n);
    for (std::size_t j = 0; j < n; ++j) {
        kernel[j] = quadrature == Quadrature::Q ? cplx(dirichlet(m - s.x(j), s), 0.0)
                                                : std::polar(s.dx() * kInvSqrtTwoPi, -m * s.x(j));
    }
    MeasurementResult r{WaveGrid1D(s), 0.0};
    const double scale = quadrature == Quadrature::Q ? 1.0 : 1.0;
#pragma omp parallel for schedule(static)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        cplx sum = 0.0;
        if (mode == 1) {
            const cplx* row = &state.amp[i * n];
            for (std::size_t j = 0; j < n; ++j) sum += row[j] * kernel[j];
        } else {
            for (std::size_t j = 0; j < n; ++j) sum += state.amp[j * n + i] * kernel[j];
        }
        r.state.amp[i] = sum * scale;
    }
    r.density = r.state.norm_squared() / state.norm_squared();
    r.state.normalize();
    return r;
}

std::vector<double> marginal_density(const WaveGrid2D& state, int mode, Quadrature quadrature) {
    check_mode(mode);
    const GridSpec& s = state.spec;
    const std::size_t n = s.n;
    WaveGrid2D work = state;
    if (quadrature == Quadrature::P) {
        for_each_line(work, mode, [&](cplx* line, std::vector<cplx>&) { to_momentum_line(line, s); });
    }
    const double total = state.norm_squared();
    std::vector<double> rho(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) rho[mode == 0 ? i : j] += std::norm(work.amp[i * n + j]);
    for (double& r : rho) r *= s.dx() / total;
    return rho;
}

void CircuitSpec::validate() const {
    for (std::size_t k = 0; k < elements.size(); ++k) {
        if (const auto* sq = std::get_if<Squeeze>(&elements[k])) {
            if (!(sq->factor > 0.0)) throw DomainError("CircuitSpec: squeeze factor must be positive");
            check_mode(sq->mode);
        }
        if (std::holds_alternative<Measurement>(elements[k]) && k + 1 != elements.size()) {
            throw DomainError("CircuitSpec: a measurement terminates the circuit");
        }
    }
    if (elements.empty() || !std::holds_alternative<Measurement>(elements.back())) {
        throw DomainError("CircuitSpec: circuit must end with a measurement");
    }
}

MeasurementResult run_circuit(WaveGrid2D state, const CircuitSpec& circuit) {
    circuit.validate();
    for (const CircuitElement& e : circuit.elements) {
        if (std::holds_alternative<BeamSplitter>(e)) {
            apply_beamsplitter_50_50(state);
        } else if (const auto* sq = std::get_if<Squeeze>(&e)) {
            apply_squeeze(state, sq->mode, sq->factor);
        } else if (const auto* d = std::get_if<Displacement>(&e)) {
            apply_displacement(state, d->mode, d->shift, d->quadrature);
        } else {
            const auto& m = std::get<Measurement>(e);
            return measure_quadrature(state, m.mode, m.quadrature, m.outcome);
        }
    }
    throw DomainError("run_circuit: no measurement");
}

RoundOutput run_qse_pse(const WaveGrid1D& qubit, const GkpParams& params, double u, double v, double x_m, double p_m) {
    const GridSpec& s = qubit.spec;
    WaveGrid1D q = qubit;
    displace(q, u, v);
    const CircuitSpec qse{{BeamSplitter{}, Squeeze{0, 1.0 / kSqrt2}, Measurement{1, Quadrature::Q, x_m}}};
    MeasurementResult r1 = run_circuit(WaveGrid2D::product(q, prepare_plus(params, s)), qse);
    const CircuitSpec pse{{BeamSplitter{}, Squeeze{0, kSqrt2}, Measurement{1, Quadrature::P, p_m}}};
    MeasurementResult r2 = run_circuit(WaveGrid2D::product(r1.state, prepare_codeword(params.primed(), 0.0, s)), pse);
    return {std::move(r1.state), std::move(r2.state), r1.density, r2.density};
}

double sample_outcome(const WaveGrid2D& state, int mode, Quadrature quadrature, CounterRng& rng) {
    check_mode(mode);
    const GridSpec& s = state.spec;
    const std::vector<double> dens = marginal_density(state, mode, quadrature);
    const double h = quadrature == Quadrature::Q ? s.dx() : s.dp();
    auto coord = [&](std::size_t k) { return quadrature == Quadrature::Q ? s.x(k) : s.p(k); };
    double total = 0.0;
    for (double d : dens) total += d;
    if (!(total > 0.0)) throw GridError("sample_outcome: state has no weight");
    // proposal: cell k with weight dens[k], uniform inside; accept with f(y) / (C dens[k])
    constexpr double kRatioCap = 4.0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        double target = rng.uniform() * total;
        std::size_t k = 0;
        while (k + 1 < dens.size() && target >= dens[k]) target -= dens[k++];
        if (!(dens[k] > 0.0)) continue;
        const double y = coord(k) + h * (rng.uniform() - 0.5);
        const double f = measure_quadrature(state, mode, quadrature, y).density;
        if (rng.uniform() * kRatioCap * dens[k] < f) return y;
    }
    throw GridError("sample_outcome: rejection sampling did not converge");
}

SampledRound sample_qse_pse(const WaveGrid1D& qubit, const GkpParams& params, double u, double v, CounterRng& rng) {
    const GridSpec& s = qubit.spec;
    WaveGrid1D q = qubit;
    displace(q, u, v);
    WaveGrid2D two = WaveGrid2D::product(q, prepare_plus(params, s));
    apply_beamsplitter_50_50(two);
    apply_squeeze(two, 0, 1.0 / kSqrt2);
    SampledRound out;
    out.x_m = sample_outcome(two, 1, Quadrature::Q, rng);
    MeasurementResult r1 = measure_quadrature(two, 1, Quadrature::Q, out.x_m);
    two = WaveGrid2D::product(r1.state, prepare_codeword(params.primed(), 0.0, s));
    apply_beamsplitter_50_50(two);
    apply_squeeze(two, 0, kSqrt2);
    out.p_m = sample_outcome(two, 1, Quadrature::P, rng);
    MeasurementResult r2 = measure_quadrature(two, 1, Quadrature::P, out.p_m);
    out.round = {std::move(r1.state), std::move(r2.state), r1.density, r2.density};
    return out;
}

RoundOutput run_recompiled_circuit(const WaveGrid1D& qubit, const GkpParams& params, double u, double v, double x_m,
                                   double p_m_raw) {
    const GridSpec& s = qubit.spec;
    WaveGrid1D q = qubit;
    displace(q, u, v);
    const CircuitSpec qse{{BeamSplitter{}, Measurement{1, Quadrature::Q, x_m}}};
    MeasurementResult r1 = run_circuit(WaveGrid2D::product(q, prepare_plus(params, s)), qse);
    WaveGrid1D aux = prepare_codeword(params.primed(), 0.0, s);
    squeeze(aux, kSqrt2);
    const CircuitSpec pse{{BeamSplitter{}, Measurement{1, Quadrature::P, p_m_raw}}};
    MeasurementResult r2 = run_circuit(WaveGrid2D::product(r1.state, aux), pse);
    return {std::move(r1.state), std::move(r2.state), r1.density, r2.density};
}

WaveGrid1D shifted_reference(const GkpParams& params, cplx a0, cplx a1, double u, double v, double x_m, double p_m,
                             const GridSpec& spec, ReferenceModel model) {
    const double theta_q = 0.5 * u - f_step_star(x_m);
    const double theta_p = 0.5 * v - f_step_star(p_m);
    const auto trunc = LatticeTruncation::for_params(params);
    const double n0 = gkp_normalizer(params, 0.0, trunc);
    const double n1 = gkp_normalizer(params, 1.0, trunc);
    WaveGrid1D out(spec);
    if (model == ReferenceModel::Literal) {
        for (std::size_t i = 0; i < spec.n; ++i) {
            const double x = spec.x(i);
            const cplx q = a0 * n0 * gkp_wavefunction(params, 0.0, trunc, x - theta_q) +
                           a1 * n1 * gkp_wavefunction(params, 1.0, trunc, x - theta_q);
            out.amp[i] = q * std::polar(1.0, theta_p * x);
        }
        out.normalize();
        return out;
    }
    const double fq = f_step_star(x_m);
    const double env = 1.0 / params.kappa();
    const int smax = trunc.s_max + 2;
    for (int mu = 0; mu <= 1; ++mu) {
        const cplx amp = mu == 0 ? a0 * n0 : a1 * n1;
        for (int s = -smax; s <= smax; ++s) {
            const double c = (2.0 * s + mu) * kSqrtPi - fq;  // relative to the envelope centre u/2
            const double weight = gaussian(env, c);
            if (weight < 1e-17) continue;
            const double centre = c + 0.5 * u;
            const cplx peak = amp * weight * std::polar(1.0, theta_p * centre);
            for (std::size_t i = 0; i < spec.n; ++i) {
                const double z = spec.x(i) - centre;
                if (std::abs(z) > 12.0 * params.delta()) continue;
                out.amp[i] += peak * gaussian(params.delta(), z);
            }
        }
    }
    out.normalize();
    return out;
}

CombFit fit_comb(const WaveGrid1D& state, double spacing) {
    const GridSpec& s = state.spec;
    cplx z = 0.0;
    for (std::size_t i = 0; i < s.n; ++i) z += std::norm(state.amp[i]) * std::polar(1.0, kTwoPi * s.x(i) / spacing);
    CombFit fit;
    fit.offset = spacing * std::arg(z) / kTwoPi;
    // cells centred on each fitted peak
    const long long kmin = static_cast<long long>(std::floor((-s.x_max - fit.offset) / spacing));
    const long long kmax = static_cast<long long>(std::ceil((s.x_max - fit.offset) / spacing));
    const std::size_t cells = static_cast<std::size_t>(kmax - kmin + 1);
    std::vector<double> mass(cells, 0.0), first(cells, 0.0), second(cells, 0.0);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double x = s.x(i);
        const long long k = static_cast<long long>(std::llround((x - fit.offset) / spacing));
        const auto c = static_cast<std::size_t>(k - kmin);
        const double w = std::norm(state.amp[i]);
        mass[c] += w;
        first[c] += w * x;
        second[c] += w * x * x;
    }
    const double top = *std::max_element(mass.begin(), mass.end());
    double var_sum = 0.0, var_weight = 0.0;
    std::vector<double> cx, cy;
    for (std::size_t c = 0; c < cells; ++c) {
        if (mass[c] < 1e-8 * top) continue;
        const double mean = first[c] / mass[c];
        var_sum += second[c] - mass[c] * mean * mean;
        var_weight += mass[c];
        cx.push_back(mean);
        cy.push_back(std::log(mass[c]));
    }
    fit.delta = std::sqrt(2.0 * var_sum / var_weight);
    if (cx.size() >= 3) {
        Eigen::MatrixXd a(static_cast<Eigen::Index>(cx.size()), 3);
        Eigen::VectorXd b(static_cast<Eigen::Index>(cx.size()));
        for (std::size_t k = 0; k < cx.size(); ++k) {
            const auto r = static_cast<Eigen::Index>(k);
            a(r, 0) = 1.0;
            a(r, 1) = cx[k];
            a(r, 2) = cx[k] * cx[k];
            b(r) = cy[k];
        }
        const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
        if (coef(2) < 0.0) {
            fit.kappa = std::sqrt(-coef(2));
            fit.envelope_center = -coef(1) / (2.0 * coef(2));
        }
    }
    return fit;
}

namespace {

constexpr char kStateMagic[8] = {'G', 'K', 'P', 'S', 'T', 'A', 'T', 'E'};
static_assert(std::endian::native == std::endian::little, "state export assumes a little-endian host");

void write_header(std::ostream& out, const GridSpec& s, std::uint32_t modes) {
    out.write(kStateMagic, sizeof(kStateMagic));
    const std::uint64_t n = s.n;
    const double x_min = s.x(0), dx = s.dx();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&x_min), sizeof x_min);
    out.write(reinterpret_cast<const char*>(&dx), sizeof dx);
    out.write(reinterpret_cast<const char*>(&modes), sizeof modes);
}

}  // namespace

void write_state_binary(std::ostream& out, const WaveGrid1D& state) {
    write_header(out, state.spec, 1);
    out.write(reinterpret_cast<const char*>(state.amp.data()),
              static_cast<std::streamsize>(state.amp.size() * sizeof(cplx)));
}

void write_state_binary(std::ostream& out, const WaveGrid2D& state) {
    write_header(out, state.spec, 2);
    out.write(reinterpret_cast<const char*>(state.amp.data()),
              static_cast<std::streamsize>(state.amp.size() * sizeof(cplx)));
}

std::vector<cplx> read_state_binary(std::istream& in, GridSpec& spec, int& modes) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kStateMagic, sizeof magic) != 0) throw std::runtime_error("state: bad magic");
    std::uint64_t n = 0;
    double x_min = 0.0, dx = 0.0;
    std::uint32_t m = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&x_min), sizeof x_min);
    in.read(reinterpret_cast<char*>(&dx), sizeof dx);
    in.read(reinterpret_cast<char*>(&m), sizeof m);
    if (!in || (m != 1 && m != 2)) throw std::runtime_error("state: bad header");
    spec.n = n;
    spec.x_max = -x_min;
    spec.validate();
    modes = static_cast<int>(m);
    std::vector<cplx> data(m == 1 ? n : n * n);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(cplx)));
    if (!in) throw std::runtime_error("state: truncated data");
    return data;
}

void write_density_csv(std::ostream& out, const WaveGrid1D& state) {
    out << "x,density\n";
    out.precision(17);
    for (std::size_t i = 0; i < state.spec.n; ++i) out << state.spec.x(i) << ',' << std::norm(state.amp[i]) << '\n';
}

}  // namespace gkp
