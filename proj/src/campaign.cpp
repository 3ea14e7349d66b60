// SPDX-License-Identifier: Apache-2.0
#include "gkp/campaign.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "gkp/decoder.hpp"
#include "gkp/rng.hpp"
#include "gkp/shift_model.hpp"
#include "gkp/success.hpp"

namespace gkp {

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Memory: return "memory";
        case Strategy::Memoryless: return "memoryless";
        case Strategy::None: return "none";
        case Strategy::All: return "all";
    }
    return "?";
}

const char* to_string(Engine e) { return e == Engine::ShiftModel ? "shift_model" : "grid_validate"; }

const char* to_string(OutputFormat f) {
    switch (f) {
        case OutputFormat::Csv: return "csv";
        case OutputFormat::Json: return "json";
        case OutputFormat::Both: return "both";
    }
    return "?";
}

Strategy parse_strategy(const std::string& s) {
    for (Strategy v : {Strategy::Memory, Strategy::Memoryless, Strategy::None, Strategy::All})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown strategy '" + s + "'");
}

Engine parse_engine(const std::string& s) {
    for (Engine v : {Engine::ShiftModel, Engine::GridValidate})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown engine '" + s + "'");
}

OutputFormat parse_format(const std::string& s) {
    for (OutputFormat v : {OutputFormat::Csv, OutputFormat::Json, OutputFormat::Both})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown format '" + s + "'");
}

double ExperimentConfig::sigma0() const { return std::sqrt(sigma0_sq); }

GkpParams ExperimentConfig::params() const { return GkpParams(delta, kappa); }

namespace {

bool positive(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

void ExperimentConfig::validate() const {
    if (!positive(delta)) throw ConfigError("delta must be positive");
    if (!positive(kappa)) throw ConfigError("kappa must be positive");
    if (!positive(sigma0_sq)) throw ConfigError("sigma0_sq must be positive");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!(f0 >= 0.5 && f0 <= 1.0)) throw ConfigError("f0 must lie in [0.5, 1]");
    if (!std::isfinite(qubit_theta)) throw ConfigError("qubit_theta must be finite");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    for (int m : schedule)
        if (m < 1 || m > rounds) throw ConfigError("schedule entries must lie in [1, rounds]");
    if (engine == Engine::GridValidate) {
        if (rounds > kGridValidateMaxRounds) throw ConfigError("grid_validate: rounds must be <= 5");
        if (trials > kGridValidateMaxTrials) throw ConfigError("grid_validate: trials must be <= 50");
        if (rounds * trials > kGridValidateBudget) throw ConfigError("grid_validate: rounds x trials exceeds 150");
    }
}

std::vector<int> geometric_schedule(int rounds) {
    std::vector<int> out;
    for (long decade = 1; decade <= rounds; decade *= 10)
        for (int f : {1, 2, 5})
            if (decade * f <= rounds) out.push_back(static_cast<int>(decade * f));
    if (rounds >= 1 && (out.empty() || out.back() != rounds)) out.push_back(rounds);
    return out;
}

std::vector<int> ExperimentConfig::resolved_schedule() const {
    std::vector<int> s = default_schedule && schedule.empty() ? geometric_schedule(rounds) : schedule;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T v{};
    in >> v;
    if (in.fail() || !in.eof()) throw ConfigError("bad value for " + key + ": '" + value + "'");
    return v;
}

std::vector<int> parse_schedule(const std::string& value) {
    std::vector<int> out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_number<int>("schedule", item));
    }
    return out;
}

}  // namespace

void apply_config_value(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
    std::string key = trim(raw_key);
    std::replace(key.begin(), key.end(), '-', '_');
    const std::string value = trim(raw_value);
    if (key == "delta") cfg.delta = parse_number<double>(key, value);
    else if (key == "kappa") cfg.kappa = parse_number<double>(key, value);
    else if (key == "sigma0_sq") cfg.sigma0_sq = parse_number<double>(key, value);
    else if (key == "rounds") cfg.rounds = parse_number<int>(key, value);
    else if (key == "trials") cfg.trials = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "strategy") cfg.strategy = parse_strategy(value);
    else if (key == "engine") cfg.engine = parse_engine(value);
    else if (key == "out") cfg.out = value;
    else if (key == "format") cfg.format = parse_format(value);
    else if (key == "f0") cfg.f0 = parse_number<double>(key, value);
    else if (key == "qubit_theta") cfg.qubit_theta = parse_number<double>(key, value);
    else if (key == "threads") cfg.threads = parse_number<int>(key, value);
    else if (key == "schedule") {
        cfg.schedule = parse_schedule(value);
        cfg.default_schedule = false;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_config_text(ExperimentConfig& cfg, std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
}

std::string config_to_text(const ExperimentConfig& cfg) {
    std::ostringstream o;
    o.precision(17);
    o << "delta = " << cfg.delta << "\nkappa = " << cfg.kappa << "\nsigma0_sq = " << cfg.sigma0_sq
      << "\nrounds = " << cfg.rounds << "\ntrials = " << cfg.trials << "\nseed = " << cfg.seed
      << "\nstrategy = " << to_string(cfg.strategy) << "\nengine = " << to_string(cfg.engine)
      << "\nformat = " << to_string(cfg.format) << "\nf0 = " << cfg.f0 << "\nqubit_theta = " << cfg.qubit_theta
      << "\nthreads = " << cfg.threads << '\n';
    if (!cfg.out.empty()) o << "out = " << cfg.out << '\n';
    if (!cfg.default_schedule || !cfg.schedule.empty()) {
        o << "schedule = ";
        for (std::size_t i = 0; i < cfg.schedule.size(); ++i) o << (i ? "," : "") << cfg.schedule[i];
        o << '\n';
    }
    return o.str();
}

// ---------------------------------------------------------------------------

OverlapSurface::OverlapSurface(WaveGrid1D state, double half_range, double step)
    : state_(std::move(state)), half_range_(half_range), step_(step) {
    if (!(step > 0.0) || !(half_range > 0.0)) throw DomainError("OverlapSurface: range and step must be positive");
    const double nrm = std::sqrt(state_.norm_squared());
    for (auto& a : state_.amp) a /= nrm;
    points_ = static_cast<int>(std::lround(2.0 * half_range / step)) + 1;
    step_ = 2.0 * half_range / (points_ - 1);
    table_.assign(static_cast<std::size_t>(points_) * points_, 0.0);

    const std::size_t n = state_.spec.n;
    const double dx = state_.spec.dx();
    double peak = 0.0;
    for (const auto& a : state_.amp) peak = std::max(peak, std::abs(a));
    const double cut = 1e-9 * peak * peak;

#pragma omp parallel for schedule(dynamic, 4)
    for (int iq = 0; iq < points_; ++iq) {
        const double dq = -half_range_ + iq * step_;
        WaveGrid1D moved = state_;
        translate(moved, dq);
        std::vector<cplx> acc(static_cast<std::size_t>(points_), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const cplx g = std::conj(state_.amp[k]) * moved.amp[k];
            if (std::abs(g) < cut) continue;
            const double x = state_.spec.x(k);
            cplx z = g * std::polar(1.0, -half_range_ * x);
            const cplx w = std::polar(1.0, step_ * x);
            for (int ip = 0; ip < points_; ++ip) {
                acc[static_cast<std::size_t>(ip)] += z;
                z *= w;
            }
        }
        for (int ip = 0; ip < points_; ++ip)
            table_[static_cast<std::size_t>(iq) * points_ + ip] = std::norm(acc[static_cast<std::size_t>(ip)] * dx);
    }
}

double OverlapSurface::direct(double dq, double dp) const {
    WaveGrid1D moved = state_;
    displace(moved, dq, dp);
    return std::norm(inner_product(state_, moved));
}

namespace {

// Catmull-Rom weights at fractional position t.
void cubic_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2 * t2 - t);
    w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
    w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

}  // namespace

double OverlapSurface::operator()(double dq, double dp) const {
    const double fq = (dq + half_range_) / step_;
    const double fp = (dp + half_range_) / step_;
    // bicubic needs one extra sample on each side
    if (!(fq >= 1.0 && fp >= 1.0 && fq <= points_ - 2 && fp <= points_ - 2)) return direct(dq, dp);
    const int iq = std::min(static_cast<int>(fq), points_ - 3);
    const int ip = std::min(static_cast<int>(fp), points_ - 3);
    double wq[4], wp[4];
    cubic_weights(fq - iq, wq);
    cubic_weights(fp - ip, wp);
    double v = 0.0;
    for (int a = 0; a < 4; ++a) {
        const double* row = &table_[static_cast<std::size_t>(iq - 1 + a) * points_ + (ip - 1)];
        v += wq[a] * (wp[0] * row[0] + wp[1] * row[1] + wp[2] * row[2] + wp[3] * row[3]);
    }
    return v;
}

// ---------------------------------------------------------------------------

namespace {

// Per-trial values at one schedule point.
struct TrialPoint {
    double overlap = 0.0;
    double res_q = 0.0, res_p = 0.0, res_q_exact = 0.0;
    double step_q = 0.0, err_q = 0.0;
};

// Exact posterior mean as a fixed linear functional of b_h = T_h / d^2.
struct ExactWeights {
    int rounds = 0;
    double d = 0.0;
    Eigen::VectorXd w;

    double mean(std::span<const double> f) const {
        double t = 0.0, out = 0.0;
        for (int h = rounds; h >= 1; --h) {
            t = f[static_cast<std::size_t>(h - 1)] + 0.5 * t;
            out += w(h - 1) * t / (d * d);
        }
        return out;
    }
};

ExactWeights exact_weights(int rounds, double sigma0, double delta) {
    ExactWeights e;
    e.rounds = rounds;
    e.d = likelihood_width(delta, Quadrature::Q);
    const PrecisionMatrix p = build_precision_matrix(rounds, sigma0, e.d);
    Eigen::VectorXd a(rounds);
    for (int k = 1; k <= rounds; ++k) a(k - 1) = std::ldexp(1.0, k - rounds - 1);
    e.w = Eigen::LDLT<Eigen::MatrixXd>(p.entries).solve(a);
    return e;
}

double success_power(double single_failure, int rounds) {
    return std::exp(rounds * std::log1p(-single_failure));
}

struct Context {
    const ExperimentConfig& cfg;
    GkpParams params;
    ErrorChannel channel;
    SamplerPair samplers;
    std::vector<int> schedule;
    const OverlapSurface& surface;
    std::vector<ExactWeights> exact;
};

// One trial of one strategy; fills out[i] for schedule point i.
void run_trial(const Context& c, Strategy strategy, std::uint64_t trial, TrialPoint* out) {
    const int m_max = c.schedule.back();
    CounterRng rng = CounterRng(c.cfg.seed, 0).split(trial);
    const SyndromeHistory history = simulate_trial(c.params, c.channel, c.samplers, m_max, rng);
    const auto rounds = history.rounds();
    const double s0 = c.channel.sigma0;

    Algorithm1Stream sq(s0, c.params.delta(), Quadrature::Q);
    Algorithm1Stream sp(s0, c.params.delta(), Quadrature::P);
    CounterRng side = CounterRng(c.cfg.seed, 1).split(trial);
    double rq = 0.0, rp = 0.0;  // memoryless residual, or raw accumulated error
    std::size_t next = 0;
    for (int h = 1; h <= m_max; ++h) {
        const RoundRecord& r = rounds[static_cast<std::size_t>(h - 1)];
        switch (strategy) {
            case Strategy::Memory:
                sq.push(r.x_m);
                sp.push(r.p_m);
                break;
            case Strategy::Memoryless: {
                const double eq = rq + r.u, ep = rp + r.v;
                const double xm = c.samplers.q.sample(eq, side);
                const double pm = c.samplers.p.sample(ep, side);
                rq = 0.5 * (eq - single_round_estimate(c.params, s0, xm, Quadrature::Q).mean);
                rp = 0.5 * (ep - single_round_estimate(c.params, s0, pm, Quadrature::P).mean);
                break;
            }
            case Strategy::None:
                rq += r.u;
                rp += r.v;
                break;
            case Strategy::All: break;
        }
        if (h != c.schedule[next]) continue;
        const ShiftLedger ledger = total_shift(history, static_cast<std::size_t>(h));
        TrialPoint& p = out[next];
        p.step_q = ledger.theta_step_q;
        p.err_q = ledger.theta_err_q;
        if (strategy == Strategy::Memory) {
            p.res_q = ledger.theta_err_q - sq.estimate().mean;
            p.res_p = ledger.theta_err_p - sp.estimate().mean;
            p.res_q_exact = ledger.theta_err_q - c.exact[next].mean(sq.wrapped());
        } else {
            p.res_q = rq;
            p.res_p = rp;
            p.res_q_exact = rq;
        }
        p.overlap = c.surface(p.res_q, p.res_p);
        ++next;
    }
}

}  // namespace

BenchmarkResult run_campaign(const ExperimentConfig& cfg, Execution exec, std::ostream* log) {
    cfg.validate();
    if (cfg.engine != Engine::ShiftModel) throw ConfigError("run_campaign: engine must be shift_model");
    BenchmarkResult result;
    result.config = cfg;
    const std::vector<int> schedule = cfg.resolved_schedule();
    if (schedule.empty()) return result;

    const GkpParams params = cfg.params();
    const double s0 = cfg.sigma0();
    const double th = cfg.qubit_theta;
    const OverlapSurface surface(prepare_qubit(params, std::cos(th), std::sin(th), GridSpec{}));

    const double trunc_fail = truncation_success_single(params, s0, std::cos(th), std::sin(th)).failure;
    const double track_fail_memory = tracking_success_single(params, 2.0 * s0 / std::sqrt(5.0)).failure;
    // memoryless effective error: fresh error plus a residual of variance <= sigma0^2 / 3
    const double track_fail_memoryless = tracking_success_single(params, 2.0 * s0 / std::sqrt(3.0)).failure;

    Context ctx{cfg, params, ErrorChannel(s0), SamplerPair(params), schedule, surface, {}};
    for (int m : schedule) ctx.exact.push_back(exact_weights(m, s0, params.delta()));

    std::vector<Strategy> strategies;
    if (cfg.strategy == Strategy::All) strategies = {Strategy::Memory, Strategy::Memoryless, Strategy::None};
    else strategies = {cfg.strategy};

    const std::size_t npts = schedule.size();
    const auto ntrials = static_cast<std::size_t>(cfg.trials);
    std::vector<TrialPoint> points(ntrials * npts);
    const bool parallel = exec == Execution::Parallel;
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();

    for (Strategy strategy : strategies) {
        const auto t0 = std::chrono::steady_clock::now();
        std::exception_ptr failure;
        std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads) if (parallel)
        for (long t = 0; t < static_cast<long>(ntrials); ++t) {
            try {
                run_trial(ctx, strategy, static_cast<std::uint64_t>(t), &points[static_cast<std::size_t>(t) * npts]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        for (std::size_t i = 0; i < npts; ++i) {
            const int m = schedule[i];
            BenchmarkRecord rec;
            rec.strategy = strategy;
            rec.rounds = m;
            rec.trials = cfg.trials;
            // ordered fold over trials
            double sum_ov = 0, sum_ov2 = 0, sq = 0, sp = 0, sqe = 0, err_sum = 0, err_sum2 = 0, step_max = 0;
            for (std::size_t t = 0; t < ntrials; ++t) {
                const TrialPoint& p = points[t * npts + i];
                sum_ov += p.overlap;
                sum_ov2 += p.overlap * p.overlap;
                sq += p.res_q * p.res_q;
                sp += p.res_p * p.res_p;
                sqe += p.res_q_exact * p.res_q_exact;
                err_sum += p.err_q;
                err_sum2 += p.err_q * p.err_q;
                step_max = std::max(step_max, std::abs(p.step_q));
            }
            const double n = static_cast<double>(ntrials);
            rec.mean_overlap = sum_ov / n;
            const double ov_var = n > 1 ? std::max(0.0, (sum_ov2 - n * rec.mean_overlap * rec.mean_overlap) / (n - 1)) : 0.0;
            rec.mse_q = sq / n;
            rec.mse_p = sp / n;
            rec.mse_q_exact = sqe / n;
            rec.v_q = v_q_closed_form(m, s0, params.delta(), Quadrature::Q);
            rec.drift_step_max = step_max;
            rec.drift_step_bound = 2.0 * kSqrtPi * (1.0 - std::ldexp(1.0, -m));
            const double err_mean = err_sum / n;
            rec.drift_err_var = n > 1 ? (err_sum2 - n * err_mean * err_mean) / (n - 1) : 0.0;
            rec.drift_err_var_prediction = cfg.sigma0_sq * (1.0 - std::ldexp(1.0, -2 * m)) / 3.0;
            switch (strategy) {
                case Strategy::Memory:
                    rec.p_track = success_power(track_fail_memory, m);
                    rec.p_trunc = success_power(trunc_fail, m);
                    break;
                case Strategy::Memoryless:
                    rec.p_track = success_power(track_fail_memoryless, m);
                    rec.p_trunc = success_power(trunc_fail, m);
                    break;
                default: break;
            }
            rec.p_succ = rec.p_track * rec.p_trunc;
            const double f_rho = 0.5 + (cfg.f0 - 0.5) * std::clamp(rec.mean_overlap, 0.0, 1.0);
            rec.fidelity = qubit_fidelity_bound(f_rho, rec.p_succ);
            rec.fidelity_stderr = (cfg.f0 - 0.5) * rec.p_succ * std::sqrt(ov_var / n);
            rec.wall_seconds = wall;
            if (log) {
                *log << to_string(strategy) << " M=" << m << " F=" << rec.fidelity << " mse_q=" << rec.mse_q
                     << " V_q=" << rec.v_q << '\n';
            }
            result.records.push_back(rec);
        }
    }
    return result;
}

}  // namespace gkp
