// SPDX-License-Identifier: Apache-2.0
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "gkp/campaign.hpp"
#include "gkp/decoder.hpp"
#include "gkp/rng.hpp"
#include "gkp/shift_model.hpp"
#include "gkp/trace_io.hpp"

#ifndef GKP_GIT_DESCRIBE
#define GKP_GIT_DESCRIBE "unknown"
#endif

namespace gkp {

std::string library_version() { return "0.1.0"; }

namespace {

using nlohmann::json;

const char* kCsvHeader =
    "strategy,rounds,trials,fidelity,fidelity_stderr,mean_overlap,mse_q,mse_q_exact,mse_p,v_q,"
    "drift_step_max,drift_step_bound,drift_err_var,drift_err_var_prediction,p_track,p_trunc,p_succ";

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json config_json(const ExperimentConfig& c) {
    return json{{"delta", c.delta},
                {"kappa", c.kappa},
                {"sigma0_sq", c.sigma0_sq},
                {"rounds", c.rounds},
                {"trials", c.trials},
                {"seed", c.seed},
                {"strategy", to_string(c.strategy)},
                {"engine", to_string(c.engine)},
                {"out", c.out},
                {"format", to_string(c.format)},
                {"schedule", c.schedule},
                {"default_schedule", c.default_schedule},
                {"f0", c.f0},
                {"qubit_theta", c.qubit_theta},
                {"threads", c.threads}};
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    c.delta = j.at("delta").get<double>();
    c.kappa = j.at("kappa").get<double>();
    c.sigma0_sq = j.at("sigma0_sq").get<double>();
    c.rounds = j.at("rounds").get<int>();
    c.trials = j.at("trials").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    c.engine = parse_engine(j.at("engine").get<std::string>());
    c.out = j.at("out").get<std::string>();
    c.format = parse_format(j.at("format").get<std::string>());
    c.schedule = j.at("schedule").get<std::vector<int>>();
    c.default_schedule = j.at("default_schedule").get<bool>();
    c.f0 = j.at("f0").get<double>();
    c.qubit_theta = j.at("qubit_theta").get<double>();
    c.threads = j.at("threads").get<int>();
    return c;
}

// Field table shared by the JSON writer and reader.
template <class F>
void for_each_field(BenchmarkRecord& r, F&& f) {
    f("fidelity", r.fidelity);
    f("fidelity_stderr", r.fidelity_stderr);
    f("mean_overlap", r.mean_overlap);
    f("mse_q", r.mse_q);
    f("mse_q_exact", r.mse_q_exact);
    f("mse_p", r.mse_p);
    f("v_q", r.v_q);
    f("drift_step_max", r.drift_step_max);
    f("drift_step_bound", r.drift_step_bound);
    f("drift_err_var", r.drift_err_var);
    f("drift_err_var_prediction", r.drift_err_var_prediction);
    f("p_track", r.p_track);
    f("p_trunc", r.p_trunc);
    f("p_succ", r.p_succ);
    f("wall_seconds", r.wall_seconds);
}

}  // namespace

void write_csv(std::ostream& out, const BenchmarkResult& result) {
    out << kCsvHeader << '\n';
    for (const auto& r : result.records) {
        out << to_string(r.strategy) << ',' << r.rounds << ',' << r.trials;
        for (double v : {r.fidelity, r.fidelity_stderr, r.mean_overlap, r.mse_q, r.mse_q_exact, r.mse_p, r.v_q,
                         r.drift_step_max, r.drift_step_bound, r.drift_err_var, r.drift_err_var_prediction,
                         r.p_track, r.p_trunc, r.p_succ})
            out << ',' << g17(v);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: write failed");
}

void write_json(std::ostream& out, const BenchmarkResult& result, const std::string& timestamp) {
    json j;
    j["tool"] = "gkp-bench";
    j["version"] = library_version();
    j["git"] = GKP_GIT_DESCRIBE;
    j["timestamp"] = timestamp;
    j["seed"] = result.config.seed;
    j["config"] = config_json(result.config);
    j["records"] = json::array();
    for (BenchmarkRecord r : result.records) {
        json rec{{"strategy", to_string(r.strategy)}, {"rounds", r.rounds}, {"trials", r.trials}};
        for_each_field(r, [&](const char* k, double& v) { rec[k] = v; });
        j["records"].push_back(rec);
    }
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write_json: write failed");
}

BenchmarkResult read_json(std::istream& in) {
    const json j = json::parse(in);
    BenchmarkResult result;
    result.config = config_from_json(j.at("config"));
    for (const auto& rec : j.at("records")) {
        BenchmarkRecord r;
        r.strategy = parse_strategy(rec.at("strategy").get<std::string>());
        r.rounds = rec.at("rounds").get<int>();
        r.trials = rec.at("trials").get<int>();
        for_each_field(r, [&](const char* k, double& v) { v = rec.at(k).get<double>(); });
        result.records.push_back(r);
    }
    return result;
}

std::vector<DecodedTrial> decode_trace(const ExperimentConfig& cfg, std::istream& trace_csv) {
    cfg.validate();
    const double s0 = cfg.sigma0();
    std::vector<DecodedTrial> out;
    for (const SyndromeLists& t : group_syndromes(read_trace_csv(trace_csv))) {
        const auto q = run_algorithm_1(t.x_m, s0, cfg.delta, Quadrature::Q);
        const auto p = run_algorithm_1(t.p_m, s0, cfg.delta, Quadrature::P);
        out.push_back({t.trial, static_cast<int>(t.x_m.size()), q.estimate.mean, p.estimate.mean, q.estimate.variance});
    }
    return out;
}

ValidationReport validate_against_grid(const ExperimentConfig& cfg, bool recompiled, const GridSpec& spec) {
    cfg.validate();
    if (cfg.engine != Engine::GridValidate) throw ConfigError("validate: engine must be grid_validate");
    const GkpParams params = cfg.params();
    const ErrorChannel channel(cfg.sigma0());
    const SamplerPair samplers(params);
    ValidationReport rep;
    rep.rounds = cfg.rounds;
    rep.trials = cfg.trials;
    rep.dx = spec.dx();
    rep.recompiled = recompiled;
    const double period = 2.0 * kSqrtPi;
    const WaveGrid1D zero = prepare_qubit(params, 1.0, 0.0, spec);
    for (int trial = 0; trial < cfg.trials; ++trial) {
        CounterRng rng = CounterRng(cfg.seed, 0).split(static_cast<std::uint64_t>(trial));
        SyndromeHistory history(params, channel, cfg.seed);
        WaveGrid1D state = zero;
        for (int h = 1; h <= cfg.rounds; ++h) {
            const ErrorSample e = sample_error(channel, rng);
            const double ueff = history.next_effective_error(Quadrature::Q, e.u);
            const double veff = history.next_effective_error(Quadrature::P, e.v);
            const double x_m = samplers.q.sample(ueff, rng);
            const double p_m = samplers.p.sample(veff, rng);
            RoundOutput r = run_qse_pse(state, params, e.u, e.v, x_m, p_m);
            if (recompiled) {
                RoundOutput rr = run_recompiled_circuit(state, params, e.u, e.v, x_m, p_m / kSqrt2);
                const double ov = std::norm(inner_product(r.output, rr.output)) /
                                  (r.output.norm_squared() * rr.output.norm_squared());
                rep.max_recompiled_infidelity = std::max(rep.max_recompiled_infidelity, 1.0 - ov);
                r = std::move(rr);
            }
            if (h == 1) {
                const double model = samplers.q.density(x_m - ueff / kSqrt2);
                rep.max_density_deviation = std::max(rep.max_density_deviation, std::abs(r.density_x / model - 1.0));
            }
            history.advance_round(e.u, e.v, x_m, p_m);
            const CombFit fit = fit_comb(r.output, period);
            const double dev = std::abs(std::remainder(fit.offset - history.current_ledger().total_q(), period));
            rep.max_shift_deviation = std::max(rep.max_shift_deviation, dev);
            rep.max_width_deviation = std::max(rep.max_width_deviation, std::abs(fit.delta / params.delta() - 1.0));
            state = std::move(r.output);
        }
    }
    return rep;
}

}  // namespace gkp
