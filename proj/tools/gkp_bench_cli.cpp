// SPDX-License-Identifier: Apache-2.0
//
// gkp-bench: run | validate | decode | probe.
// Exit codes: 0 ok, 2 configuration error, 3 numeric convergence failure.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>

#include "gkp/campaign.hpp"
#include "gkp/decoder.hpp"
#include "gkp/quadrature.hpp"
#include "gkp/success.hpp"

namespace {

using namespace gkp;

constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;

// Flag name -> value, applied after the config file so flags win.
struct Overrides {
    std::string config_path;
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
        const std::pair<const char*, const char*> flags[] = {
            {"delta", "peak width Delta"},
            {"kappa", "envelope width kappa"},
            {"sigma0-sq", "error channel variance per round"},
            {"rounds", "largest round count M"},
            {"trials", "Monte Carlo trials N"},
            {"seed", "64-bit seed"},
            {"strategy", "memory | memoryless | none | all"},
            {"engine", "shift_model | grid_validate"},
            {"out", "output path stem (default stdout)"},
            {"format", "csv | json | both"},
            {"schedule", "comma-separated round counts"},
            {"f0", "input logical fidelity"},
            {"qubit-theta", "input qubit angle"},
            {"threads", "worker threads (0 = default)"},
        };
        for (const auto& [name, help] : flags) {
            CLI::Option* o = app->add_option("--" + std::string(name), values[name], help);
            options.emplace_back(name, o);
        }
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot read config file " + config_path);
            apply_config_text(cfg, in);
        }
        for (const auto& [name, opt] : options)
            if (opt->count() > 0) apply_config_value(cfg, name, values.at(name));
        return cfg;
    }
};

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

std::string with_extension(const std::string& stem, const std::string& ext) {
    if (stem.size() >= ext.size() && stem.compare(stem.size() - ext.size(), ext.size(), ext) == 0) return stem;
    return stem + ext;
}

template <class Writer>
void emit(const std::string& stem, const std::string& ext, Writer&& write) {
    if (stem.empty()) {
        write(std::cout);
        return;
    }
    const std::string path = with_extension(stem, ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write(out);
    std::cerr << "wrote " << path << '\n';
}

int cmd_run(const ExperimentConfig& cfg) {
    const BenchmarkResult r = run_campaign(cfg, Execution::Parallel, &std::cerr);
    if (cfg.format != OutputFormat::Json) emit(cfg.out, ".csv", [&](std::ostream& o) { write_csv(o, r); });
    if (cfg.format != OutputFormat::Csv)
        emit(cfg.out, ".json", [&](std::ostream& o) { write_json(o, r, utc_timestamp()); });
    return 0;
}

int cmd_validate(ExperimentConfig cfg, bool recompiled) {
    cfg.engine = Engine::GridValidate;
    const ValidationReport rep = validate_against_grid(cfg, recompiled);
    const nlohmann::json j{{"rounds", rep.rounds},
                           {"trials", rep.trials},
                           {"dx", rep.dx},
                           {"recompiled", rep.recompiled},
                           {"max_shift_deviation", rep.max_shift_deviation},
                           {"max_width_deviation", rep.max_width_deviation},
                           {"max_density_deviation", rep.max_density_deviation},
                           {"max_recompiled_infidelity", rep.max_recompiled_infidelity},
                           {"shift_within_dx", rep.max_shift_deviation < rep.dx},
                           {"width_within_2pct", rep.max_width_deviation < 0.02}};
    emit(cfg.out, ".json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    return 0;
}

int cmd_decode(const ExperimentConfig& cfg, const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) throw ConfigError("cannot read trace " + trace_path);
    const auto decoded = decode_trace(cfg, in);
    emit(cfg.out, ".csv", [&](std::ostream& o) {
        o.precision(17);
        o << "trial,rounds,estimate_q,estimate_p,variance_q\n";
        for (const auto& d : decoded)
            o << d.trial << ',' << d.rounds << ',' << d.estimate_q << ',' << d.estimate_p << ',' << d.variance_q << '\n';
    });
    return 0;
}

int cmd_probe(const ExperimentConfig& cfg) {
    cfg.validate();
    const GkpParams params = cfg.params();
    const double s0 = cfg.sigma0();
    const int m = cfg.rounds;
    const double a0 = std::cos(cfg.qubit_theta), a1 = std::sin(cfg.qubit_theta);
    const auto track1 = tracking_success_single(params, s0);
    const auto trackm = tracking_success_multi(params, s0, m);
    const auto trunc1 = truncation_success_single(params, s0, a0, a1);
    const auto truncm = truncation_success_multi(params, s0, m, a0, a1);
    const nlohmann::json j{{"delta", cfg.delta},
                           {"kappa", cfg.kappa},
                           {"sigma0_sq", cfg.sigma0_sq},
                           {"rounds", m},
                           {"v_q", v_q_closed_form(m, s0, cfg.delta, Quadrature::Q)},
                           {"v_p", v_q_closed_form(m, s0, cfg.delta, Quadrature::P)},
                           {"tracking_failure_single", track1.failure},
                           {"tracking_failure_bound", trackm.failure},
                           {"truncation_failure_single", trunc1.failure},
                           {"truncation_failure_bound", truncm.failure},
                           {"drift_step_bound", 2.0 * kSqrtPi * (1.0 - std::ldexp(1.0, -m))},
                           {"drift_error_variance", cfg.sigma0_sq * (1.0 - std::ldexp(1.0, -2 * m)) / 3.0}};
    emit(cfg.out, ".json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GKP syndrome-extraction benchmark"};
    app.require_subcommand(1);
    Overrides run_o, val_o, dec_o, probe_o;
    auto* run = app.add_subcommand("run", "Monte Carlo campaign over the correction strategies");
    run_o.attach(run);
    auto* val = app.add_subcommand("validate", "grid simulation cross-check of the shift model");
    val_o.attach(val);
    bool recompiled = false;
    val->add_flag("--recompiled", recompiled, "use the recompiled circuit");
    auto* dec = app.add_subcommand("decode", "replay a syndrome trace CSV through the decoder");
    dec_o.attach(dec);
    std::string trace;
    dec->add_option("--trace", trace, "trace CSV")->required();
    auto* probe = app.add_subcommand("probe", "posterior variance, success probabilities and drift bounds");
    probe_o.attach(probe);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(run_o.resolve());
        if (*val) return cmd_validate(val_o.resolve(), recompiled);
        if (*dec) return cmd_decode(dec_o.resolve(), trace);
        if (*probe) return cmd_probe(probe_o.resolve());
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const QuadratureError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << '\n';
        return kExitConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
