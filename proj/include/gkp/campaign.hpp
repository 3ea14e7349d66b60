// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo campaigns over the three correction strategies, the fidelity
// model that turns residual displacements into a qubit fidelity bound, and
// CSV / JSON output.
//
// After correction the logical state is the input displaced by a residual
// (dq, dp). Its fidelity is taken as
//   f_rho = 1/2 + (F0 - 1/2) <|<Q|D(dq, dp)|Q>|^2>_trials,
// then combined with the tracking x truncation success bound through
// qubit_fidelity_bound.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "gkp/core.hpp"
#include "gkp/grid.hpp"

namespace gkp {

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

enum class Strategy { Memory, Memoryless, None, All };
enum class Engine { ShiftModel, GridValidate };
enum class OutputFormat { Csv, Json, Both };

const char* to_string(Strategy s);
const char* to_string(Engine e);
const char* to_string(OutputFormat f);
Strategy parse_strategy(const std::string& s);
Engine parse_engine(const std::string& s);
OutputFormat parse_format(const std::string& s);

/// Largest rounds x trials product the grid engine accepts.
inline constexpr int kGridValidateBudget = 150;
inline constexpr int kGridValidateMaxRounds = 5;
inline constexpr int kGridValidateMaxTrials = 50;

struct ExperimentConfig {
    double delta = 0.2182;
    double kappa = 0.2182;
    double sigma0_sq = 0.0005;
    int rounds = 200;  // M_max
    int trials = 10000;
    std::uint64_t seed = 20261015;
    Strategy strategy = Strategy::All;
    Engine engine = Engine::ShiftModel;
    std::string out;  // path stem; empty = stdout
    OutputFormat format = OutputFormat::Csv;
    /// Round counts to report. Empty plus `default_schedule` = 1-2-5 sequence up to `rounds`.
    std::vector<int> schedule;
    bool default_schedule = true;
    double f0 = 0.981;           // input logical fidelity
    double qubit_theta = std::numbers::pi / 8.0;  // input qubit cos(theta)|0> + sin(theta)|1>
    int threads = 0;             // 0 = OpenMP default

    double sigma0() const;
    GkpParams params() const;
    /// Throws ConfigError on any violated constraint.
    void validate() const;
    /// Schedule actually used, sorted and deduplicated.
    std::vector<int> resolved_schedule() const;

    bool operator==(const ExperimentConfig&) const = default;
};

std::vector<int> geometric_schedule(int rounds);

/// key = value lines; '#' starts a comment. Keys match the long flag names with '_' for '-'.
void apply_config_text(ExperimentConfig& cfg, std::istream& in);
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_text(const ExperimentConfig& cfg);

/// |<Q|D(dq, dp)|Q>|^2 for a fixed grid state, tabulated on a square grid and
/// interpolated bicubically (Catmull-Rom); points outside the table are computed directly.
class OverlapSurface {
  public:
    OverlapSurface(WaveGrid1D state, double half_range = 2.5, double step = 0.01);
    double operator()(double dq, double dp) const;
    double direct(double dq, double dp) const;
    double half_range() const { return half_range_; }
    double step() const { return step_; }

  private:
    WaveGrid1D state_;
    double half_range_;
    double step_;
    int points_;
    std::vector<double> table_;  // row-major, dq index major
};

struct BenchmarkRecord {
    Strategy strategy = Strategy::Memory;
    int rounds = 0;
    int trials = 0;
    double fidelity = 0.0;          // bound after success probabilities
    double fidelity_stderr = 0.0;
    double mean_overlap = 0.0;
    double mse_q = 0.0;             // residual, q quadrature (Neumann estimate for memory)
    double mse_p = 0.0;
    double mse_q_exact = 0.0;       // memory only: exact posterior mean
    double v_q = 0.0;               // closed-form posterior variance
    double drift_step_max = 0.0;    // max |theta_step_q| over trials
    double drift_step_bound = 0.0;
    double drift_err_var = 0.0;     // sample variance of theta_err_q
    double drift_err_var_prediction = 0.0;
    double p_track = 1.0;
    double p_trunc = 1.0;
    double p_succ = 1.0;
    double wall_seconds = 0.0;      // not part of the deterministic output

    bool operator==(const BenchmarkRecord&) const = default;
};

struct BenchmarkResult {
    ExperimentConfig config;
    std::vector<BenchmarkRecord> records;

    bool operator==(const BenchmarkResult&) const = default;
};

enum class Execution { Parallel, Serial };

/// Deterministic for a given config: trials use independent counter streams
/// and per-trial values are folded in trial order.
BenchmarkResult run_campaign(const ExperimentConfig& cfg, Execution exec = Execution::Parallel,
                             std::ostream* log = nullptr);

struct ValidationReport {
    int rounds = 0;
    int trials = 0;
    double dx = 0.0;
    double max_shift_deviation = 0.0;     // |fit offset - ledger total_q| mod 2 sqrt(pi)
    double max_width_deviation = 0.0;     // relative, fitted Delta vs input, after each round
    double max_density_deviation = 0.0;  // relative, grid x_m density vs shift-model density, first round
    double max_recompiled_infidelity = 0.0;
    bool recompiled = false;
};

/// Full grid simulation of small campaigns against the shift model.
ValidationReport validate_against_grid(const ExperimentConfig& cfg, bool recompiled = false,
                                       const GridSpec& spec = {});

/// Decodes every trial of a syndrome trace (see trace_io.hpp) with Algorithm 1.
struct DecodedTrial {
    std::uint64_t trial = 0;
    int rounds = 0;
    double estimate_q = 0.0;
    double estimate_p = 0.0;
    double variance_q = 0.0;
};
std::vector<DecodedTrial> decode_trace(const ExperimentConfig& cfg, std::istream& trace_csv);

void write_csv(std::ostream& out, const BenchmarkResult& result);
/// `timestamp` and per-record wall_seconds are the only run-dependent fields.
void write_json(std::ostream& out, const BenchmarkResult& result, const std::string& timestamp);
BenchmarkResult read_json(std::istream& in);

std::string library_version();

}  // namespace gkp
