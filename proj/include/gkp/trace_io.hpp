// SPDX-License-Identifier: Apache-2.0
//
// Per-round trial traces: CSV with a fixed header, or a little-endian binary
// container ("GKPTRACE", u32 version, u64 row count, then fixed-size rows).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gkp/shift_model.hpp"

namespace gkp {

struct TraceRow {
    std::uint64_t trial = 0;
    std::uint64_t round = 0;  // 1-based
    double u = 0, v = 0, x_m = 0, p_m = 0;
    double x_eff = 0, u_eff = 0;
    double theta_err = 0, theta_step = 0;  // q quadrature, after this round
    double p_eff = 0, v_eff = 0;
    double theta_err_p = 0, theta_step_p = 0;

    bool operator==(const TraceRow&) const = default;
};

std::vector<TraceRow> trace_rows(std::uint64_t trial, const SyndromeHistory& history);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);

void write_trace_binary(std::ostream& out, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_binary(std::istream& in);

/// Raw syndrome lists of one trial, in round order, as the decoder consumes them.
struct SyndromeLists {
    std::uint64_t trial = 0;
    std::vector<double> x_m;
    std::vector<double> p_m;
};

/// Groups rows by trial (ascending) and sorts each trial's rounds.
std::vector<SyndromeLists> group_syndromes(const std::vector<TraceRow>& rows);

}  // namespace gkp
