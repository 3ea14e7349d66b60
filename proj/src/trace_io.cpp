// SPDX-License-Identifier: Apache-2.0
#include "gkp/trace_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gkp {

namespace {

constexpr const char* kHeader =
    "trial,round,u,v,x_m,p_m,x_eff,u_eff,theta_err,theta_step,p_eff,v_eff,theta_err_p,theta_step_p";
constexpr std::array<char, 8> kMagic{'G', 'K', 'P', 'T', 'R', 'A', 'C', 'E'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "binary trace I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("binary trace: truncated input");
    return value;
}

std::array<double*, 12> fields(TraceRow& r) {
    return {&r.u,     &r.v,         &r.x_m,        &r.p_m,   &r.x_eff,        &r.u_eff,
            &r.theta_err, &r.theta_step, &r.p_eff, &r.v_eff, &r.theta_err_p, &r.theta_step_p};
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("trace csv: bad number '" + s + "'");
    return v;
}

}  // namespace

std::vector<TraceRow> trace_rows(std::uint64_t trial, const SyndromeHistory& history) {
    std::vector<TraceRow> rows;
    rows.reserve(history.size());
    ShiftAccumulator q, p;
    std::uint64_t round = 0;
    for (const RoundRecord& rec : history.rounds()) {
        q.push(rec.u, rec.x_eff);
        p.push(rec.v, rec.p_eff);
        TraceRow row;
        row.trial = trial;
        row.round = ++round;
        row.u = rec.u;
        row.v = rec.v;
        row.x_m = rec.x_m;
        row.p_m = rec.p_m;
        row.x_eff = rec.x_eff;
        row.u_eff = rec.u_eff;
        row.theta_err = q.error_sum;
        row.theta_step = q.step_sum;
        row.p_eff = rec.p_eff;
        row.v_eff = rec.v_eff;
        row.theta_err_p = p.error_sum;
        row.theta_step_p = p.step_sum;
        rows.push_back(row);
    }
    return rows;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
    out << kHeader << '\n';
    std::array<char, 64> buf{};
    for (TraceRow row : rows) {
        out << row.trial << ',' << row.round;
        for (const double* f : fields(row)) {
            // shortest round-trip representation
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), *f);
            out << ',' << std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data()));
        }
        out << '\n';
    }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) throw std::runtime_error("trace csv: unexpected header");
    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 14) throw std::runtime_error("trace csv: expected 14 columns, got " + std::to_string(cells.size()));
        TraceRow row;
        row.trial = std::stoull(cells[0]);
        row.round = std::stoull(cells[1]);
        auto f = fields(row);
        for (std::size_t i = 0; i < f.size(); ++i) *f[i] = parse_double(cells[i + 2]);
        rows.push_back(row);
    }
    return rows;
}

void write_trace_binary(std::ostream& out, const std::vector<TraceRow>& rows) {
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    put(out, static_cast<std::uint64_t>(rows.size()));
    for (TraceRow row : rows) {
        put(out, row.trial);
        put(out, row.round);
        for (const double* f : fields(row)) put(out, *f);
    }
}

std::vector<TraceRow> read_trace_binary(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error("binary trace: bad magic");
    if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("binary trace: unsupported version");
    const auto n = get<std::uint64_t>(in);
    std::vector<TraceRow> rows(n);
    for (TraceRow& row : rows) {
        row.trial = get<std::uint64_t>(in);
        row.round = get<std::uint64_t>(in);
        for (double* f : fields(row)) *f = get<double>(in);
    }
    return rows;
}

std::vector<SyndromeLists> group_syndromes(const std::vector<TraceRow>& rows) {
    std::map<std::uint64_t, std::vector<const TraceRow*>> by_trial;
    for (const TraceRow& r : rows) by_trial[r.trial].push_back(&r);
    std::vector<SyndromeLists> out;
    for (auto& [trial, list] : by_trial) {
        std::sort(list.begin(), list.end(), [](const TraceRow* a, const TraceRow* b) { return a->round < b->round; });
        SyndromeLists s;
        s.trial = trial;
        for (const TraceRow* r : list) {
            s.x_m.push_back(r->x_m);
            s.p_m.push_back(r->p_m);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace gkp
