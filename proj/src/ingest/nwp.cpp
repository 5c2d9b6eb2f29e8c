#include "gridbench/nwp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <spdlog/fmt/fmt.h>

#include "gridbench/csv.hpp"

namespace gridbench {

Index NwpTable::variable_index(std::string_view name) const {
  auto it = std::find(variables.begin(), variables.end(), name);
  if (it == variables.end()) throw DataError(fmt::format("unknown NWP variable '{}'", name));
  return static_cast<Index>(it - variables.begin());
}

void NwpTable::validate() const {
  for (const auto& r : records) {
    if (r.issue > r.valid) {
      throw DataError(fmt::format("NWP record valid at {} issued later at {}",
                                  format_iso8601(r.valid), format_iso8601(r.issue)));
    }
    if (r.values.size() != variables.size()) throw DataError("NWP record width mismatch");
    for (double v : r.values)
      if (!std::isfinite(v)) throw DataError("NWP record contains missing values");
  }
}

NwpTable NwpTable::from_csv(const std::filesystem::path& path) {
  const WideTable wide = read_wide_csv(path, {"issue_time"});
  NwpTable table;
  table.variables = wide.header;
  for (std::size_t r = 0; r < wide.timestamps.size(); ++r) {
    Record rec;
    rec.valid = wide.timestamps[r];
    rec.issue = wide.time_columns[0][r];
    rec.values.resize(table.variables.size());
    for (std::size_t c = 0; c < table.variables.size(); ++c)
      rec.values[c] = wide.values(static_cast<Index>(r), static_cast<Index>(c));
    table.records.push_back(std::move(rec));
  }
  table.validate();
  return table;
}

void NwpTable::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out << "valid_time,issue_time";
  for (const auto& v : variables) out << ',' << v;
  out << '\n';
  for (const auto& r : records) {
    out << format_iso8601(r.valid) << ',' << format_iso8601(r.issue);
    for (double v : r.values) out << ',' << fmt::format("{:.10g}", v);
    out << '\n';
  }
}

AlignedNwp::AlignedNwp(const NwpTable& table) : variables_(table.variables) {
  table.validate();
  std::map<Timestamp, std::map<Timestamp, const NwpTable::Record*>> grouped;
  for (const auto& r : table.records) grouped[r.issue][r.valid] = &r;
  for (const auto& [issue, by_valid] : grouped) {
    Issuance iss;
    iss.issue = issue;
    iss.values.resize(variables_.size());
    for (const auto& [valid, rec] : by_valid) {
      iss.valid.push_back(valid);
      for (std::size_t v = 0; v < variables_.size(); ++v) iss.values[v].push_back(rec->values[v]);
    }
    issuances_.push_back(std::move(iss));
  }
}

std::size_t AlignedNwp::var_index(std::string_view name) const {
  auto it = std::find(variables_.begin(), variables_.end(), name);
  if (it == variables_.end()) throw DataError(fmt::format("unknown NWP variable '{}'", name));
  return static_cast<std::size_t>(it - variables_.begin());
}

const AlignedNwp::Issuance& AlignedNwp::resolve(Timestamp issue, Timestamp valid) const {
  auto it = std::upper_bound(issuances_.begin(), issuances_.end(), issue,
                             [](Timestamp t, const Issuance& i) { return t < i.issue; });
  while (it != issuances_.begin()) {
    --it;
    if (valid >= it->valid.front() && valid <= it->valid.back()) return *it;
  }
  throw DataError(fmt::format("no NWP issuance at or before {} covers {}", format_iso8601(issue),
                              format_iso8601(valid)));
}

Timestamp AlignedNwp::issuance_used(Timestamp issue, Timestamp valid) const {
  return resolve(issue, valid).issue;
}

double AlignedNwp::lookup(std::size_t var, Timestamp issue, Timestamp valid) const {
  const Issuance& iss = resolve(issue, valid);
  auto hi = std::lower_bound(iss.valid.begin(), iss.valid.end(), valid);
  const auto k = static_cast<std::size_t>(hi - iss.valid.begin());
  const auto& vals = iss.values[var];
  if (*hi == valid) return vals[k];
  const double w = static_cast<double>(valid - iss.valid[k - 1]) /
                   static_cast<double>(iss.valid[k] - iss.valid[k - 1]);
  return (1.0 - w) * vals[k - 1] + w * vals[k];
}

void AlignedNwp::fill(std::string_view variable, Timestamp issue, Timestamp first_valid,
                      std::int64_t step_seconds, std::span<double> out) const {
  const std::size_t var = var_index(variable);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = lookup(var, issue, first_valid + static_cast<std::int64_t>(i) * step_seconds);
  }
}

double AlignedNwp::value(std::string_view variable, Timestamp issue, Timestamp valid) const {
  return lookup(var_index(variable), issue, valid);
}

Vector AlignedNwp::as_of(std::string_view variable, Timestamp start, std::int64_t step_seconds,
                         Index count) const {
  const std::size_t var = var_index(variable);
  Vector out(count);
  for (Index i = 0; i < count; ++i) {
    const Timestamp t = start + i * step_seconds;
    out(i) = lookup(var, t, t);
  }
  return out;
}

NwpTable align_nwp(const NwpTable& nwp, std::int64_t step_seconds, Timestamp issue,
                   Timestamp first_valid, Timestamp last_valid) {
  const AlignedNwp aligned(nwp);
  NwpTable out;
  out.variables = nwp.variables;
  for (Timestamp v = first_valid; v <= last_valid; v += step_seconds) {
    NwpTable::Record rec;
    rec.valid = v;
    rec.values.resize(nwp.variables.size());
    for (std::size_t k = 0; k < nwp.variables.size(); ++k) {
      rec.values[k] = aligned.value(nwp.variables[k], issue, v);
    }
    // Tag with the issuance actually used so leakage can be audited.
    rec.issue = aligned.issuance_used(issue, v);
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace gridbench
