#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gridbench/embedding.hpp"

namespace gridbench {

/// Weather forecasts tagged with their issuance time. One record per
/// (issuance, valid time); values follow `variables`.
struct NwpTable {
  struct Record {
    Timestamp issue = 0;
    Timestamp valid = 0;
    std::vector<double> values;
  };

  std::vector<std::string> variables;
  std::vector<Record> records;

  Index variable_index(std::string_view name) const;
  /// Checks issue <= valid for every record and consistent widths.
  void validate() const;

  static NwpTable from_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;
};

/// Issuance-aware view of an NwpTable. Queries resolve each valid instant
/// against the most recent issuance whose issue time is at or before the
/// query's issue time, interpolating linearly between that issuance's
/// valid times.
class AlignedNwp final : public ExogenousSource {
 public:
  explicit AlignedNwp(const NwpTable& table);

  void fill(std::string_view variable, Timestamp issue, Timestamp first_valid,
            std::int64_t step_seconds, std::span<double> out) const override;

  double value(std::string_view variable, Timestamp issue, Timestamp valid) const;

  /// Best-known value at each instant (issuance at or before the instant itself).
  Vector as_of(std::string_view variable, Timestamp start, std::int64_t step_seconds,
               Index count) const;

  /// Issue time of the issuance that answers (issue, valid).
  Timestamp issuance_used(Timestamp issue, Timestamp valid) const;

  const std::vector<std::string>& variables() const { return variables_; }

 private:
  struct Issuance {
    Timestamp issue = 0;
    std::vector<Timestamp> valid;
    std::vector<std::vector<double>> values;  // [variable][k]
  };
  const Issuance& resolve(Timestamp issue, Timestamp valid) const;
  double lookup(std::size_t var, Timestamp issue, Timestamp valid) const;
  std::size_t var_index(std::string_view name) const;

  std::vector<std::string> variables_;
  std::vector<Issuance> issuances_;  // sorted by issue time
};

/// The issuance-resolved forecast for one issue time, resampled to `step_seconds`
/// over [first_valid, last_valid].
NwpTable align_nwp(const NwpTable& nwp, std::int64_t step_seconds, Timestamp issue,
                   Timestamp first_valid, Timestamp last_valid);

}  // namespace gridbench
