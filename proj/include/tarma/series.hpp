#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tarma/common.hpp"

namespace tarma {

/// Observations X_0, ..., X_n with optional ISO-8601 date labels.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(Vector values);
  TimeSeries(Vector values, std::vector<std::string> labels);

  const Vector& values() const { return values_; }
  const std::optional<std::vector<std::string>>& labels() const {
    return labels_;
  }

  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }

  /// Number of transitions, i.e. size() - 1.
  Index steps() const { return values_.size() - 1; }

  TimeSeries negated() const;
  TimeSeries affine(double scale, double shift) const;

 private:
  void validate() const;

  Vector values_;
  std::optional<std::vector<std::string>> labels_;
};

/// Reads `date,value` or bare `value` rows; a `date,value` (or `value`) header
/// line is optional.
TimeSeries read_series_csv(std::istream& in);
TimeSeries read_series_csv(const std::filesystem::path& path);

void write_series_csv(std::ostream& out, const TimeSeries& series);
void write_series_csv(const std::filesystem::path& path,
                      const TimeSeries& series);

}  // namespace tarma
