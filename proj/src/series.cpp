#include "tarma/series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "format.hpp"

namespace tarma {

TimeSeries::TimeSeries(Vector values) : values_(std::move(values)) {
  validate();
}

TimeSeries::TimeSeries(Vector values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
  validate();
}

void TimeSeries::validate() const {
  require(values_.size() > 0, ErrorKind::invalid_argument,
          "time series must be non-empty");
  require(values_.allFinite(), ErrorKind::invalid_argument,
          "time series values must be finite");
  if (labels_) {
    require(static_cast<Index>(labels_->size()) == values_.size(),
            ErrorKind::invalid_argument,
            "time series labels must match values in length");
    for (std::size_t i = 1; i < labels_->size(); ++i)
      require((*labels_)[i - 1] < (*labels_)[i], ErrorKind::invalid_argument,
              "time series labels must be strictly increasing");
  }
}

TimeSeries TimeSeries::negated() const { return affine(-1.0, 0.0); }

TimeSeries TimeSeries::affine(double scale, double shift) const {
  Vector v = (scale * values_.array() + shift).matrix();
  if (labels_) return TimeSeries(std::move(v), *labels_);
  return TimeSeries(std::move(v));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

TimeSeries read_series_csv(std::istream& in) {
  std::vector<double> values;
  std::vector<std::string> labels;
  bool dated = false;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto comma = t.find(',');
    const std::string value_text =
        comma == std::string::npos ? t : trim(t.substr(comma + 1));
    if (values.empty() && labels.empty()) {
      if (t == "value" || t == "date,value" ||
          (comma != std::string::npos && value_text == "value"))
        continue;
      dated = comma != std::string::npos;
    }
    require((comma != std::string::npos) == dated, ErrorKind::parse,
            "line " + std::to_string(lineno) + ": inconsistent column count");
    const auto v = parse_double(value_text);
    require(v.has_value(), ErrorKind::parse,
            "line " + std::to_string(lineno) + ": cannot parse value '" +
                value_text + "'");
    values.push_back(*v);
    if (dated) labels.push_back(trim(t.substr(0, comma)));
  }
  require(!values.empty(), ErrorKind::parse, "no observations in series file");
  Vector v = Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
  if (dated) return TimeSeries(std::move(v), std::move(labels));
  return TimeSeries(std::move(v));
}

TimeSeries read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::parse, "cannot open " + path.string());
  return read_series_csv(in);
}

void write_series_csv(std::ostream& out, const TimeSeries& series) {
  const auto& labels = series.labels();
  out << (labels ? "date,value\n" : "value\n");
  for (Index i = 0; i < series.size(); ++i) {
    if (labels) out << (*labels)[i] << ',';
    out << format_double(series[i]) << '\n';
  }
}

void write_series_csv(const std::filesystem::path& path,
                      const TimeSeries& series) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::invalid_argument,
          "cannot write " + path.string());
  write_series_csv(out, series);
}

}  // namespace tarma
