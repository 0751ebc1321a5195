#include "pointcopy/analysis/csv.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "pointcopy/error.hpp"

namespace pointcopy {
namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string csv_column(const Series& s) { return s.metric + ".l" + std::to_string(s.layer); }

std::string render_csv(std::span<const Series> series) {
  std::string out = "step";
  for (const Series& s : series) {
    if (s.steps.size() != s.values.size()) throw DimensionError("series " + csv_column(s) + " has mismatched lengths");
    out += ',';
    out += csv_column(s);
  }
  out += '\n';

  std::set<std::size_t> steps;
  std::vector<std::map<std::size_t, double>> by_step(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    for (std::size_t j = 0; j < series[i].steps.size(); ++j) {
      steps.insert(series[i].steps[j]);
      by_step[i][series[i].steps[j]] = series[i].values[j];
    }
  }
  for (std::size_t step : steps) {
    out += std::to_string(step);
    for (const auto& m : by_step) {
      out += ',';
      if (auto it = m.find(step); it != m.end()) out += format_value(it->second);
    }
    out += '\n';
  }
  return out;
}

void emit_csv(std::span<const Series> series, const std::filesystem::path& path) {
  const std::string text = render_csv(series);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace pointcopy
