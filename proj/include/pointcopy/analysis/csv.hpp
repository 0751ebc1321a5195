#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "pointcopy/analysis/metrics.hpp"

namespace pointcopy {

// Column header for a series, e.g. "bbox_ratio.l1".
std::string csv_column(const Series& s);

// Header "step,<col>,<col>..." and one row per step present in any series,
// in ascending step order. Values use 9 significant digits; a series with no
// sample at a step leaves its cell empty.
std::string render_csv(std::span<const Series> series);

// Throws IoError when the file cannot be written.
void emit_csv(std::span<const Series> series, const std::filesystem::path& path);

}  // namespace pointcopy
