#pragma once

// Line-delimited JSON dataset, one GroundedTrace per line:
//
//   {"prompt": [ids], "grid": [rows, cols], "patch_px": n,
//    "patches": [[f64, ...], ...], "target": [{"v": id} | {"p": k}, ...],
//    "objects": [{"label": s, "bbox": [x0, y0, x1, y1]}, ...]}
//
// Doubles are written in shortest round-trip form, so read(write(x)) == x.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pointcopy/data/trace.hpp"

namespace pointcopy {

std::string trace_to_json_line(const GroundedTrace& trace);
// Throws ParseError (with `line_no` when nonzero) on malformed input.
GroundedTrace trace_from_json_line(std::string_view line, std::size_t line_no = 0);

void write_dataset(const std::filesystem::path& path, const std::vector<GroundedTrace>& traces);
std::vector<GroundedTrace> read_dataset(const std::filesystem::path& path);

}  // namespace pointcopy
