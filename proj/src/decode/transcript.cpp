#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "pointcopy/decode/decode.hpp"

namespace pointcopy {

std::string transcript_line(std::size_t t, const StepOutput& out) {
  const std::vector<double> all = out.logits.concatenated();
  std::vector<std::size_t> idx = top_k_indices(all, 5);
  nlohmann::ordered_json top = nlohmann::ordered_json::array();
  for (std::size_t i : idx) {
    if (std::isfinite(all[i])) top.push_back({i, all[i]});
  }
  nlohmann::ordered_json j;
  j["t"] = t;
  j["kind"] = out.token.is_ptr() ? "ptr" : "vocab";
  j["id"] = out.token.index();
  j["logit_top5"] = std::move(top);
  return j.dump();
}

}  // namespace pointcopy
