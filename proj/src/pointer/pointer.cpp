#include "pointcopy/pointer/pointer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "pointcopy/error.hpp"
#include "pointcopy/numerics/kernels.hpp"
#include "pointcopy/numerics/rowops.hpp"

namespace pointcopy {

std::string AugToken::debug_string() const {
  return is_ptr_ ? "<ptr" + std::to_string(index_) + ">" : "v" + std::to_string(index_);
}

std::vector<double> AugLogits::concatenated() const {
  std::vector<double> out(gen);
  out.insert(out.end(), ptr.begin(), ptr.end());
  return out;
}

Tensor2 pointer_keys(const Tensor2& patches, const Tensor2& key_proj) {
  if (!patches.empty() && patches.cols() != key_proj.rows()) {
    throw InputError("pointer keys: patch width " + std::to_string(patches.cols()) +
                     " does not match projection " + key_proj.shape_string());
  }
  Tensor2 keys(patches.rows(), key_proj.cols());
  for (std::size_t k = 0; k < patches.rows(); ++k) rowops::linear(patches.row(k), key_proj, nullptr, keys.row(k));
  return keys;
}

std::vector<double> pointer_logits_from_keys(std::span<const double> hidden, const Tensor2& keys,
                                             const Tensor2& query_proj) {
  const std::size_t d = hidden.size();
  if (query_proj.rows() != d || query_proj.cols() != d) {
    throw InputError("pointer query projection " + query_proj.shape_string() +
                     " does not match hidden width " + std::to_string(d));
  }
  if (!keys.empty() && keys.cols() != d) {
    throw InputError("pointer keys width " + std::to_string(keys.cols()) + " does not match " +
                     std::to_string(d));
  }
  std::vector<double> q(d);
  rowops::linear(hidden, query_proj, nullptr, q);
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> out(keys.rows());
  const auto& kt = kernels::active();
  for (std::size_t k = 0; k < keys.rows(); ++k) out[k] = kt.dot(q.data(), keys.row(k).data(), d) * s;
  return out;
}

std::vector<double> pointer_logits(std::span<const double> hidden, const Tensor2& patches,
                                   const PointerHead& head) {
  if (head.key.rows() != hidden.size() || head.key.cols() != hidden.size()) {
    throw InputError("pointer key projection " + head.key.shape_string() +
                     " does not match hidden width " + std::to_string(hidden.size()));
  }
  return pointer_logits_from_keys(hidden, pointer_keys(patches, head.key), head.query);
}

std::vector<double> augmented_distribution(const AugLogits& logits) {
  const auto all = logits.concatenated();
  std::vector<double> out(all.size());
  rowops::softmax(all, out);
  return out;
}

std::vector<double> gated_mixture_reference(std::span<const double> gen, std::span<const double> ptr,
                                            double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InputError("gate lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
  std::vector<double> out(gen.size() + ptr.size(), 0.0);
  std::vector<double> pg(gen.size()), pp(ptr.size());
  rowops::softmax(gen, pg);
  rowops::softmax(ptr, pp);
  for (std::size_t i = 0; i < gen.size(); ++i) out[i] = lambda * pg[i];
  for (std::size_t k = 0; k < ptr.size(); ++k) out[gen.size() + k] = (1.0 - lambda) * pp[k];
  return out;
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return values[a] > values[b] || (values[a] == values[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

double top_k_log_partition(std::span<const double> logits, std::size_t k) {
  if (k == 0) throw InputError("z-loss needs k >= 1");
  const auto idx = top_k_indices(logits, k);
  if (idx.empty()) return -std::numeric_limits<double>::infinity();
  const double m = logits[idx.front()];
  double z = 0.0;
  for (std::size_t i : idx) z += std::exp(logits[i] - m);
  return m + std::log(z);
}

double zloss(std::span<const double> logits, const ZLossConfig& cfg) {
  const double lz = top_k_log_partition(logits, cfg.k);
  return cfg.squared ? cfg.lambda * lz * lz : cfg.lambda * lz;
}

AugToken select(std::span<const double> dist, std::size_t vocab_size, const SelectPolicy& policy,
                std::mt19937_64& rng) {
  if (dist.empty()) throw InputError("select: empty distribution");
  if (policy.kind == SelectPolicy::Kind::kArgmax) {
    const auto it = std::max_element(dist.begin(), dist.end());
    return AugToken::from_global(static_cast<std::size_t>(it - dist.begin()), vocab_size);
  }
  if (!(policy.temperature > 0.0)) throw InputError("sampling temperature must be positive");
  std::vector<double> w(dist.begin(), dist.end());
  if (policy.temperature != 1.0) {
    for (double& v : w) v = v > 0.0 ? std::pow(v, 1.0 / policy.temperature) : 0.0;
  }
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  return AugToken::from_global(pick(rng), vocab_size);
}

namespace ad_ops {

ad::Var pointer_logits(ad::Graph& g, ad::Var hidden, ad::Var patches, ad::Var query_proj,
                       ad::Var key_proj) {
  const std::size_t d = g.value(hidden).cols();
  ad::Var q = ad::linear(g, hidden, query_proj);
  ad::Var k = ad::linear(g, patches, key_proj);
  return ad::scale(g, ad::matmul_nt(g, q, k), 1.0 / std::sqrt(static_cast<double>(d)));
}

ad::Var augmented_nll_sum(ad::Graph& g, ad::Var logits, std::span<const std::size_t> gold) {
  const Tensor2& L = g.value(logits);
  if (gold.size() != L.rows()) {
    throw DimensionError("augmented_nll: " + std::to_string(gold.size()) + " targets for " +
                         std::to_string(L.rows()) + " rows");
  }
  auto probs = std::make_shared<Tensor2>(L.rows(), L.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < L.rows(); ++i) {
    if (gold[i] >= L.cols()) throw InputError("augmented_nll: target index out of range");
    rowops::softmax(L.row(i), probs->row(i));
    const auto row = L.row(i);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    total += m + std::log(z) - row[gold[i]];
  }
  std::vector<std::size_t> tgt(gold.begin(), gold.end());
  return g.push(Tensor2(1, 1, total), {logits},
                [logits, probs, tgt = std::move(tgt)](ad::Graph& g, std::size_t self) {
                  const double d = g.grad(ad::Var{self})(0, 0);
                  Tensor2& dl = g.grad(logits);
                  for (std::size_t i = 0; i < probs->rows(); ++i) {
                    for (std::size_t j = 0; j < probs->cols(); ++j) dl(i, j) += d * (*probs)(i, j);
                    dl(i, tgt[i]) -= d;
                  }
                });
}

ad::Var zloss_sum(ad::Graph& g, ad::Var logits, const ZLossConfig& cfg) {
  const Tensor2& L = g.value(logits);
  // Per row: log Zbar and d(log Zbar)/d(logit), nonzero only on the top-k set.
  auto dlz = std::make_shared<Tensor2>(L.rows(), L.cols());
  auto lz = std::make_shared<std::vector<double>>(L.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < L.rows(); ++i) {
    const auto row = L.row(i);
    const auto idx = top_k_indices(row, cfg.k);
    const double m = row[idx.front()];
    double z = 0.0;
    for (std::size_t j : idx) z += std::exp(row[j] - m);
    for (std::size_t j : idx) (*dlz)(i, j) = std::exp(row[j] - m) / z;
    (*lz)[i] = m + std::log(z);
    total += cfg.squared ? cfg.lambda * (*lz)[i] * (*lz)[i] : cfg.lambda * (*lz)[i];
  }
  return g.push(Tensor2(1, 1, total), {logits}, [logits, dlz, lz, cfg](ad::Graph& g, std::size_t self) {
    const double d = g.grad(ad::Var{self})(0, 0);
    Tensor2& dl = g.grad(logits);
    for (std::size_t i = 0; i < dlz->rows(); ++i) {
      const double f = d * cfg.lambda * (cfg.squared ? 2.0 * (*lz)[i] : 1.0);
      for (std::size_t j = 0; j < dlz->cols(); ++j) dl(i, j) += f * (*dlz)(i, j);
    }
  });
}

}  // namespace ad_ops

}  // namespace pointcopy
