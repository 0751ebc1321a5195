#include "pointcopy/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "pointcopy/error.hpp"
#include "pointcopy/numerics/kernels.hpp"
#include "pointcopy/numerics/rowops.hpp"

namespace pointcopy::ad {

Var Graph::constant(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, nullptr, false});
  return Var{nodes_.size() - 1};
}

Var Graph::constant_ref(const Tensor2& value) {
  nodes_.push_back(Node{{}, {}, {}, nullptr, &value, false});
  return Var{nodes_.size() - 1};
}

Var Graph::param(Param& p) {
  nodes_.push_back(Node{{}, {}, {}, &p, &p.value, true});
  return Var{nodes_.size() - 1};
}

Var Graph::push(Tensor2 value, std::initializer_list<Var> parents, Backward backward) {
  bool rg = false;
  for (Var p : parents) rg = rg || nodes_.at(p.id).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, rg ? std::move(backward) : Backward{}, nullptr, nullptr, rg});
  return Var{nodes_.size() - 1};
}

Tensor2& Graph::grad(Var v) {
  Node& n = nodes_.at(v.id);
  const Tensor2& val = n.borrowed ? *n.borrowed : n.value;
  if (n.grad.empty() && !val.empty()) n.grad = Tensor2(val.rows(), val.cols());
  return n.grad;
}

void Graph::backward(Var loss, double seed) {
  const Tensor2& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw DimensionError("backward() needs a 1x1 loss, got " + lv.shape_string());
  }
  if (!requires_grad(loss)) return;
  grad(loss)(0, 0) = seed;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      auto dst = n.param->grad.flat();
      auto src = n.grad.flat();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

namespace {

void require(bool ok, const char* op, const Tensor2& a, const Tensor2& b) {
  if (!ok) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                         b.shape_string());
  }
}

}  // namespace

Var linear(Graph& g, Var x, Var w) { return linear(g, x, w, Var{}); }

Var linear(Graph& g, Var x, Var w, Var b) {
  const Tensor2& X = g.value(x);
  const Tensor2& W = g.value(w);
  const bool has_b = b.id != Var{}.id;
  require(X.cols() == W.rows(), "linear", X, W);
  if (has_b) require(g.value(b).rows() == 1 && g.value(b).cols() == W.cols(), "linear bias", W, g.value(b));
  Tensor2 y(X.rows(), W.cols());
  const Tensor2* B = has_b ? &g.value(b) : nullptr;
  for (std::size_t i = 0; i < X.rows(); ++i) rowops::linear(X.row(i), W, B, y.row(i));

  auto back = [x, w, b, has_b](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(Var{self});
    const Tensor2& X = g.value(x);
    const Tensor2& W = g.value(w);
    const auto& k = kernels::active();
    if (g.requires_grad(x)) {
      Tensor2& dx = g.grad(x);
      for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t p = 0; p < W.rows(); ++p) {
          dx(i, p) += k.dot(dy.row(i).data(), W.row(p).data(), W.cols());
        }
      }
    }
    if (g.requires_grad(w)) {
      Tensor2& dw = g.grad(w);
      for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t p = 0; p < W.rows(); ++p) {
          const double xp = X(i, p);
          if (xp != 0.0) k.axpy(xp, dy.row(i).data(), dw.row(p).data(), W.cols());
        }
      }
    }
    if (has_b && g.requires_grad(b)) {
      Tensor2& db = g.grad(b);
      for (std::size_t i = 0; i < dy.rows(); ++i) k.axpy(1.0, dy.row(i).data(), db.data(), dy.cols());
    }
  };
  if (has_b) return g.push(std::move(y), {x, w, b}, back);
  return g.push(std::move(y), {x, w}, back);
}

Var matmul_nt(Graph& g, Var a, Var b) {
  const Tensor2& A = g.value(a);
  const Tensor2& B = g.value(b);
  require(A.cols() == B.cols(), "matmul_nt", A, B);
  const auto& k = kernels::active();
  Tensor2 y(A.rows(), B.rows());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < B.rows(); ++j) y(i, j) = k.dot(A.row(i).data(), B.row(j).data(), A.cols());
  }
  return g.push(std::move(y), {a, b}, [a, b](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(Var{self});
    const Tensor2& A = g.value(a);
    const Tensor2& B = g.value(b);
    const auto& k = kernels::active();
    if (g.requires_grad(a)) {
      Tensor2& da = g.grad(a);
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < B.rows(); ++j) k.axpy(dy(i, j), B.row(j).data(), da.row(i).data(), A.cols());
    }
    if (g.requires_grad(b)) {
      Tensor2& db = g.grad(b);
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < B.rows(); ++j) k.axpy(dy(i, j), A.row(i).data(), db.row(j).data(), A.cols());
    }
  });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor2& A = g.value(a);
  const Tensor2& B = g.value(b);
  require(A.same_shape(B), "add", A, B);
  Tensor2 y = A;
  auto yf = y.flat();
  auto bf = B.flat();
  for (std::size_t i = 0; i < yf.size(); ++i) yf[i] += bf[i];
  return g.push(std::move(y), {a, b}, [a, b](Graph& g, std::size_t self) {
    auto dy = g.grad(Var{self}).flat();
    for (Var p : {a, b}) {
      if (!g.requires_grad(p)) continue;
      auto dp = g.grad(p).flat();
      for (std::size_t i = 0; i < dy.size(); ++i) dp[i] += dy[i];
    }
  });
}

Var mul(Graph& g, Var a, Var b) {
  const Tensor2& A = g.value(a);
  const Tensor2& B = g.value(b);
  require(A.same_shape(B), "mul", A, B);
  Tensor2 y = A;
  auto yf = y.flat();
  auto bf = B.flat();
  for (std::size_t i = 0; i < yf.size(); ++i) yf[i] *= bf[i];
  return g.push(std::move(y), {a, b}, [a, b](Graph& g, std::size_t self) {
    auto dy = g.grad(Var{self}).flat();
    auto af = g.value(a).flat();
    auto bf = g.value(b).flat();
    if (g.requires_grad(a)) {
      auto da = g.grad(a).flat();
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bf[i];
    }
    if (g.requires_grad(b)) {
      auto db = g.grad(b).flat();
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * af[i];
    }
  });
}

Var scale(Graph& g, Var a, double s) {
  Tensor2 y = g.value(a);
  for (double& v : y.flat()) v *= s;
  return g.push(std::move(y), {a}, [a, s](Graph& g, std::size_t self) {
    auto dy = g.grad(Var{self}).flat();
    auto da = g.grad(a).flat();
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * s;
  });
}

Var softmax_rows(Graph& g, Var x) {
  const Tensor2& X = g.value(x);
  Tensor2 y(X.rows(), X.cols());
  for (std::size_t i = 0; i < X.rows(); ++i) rowops::softmax(X.row(i), y.row(i));
  return g.push(std::move(y), {x}, [x](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(Var{self});
    const Tensor2& y = g.value(Var{self});
    Tensor2& dx = g.grad(x);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) s += dy(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) dx(i, j) += y(i, j) * (dy(i, j) - s);
    }
  });
}

Var layernorm(Graph& g, Var x, Var gamma, Var beta) {
  const Tensor2& X = g.value(x);
  const Tensor2& G = g.value(gamma);
  const Tensor2& B = g.value(beta);
  require(G.rows() == 1 && G.cols() == X.cols() && B.same_shape(G), "layernorm", X, G);
  Tensor2 y(X.rows(), X.cols());
  auto stats = std::make_shared<std::vector<rowops::NormStats>>(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) (*stats)[i] = rowops::layernorm(X.row(i), G.row(0), B.row(0), y.row(i));
  return g.push(std::move(y), {x, gamma, beta}, [x, gamma, beta, stats](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(Var{self});
    const Tensor2& X = g.value(x);
    const Tensor2& G = g.value(gamma);
    const std::size_t n = X.cols();
    std::vector<double> xhat(n), dxhat(n);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      const auto [mean, rstd] = (*stats)[i];
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        xhat[j] = (X(i, j) - mean) * rstd;
        dxhat[j] = dy(i, j) * G(0, j);
        m1 += dxhat[j];
        m2 += dxhat[j] * xhat[j];
      }
      m1 /= static_cast<double>(n);
      m2 /= static_cast<double>(n);
      if (g.requires_grad(x)) {
        Tensor2& dx = g.grad(x);
        for (std::size_t j = 0; j < n; ++j) dx(i, j) += rstd * (dxhat[j] - m1 - xhat[j] * m2);
      }
      if (g.requires_grad(gamma)) {
        Tensor2& dg = g.grad(gamma);
        for (std::size_t j = 0; j < n; ++j) dg(0, j) += dy(i, j) * xhat[j];
      }
      if (g.requires_grad(beta)) {
        Tensor2& db = g.grad(beta);
        for (std::size_t j = 0; j < n; ++j) db(0, j) += dy(i, j);
      }
    }
  });
}

Var gelu(Graph& g, Var x) {
  Tensor2 y = g.value(x);
  for (double& v : y.flat()) v = rowops::gelu(v);
  return g.push(std::move(y), {x}, [x](Graph& g, std::size_t self) {
    auto dy = g.grad(Var{self}).flat();
    auto xv = g.value(x).flat();
    auto dx = g.grad(x).flat();
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * rowops::gelu_grad(xv[i]);
  });
}

Var causal_attention(Graph& g, Var q, Var k, Var v, std::size_t heads, std::vector<Tensor2>* probs_out) {
  const Tensor2& Q = g.value(q);
  const Tensor2& K = g.value(k);
  const Tensor2& V = g.value(v);
  require(Q.same_shape(K) && Q.same_shape(V), "causal_attention", Q, K);
  if (heads == 0 || Q.cols() % heads != 0) {
    throw DimensionError("causal_attention: width " + std::to_string(Q.cols()) +
                         " not divisible by heads " + std::to_string(heads));
  }
  const std::size_t T = Q.rows();
  const std::size_t D = Q.cols();
  const std::size_t dh = D / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<Tensor2>>(heads, Tensor2(T, T));
  Tensor2 y(T, D);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor2& P = (*probs)[h];
    for (std::size_t i = 0; i < T; ++i) {
      rowops::attend(Q.row(i).subspan(h * dh, dh), K.data() + h * dh, V.data() + h * dh, D, i + 1,
                     sc, P.row(i), y.row(i).subspan(h * dh, dh));
    }
  }
  if (probs_out) *probs_out = *probs;
  return g.push(std::move(y), {q, k, v}, [q, k, v, heads, probs, sc](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(Var{self});
    const Tensor2& Q = g.value(q);
    const Tensor2& K = g.value(k);
    const Tensor2& V = g.value(v);
    const auto& kt = kernels::active();
    const std::size_t T = Q.rows();
    const std::size_t D = Q.cols();
    const std::size_t dh = D / heads;
    Tensor2 dq(T, D), dk(T, D), dv(T, D);
    std::vector<double> dp(T);
    for (std::size_t h = 0; h < heads; ++h) {
      const Tensor2& P = (*probs)[h];
      const std::size_t off = h * dh;
      for (std::size_t i = 0; i < T; ++i) {
        const double* dyi = dy.row(i).data() + off;
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          dp[j] = kt.dot(dyi, V.row(j).data() + off, dh);
          s += dp[j] * P(i, j);
        }
        for (std::size_t j = 0; j <= i; ++j) {
          const double pij = P(i, j);
          const double ds = pij * (dp[j] - s) * sc;
          kt.axpy(ds, K.row(j).data() + off, dq.row(i).data() + off, dh);
          kt.axpy(ds, Q.row(i).data() + off, dk.row(j).data() + off, dh);
          kt.axpy(pij, dyi, dv.row(j).data() + off, dh);
        }
      }
    }
    auto acc = [&g](Var p, const Tensor2& d) {
      if (!g.requires_grad(p)) return;
      auto dst = g.grad(p).flat();
      auto src = d.flat();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    acc(q, dq);
    acc(k, dk);
    acc(v, dv);
  });
}

Var gather_rows(Graph& g, Var table, std::span<const std::size_t> rows) {
  const Tensor2& Tb = g.value(table);
  Tensor2 y(rows.size(), Tb.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= Tb.rows()) {
      throw InputError("gather_rows: row " + std::to_string(rows[r]) + " out of range for " +
                       Tb.shape_string());
    }
    std::copy_n(Tb.row(rows[r]).begin(), Tb.cols(), y.row(r).begin());
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return g.push(std::move(y), {table}, [table, idx = std::move(idx)](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(Var{self});
    Tensor2& dt = g.grad(table);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      kernels::active().axpy(1.0, dy.row(r).data(), dt.row(idx[r]).data(), dy.cols());
    }
  });
}

Var concat_rows(Graph& g, Var a, Var b) {
  const Tensor2& A = g.value(a);
  const Tensor2& B = g.value(b);
  require(A.cols() == B.cols() || A.empty() || B.empty(), "concat_rows", A, B);
  const std::size_t cols = A.empty() ? B.cols() : A.cols();
  Tensor2 y(A.rows() + B.rows(), cols);
  std::copy(A.flat().begin(), A.flat().end(), y.flat().begin());
  std::copy(B.flat().begin(), B.flat().end(), y.flat().begin() + static_cast<std::ptrdiff_t>(A.size()));
  return g.push(std::move(y), {a, b}, [a, b](Graph& g, std::size_t self) {
    auto dy = g.grad(Var{self}).flat();
    const std::size_t na = g.value(a).size();
    if (g.requires_grad(a) && na) {
      auto da = g.grad(a).flat();
      for (std::size_t i = 0; i < na; ++i) da[i] += dy[i];
    }
    if (g.requires_grad(b) && !g.value(b).empty()) {
      auto db = g.grad(b).flat();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[na + i];
    }
  });
}

Var concat_cols(Graph& g, Var a, Var b) {
  const Tensor2& A = g.value(a);
  const Tensor2& B = g.value(b);
  require(A.rows() == B.rows(), "concat_cols", A, B);
  const std::size_t ca = A.cols();
  const std::size_t cb = B.cols();
  Tensor2 y(A.rows(), ca + cb);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    std::copy_n(A.row(i).begin(), ca, y.row(i).begin());
    std::copy_n(B.row(i).begin(), cb, y.row(i).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return g.push(std::move(y), {a, b}, [a, b, ca, cb](Graph& g, std::size_t self) {
    const Tensor2& dy = g.grad(Var{self});
    if (g.requires_grad(a) && ca) {
      Tensor2& da = g.grad(a);
      for (std::size_t i = 0; i < dy.rows(); ++i)
        for (std::size_t j = 0; j < ca; ++j) da(i, j) += dy(i, j);
    }
    if (g.requires_grad(b) && cb) {
      Tensor2& db = g.grad(b);
      for (std::size_t i = 0; i < dy.rows(); ++i)
        for (std::size_t j = 0; j < cb; ++j) db(i, j) += dy(i, ca + j);
    }
  });
}

Var sum_all(Graph& g, Var a) {
  double s = 0.0;
  for (double v : g.value(a).flat()) s += v;
  return g.push(Tensor2(1, 1, s), {a}, [a](Graph& g, std::size_t self) {
    const double d = g.grad(Var{self})(0, 0);
    for (double& v : g.grad(a).flat()) v += d;
  });
}

Var mean_all(Graph& g, Var a) {
  const auto n = static_cast<double>(g.value(a).size());
  return scale(g, sum_all(g, a), n > 0 ? 1.0 / n : 0.0);
}

}  // namespace pointcopy::ad
