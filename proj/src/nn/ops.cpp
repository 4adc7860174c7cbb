#include "goalflow/nn/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

namespace goalflow::nn {

namespace {

using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Strided = Eigen::Map<RowMajor, 0, Eigen::OuterStride<>>;
using ConstStrided = Eigen::Map<const RowMajor, 0, Eigen::OuterStride<>>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
Map as_matrix(Tensor& t) { return Map(t.data().data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_string(a) +
                              " and " + shape_string(b));
}

void require_same_size(const char* op, const Var& a, const Var& b) {
  if (a.value().size() != b.value().size()) shape_error(op, a.shape(), b.shape());
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

template <typename F>
Var unary(const Var& x, F&& f, std::function<void(Node&)> bw) {
  Tensor out(x.shape());
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(in[i]);
  return make_result(std::move(out), {x}, std::move(bw));
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  Tensor out({a.rows(), b.cols()});
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  return make_result(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto g = as_matrix(self.grad);
    if (pa.requires_grad) as_matrix(pa.grad_buffer()).noalias() += g * as_matrix(pb.value).transpose();
    if (pb.requires_grad) as_matrix(pb.grad_buffer()).noalias() += as_matrix(pa.value).transpose() * g;
  });
}

Var linear(const Var& x, const Var& weight, const Var& bias) {
  if (x.cols() != weight.rows() || bias.value().size() != weight.cols()) {
    throw std::invalid_argument("linear: input " + shape_string(x.shape()) + ", weight " +
                                shape_string(weight.shape()) + ", bias " +
                                shape_string(bias.shape()) + " do not conform");
  }
  Tensor out({x.rows(), weight.cols()});
  auto o = as_matrix(out);
  o.noalias() = as_matrix(x.value()) * as_matrix(weight.value());
  const Eigen::Map<const Eigen::RowVectorX<Scalar>> b(bias.value().data().data(), weight.cols());
  o.rowwise() += b;
  return make_result(std::move(out), {x, weight, bias}, [](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    Node& pb = parent(self, 2);
    const auto g = as_matrix(self.grad);
    if (px.requires_grad) as_matrix(px.grad_buffer()).noalias() += g * as_matrix(pw.value).transpose();
    if (pw.requires_grad) as_matrix(pw.grad_buffer()).noalias() += as_matrix(px.value).transpose() * g;
    if (pb.requires_grad) {
      Tensor& gb = pb.grad_buffer();
      Eigen::Map<Eigen::RowVectorX<Scalar>>(gb.data().data(), g.cols()) += g.colwise().sum();
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_size("add", a, b);
  Tensor out = a.value();
  auto o = out.data();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (parent(self, p).requires_grad) parent(self, p).accumulate(self.grad.reshaped(parent(self, p).value.shape()));
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_size("sub", a, b);
  Tensor out = a.value();
  auto o = out.data();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) pa.accumulate(self.grad.reshaped(pa.value.shape()));
    if (pb.requires_grad) {
      auto g = pb.grad_buffer().data();
      const auto s = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= s[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_size("mul", a, b);
  Tensor out = a.value();
  auto o = out.data();
  const auto bv = b.value().data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  return make_result(std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto s = self.grad.data();
    if (pa.requires_grad) {
      auto g = pa.grad_buffer().data();
      const auto other = pb.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i] * other[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer().data();
      const auto other = pa.value.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i] * other[i];
    }
  });
}

Var add_row(const Var& x, const Var& row) {
  if (row.value().size() != x.cols()) shape_error("add_row", x.shape(), row.shape());
  Tensor out = x.value();
  const Eigen::Map<const Eigen::RowVectorX<Scalar>> r(row.value().data().data(), x.cols());
  as_matrix(out).rowwise() += r;
  return make_result(std::move(out), {x, row}, [](Node& self) {
    Node& px = parent(self, 0);
    Node& pr = parent(self, 1);
    if (px.requires_grad) px.accumulate(self.grad);
    if (pr.requires_grad) {
      const auto g = as_matrix(self.grad);
      Eigen::Map<Eigen::RowVectorX<Scalar>>(pr.grad_buffer().data().data(), g.cols()) += g.colwise().sum();
    }
  });
}

Var affine(const Var& x, Scalar scale, Scalar shift) {
  return unary(x, [=](Scalar v) { return scale * v + shift; }, [scale](Node& self) {
    auto g = parent(self, 0).grad_buffer().data();
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * s[i];
  });
}

Var silu(const Var& x) {
  return unary(x, [](Scalar v) { return v / (1 + std::exp(-v)); }, [](Node& self) {
    Node& px = parent(self, 0);
    auto g = px.grad_buffer().data();
    const auto in = px.value.data();
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Scalar sig = 1 / (1 + std::exp(-in[i]));
      g[i] += s[i] * sig * (1 + in[i] * (1 - sig));
    }
  });
}

Var sigmoid(const Var& x) {
  return unary(x, [](Scalar v) { return 1 / (1 + std::exp(-v)); }, [](Node& self) {
    auto g = parent(self, 0).grad_buffer().data();
    const auto y = self.value.data();
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i] * y[i] * (1 - y[i]);
  });
}

Var abs(const Var& x) {
  // Subgradient at zero is 0.
  return unary(x, [](Scalar v) { return std::abs(v); }, [](Node& self) {
    Node& px = parent(self, 0);
    auto g = px.grad_buffer().data();
    const auto in = px.value.data();
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += s[i] * static_cast<Scalar>((in[i] > 0) - (in[i] < 0));
    }
  });
}

Var log_clamped(const Var& x, Scalar floor) {
  return unary(x, [=](Scalar v) { return std::log(std::max(v, floor)); }, [floor](Node& self) {
    Node& px = parent(self, 0);
    auto g = px.grad_buffer().data();
    const auto in = px.value.data();
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in[i] > floor) g[i] += s[i] / in[i];
    }
  });
}

Var sum(const Var& x) {
  const auto in = x.value().data();
  const Scalar total = std::accumulate(in.begin(), in.end(), Scalar{0});
  return make_result(Tensor::scalar(total), {x}, [](Node& self) {
    const Scalar s = self.grad[0];
    for (auto& g : parent(self, 0).grad_buffer().data()) g += s;
  });
}

Var mean(const Var& x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw std::invalid_argument("mean: empty tensor");
  return affine(sum(x), 1.0 / static_cast<Scalar>(n));
}

Var softmax_rows(const Var& x) {
  Tensor out(x.shape());
  const std::size_t r = x.rows(), c = x.cols();
  const auto in = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < r; ++i) {
    const Scalar* row = in.data() + i * c;
    Scalar* dst = o.data() + i * c;
    const Scalar mx = *std::max_element(row, row + c);
    Scalar total = 0;
    for (std::size_t j = 0; j < c; ++j) total += dst[j] = std::exp(row[j] - mx);
    for (std::size_t j = 0; j < c; ++j) dst[j] /= total;
  }
  return make_result(std::move(out), {x}, [](Node& self) {
    const std::size_t r = self.value.rows(), c = self.value.cols();
    auto g = parent(self, 0).grad_buffer().data();
    const auto y = self.value.data();
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < r; ++i) {
      Scalar dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += s[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += y[i * c + j] * (s[i * c + j] - dot);
    }
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, Scalar eps) {
  const std::size_t r = x.rows(), c = x.cols();
  if (gain.value().size() != c || bias.value().size() != c) {
    shape_error("layer_norm", x.shape(), gain.shape());
  }
  auto normalized = std::make_shared<Tensor>(x.shape());
  auto inv_std = std::make_shared<std::vector<Scalar>>(r);
  Tensor out(x.shape());
  const auto in = x.value().data();
  const auto gv = gain.value().data();
  const auto bv = bias.value().data();
  for (std::size_t i = 0; i < r; ++i) {
    const Scalar* row = in.data() + i * c;
    Scalar mu = 0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<Scalar>(c);
    Scalar var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<Scalar>(c);
    const Scalar is = 1 / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (std::size_t j = 0; j < c; ++j) {
      const Scalar n = (row[j] - mu) * is;
      (*normalized)[i * c + j] = n;
      out[i * c + j] = n * gv[j] + bv[j];
    }
  }
  return make_result(std::move(out), {x, gain, bias}, [normalized, inv_std](Node& self) {
    Node& px = parent(self, 0);
    Node& pg = parent(self, 1);
    Node& pb = parent(self, 2);
    const std::size_t r = self.value.rows(), c = self.value.cols();
    const auto s = self.grad.data();
    const auto n = normalized->data();
    if (pg.requires_grad) {
      auto gg = pg.grad_buffer().data();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gg[j] += s[i * c + j] * n[i * c + j];
    }
    if (pb.requires_grad) {
      auto gb = pb.grad_buffer().data();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += s[i * c + j];
    }
    if (px.requires_grad) {
      auto gx = px.grad_buffer().data();
      const auto gv = pg.value.data();
      std::vector<Scalar> dn(c);
      for (std::size_t i = 0; i < r; ++i) {
        Scalar mean_dn = 0, mean_dn_n = 0;
        for (std::size_t j = 0; j < c; ++j) {
          dn[j] = s[i * c + j] * gv[j];
          mean_dn += dn[j];
          mean_dn_n += dn[j] * n[i * c + j];
        }
        mean_dn /= static_cast<Scalar>(c);
        mean_dn_n /= static_cast<Scalar>(c);
        for (std::size_t j = 0; j < c; ++j) {
          gx[i * c + j] += (*inv_std)[i] * (dn[j] - mean_dn - n[i * c + j] * mean_dn_n);
        }
      }
    }
  });
}

Var attention(const Var& q, const Var& k, const Var& v, std::size_t batch, std::size_t heads,
              Tensor* weights) {
  const std::size_t d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("attention: feature dim " + std::to_string(d) +
                                " not divisible by " + std::to_string(heads) + " heads");
  }
  if (k.cols() != d || v.cols() != d || k.rows() != v.rows()) {
    shape_error("attention", k.shape(), v.shape());
  }
  if (batch == 0 || q.rows() % batch != 0 || k.rows() % batch != 0) {
    throw std::invalid_argument("attention: row counts not divisible by batch");
  }
  const std::size_t tq = q.rows() / batch, tk = k.rows() / batch, dh = d / heads;
  const Scalar scale = 1 / std::sqrt(static_cast<Scalar>(dh));

  auto probs = std::make_shared<Tensor>(Shape{batch, heads, tq, tk});
  Tensor out({q.rows(), d});
  const Eigen::OuterStride<> stride(static_cast<Eigen::Index>(d));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      ConstStrided qh(q.value().data().data() + b * tq * d + h * dh, tq, dh, stride);
      ConstStrided kh(k.value().data().data() + b * tk * d + h * dh, tk, dh, stride);
      ConstStrided vh(v.value().data().data() + b * tk * d + h * dh, tk, dh, stride);
      Map p(probs->data().data() + (b * heads + h) * tq * tk, tq, tk);
      p.noalias() = (qh * kh.transpose()) * scale;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        p.row(i).array() -= p.row(i).maxCoeff();
        p.row(i) = p.row(i).array().exp();
        p.row(i) /= p.row(i).sum();
      }
      Strided oh(out.data().data() + b * tq * d + h * dh, tq, dh, stride);
      oh.noalias() = p * vh;
    }
  }
  if (weights) *weights = *probs;

  return make_result(std::move(out), {q, k, v}, [probs, batch, heads, tq, tk, dh, d, scale](Node& self) {
    Node& pq = parent(self, 0);
    Node& pk = parent(self, 1);
    Node& pv = parent(self, 2);
    Tensor* gq = pq.requires_grad ? &pq.grad_buffer() : nullptr;
    Tensor* gk = pk.requires_grad ? &pk.grad_buffer() : nullptr;
    Tensor* gv = pv.requires_grad ? &pv.grad_buffer() : nullptr;
    const Eigen::OuterStride<> stride(static_cast<Eigen::Index>(d));
    RowMajor dp, ds;
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t qoff = b * tq * d + h * dh, koff = b * tk * d + h * dh;
        ConstStrided qh(pq.value.data().data() + qoff, tq, dh, stride);
        ConstStrided kh(pk.value.data().data() + koff, tk, dh, stride);
        ConstStrided vh(pv.value.data().data() + koff, tk, dh, stride);
        ConstStrided go(self.grad.data().data() + qoff, tq, dh, stride);
        ConstMap p(probs->data().data() + (b * heads + h) * tq * tk, tq, tk);
        if (gv) Strided(gv->data().data() + koff, tk, dh, stride).noalias() += p.transpose() * go;
        if (!gq && !gk) continue;
        dp.noalias() = go * vh.transpose();
        ds = p.array() * (dp.colwise() - (dp.array() * p.array()).rowwise().sum().matrix()).array();
        ds *= scale;
        if (gq) Strided(gq->data().data() + qoff, tq, dh, stride).noalias() += ds * kh;
        if (gk) Strided(gk->data().data() + koff, tk, dh, stride).noalias() += ds.transpose() * qh;
      }
    }
  });
}

Var repeat_rows(const Var& x, std::size_t times) {
  const std::size_t r = x.rows(), c = x.cols();
  Tensor out({r * times, c});
  const auto in = x.value().data();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t t = 0; t < times; ++t) {
      std::copy_n(in.data() + i * c, c, out.data().data() + (i * times + t) * c);
    }
  }
  return make_result(std::move(out), {x}, [r, c, times](Node& self) {
    auto g = parent(self, 0).grad_buffer().data();
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t t = 0; t < times; ++t)
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += s[(i * times + t) * c + j];
  });
}

Var tile_rows(const Var& x, std::size_t times) {
  const std::size_t n = x.value().size(), c = x.cols();
  Tensor out({x.rows() * times, c});
  for (std::size_t t = 0; t < times; ++t) {
    std::copy_n(x.value().data().data(), n, out.data().data() + t * n);
  }
  return make_result(std::move(out), {x}, [n, times](Node& self) {
    auto g = parent(self, 0).grad_buffer().data();
    const auto s = self.grad.data();
    for (std::size_t t = 0; t < times; ++t)
      for (std::size_t i = 0; i < n; ++i) g[i] += s[t * n + i];
  });
}

Var interleave_blocks(const std::vector<Var>& blocks, const std::vector<std::size_t>& counts,
                      std::size_t batch) {
  if (blocks.empty() || blocks.size() != counts.size()) {
    throw std::invalid_argument("interleave_blocks: blocks and counts differ in length");
  }
  const std::size_t c = blocks.front().cols();
  std::size_t group = 0;
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].cols() != c || blocks[i].rows() != batch * counts[i]) {
      throw std::invalid_argument("interleave_blocks: block " + std::to_string(i) + " has shape " +
                                  shape_string(blocks[i].shape()));
    }
    offsets.push_back(group);
    group += counts[i];
  }
  Tensor out({batch * group, c});
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto in = blocks[i].value().data();
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(in.data() + b * counts[i] * c, counts[i] * c,
                  out.data().data() + (b * group + offsets[i]) * c);
    }
  }
  return make_result(std::move(out), blocks, [counts, offsets, group, batch, c](Node& self) {
    const auto s = self.grad.data();
    for (std::size_t i = 0; i < counts.size(); ++i) {
      Node& p = parent(self, i);
      if (!p.requires_grad) continue;
      auto g = p.grad_buffer().data();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t j = 0; j < counts[i] * c; ++j)
          g[b * counts[i] * c + j] += s[(b * group + offsets[i]) * c + j];
    }
  });
}

Var slice_blocks(const Var& x, std::size_t group, std::size_t begin, std::size_t count) {
  if (group == 0 || x.rows() % group != 0 || begin + count > group) {
    throw std::invalid_argument("slice_blocks: invalid token range");
  }
  const std::size_t batch = x.rows() / group, c = x.cols();
  Tensor out({batch * count, c});
  const auto in = x.value().data();
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(in.data() + (b * group + begin) * c, count * c,
                out.data().data() + b * count * c);
  }
  return make_result(std::move(out), {x}, [batch, group, begin, count, c](Node& self) {
    auto g = parent(self, 0).grad_buffer().data();
    const auto s = self.grad.data();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t j = 0; j < count * c; ++j) g[(b * group + begin) * c + j] += s[b * count * c + j];
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_result(std::move(out), {x}, [](Node& self) {
    Node& px = parent(self, 0);
    px.accumulate(self.grad.reshaped(px.value.shape()));
  });
}

Var masked_replace(const Var& x, const Var& fill, const std::vector<bool>& keep) {
  const std::size_t r = x.rows(), c = x.cols();
  if (keep.size() != r || fill.value().size() != c) {
    throw std::invalid_argument("masked_replace: mask/fill do not match " + shape_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t i = 0; i < r; ++i) {
    if (!keep[i]) std::copy_n(fill.value().data().data(), c, out.data().data() + i * c);
  }
  return make_result(std::move(out), {x, fill}, [keep, r, c](Node& self) {
    Node& px = parent(self, 0);
    Node& pf = parent(self, 1);
    const auto s = self.grad.data();
    if (px.requires_grad) {
      auto g = px.grad_buffer().data();
      for (std::size_t i = 0; i < r; ++i)
        if (keep[i])
          for (std::size_t j = 0; j < c; ++j) g[i * c + j] += s[i * c + j];
    }
    if (pf.requires_grad) {
      auto g = pf.grad_buffer().data();
      for (std::size_t i = 0; i < r; ++i)
        if (!keep[i])
          for (std::size_t j = 0; j < c; ++j) g[j] += s[i * c + j];
    }
  });
}

}  // namespace goalflow::nn
