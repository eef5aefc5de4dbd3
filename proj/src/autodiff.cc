/* Copyright 2026 The TSA Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tsa/autodiff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace tsa {
namespace {

[[noreturn]] void Mismatch(OpKind kind, const std::string& detail) {
  throw ShapeError(std::string(OpName(kind)) + ": " + detail);
}

void ExpectArity(OpKind kind, std::span<const Var> in, std::size_t lo,
                 std::size_t hi) {
  if (in.size() < lo || in.size() > hi) {
    Mismatch(kind, "expected " + std::to_string(lo) +
                       (lo == hi ? "" : "-" + std::to_string(hi)) +
                       " inputs, got " + std::to_string(in.size()));
  }
}

void ExpectRank(OpKind kind, const Tensor& t, std::size_t rank,
                const char* what) {
  if (t.rank() != rank) {
    Mismatch(kind, std::string(what) + " must be rank " + std::to_string(rank) +
                       ", got " + ShapeString(t.shape()));
  }
}

// Rows of the trailing axis: (row count, row length).
std::pair<std::size_t, std::size_t> Rows(const Tensor& t) {
  const std::size_t c = t.shape().back();
  return {t.size() / c, c};
}

// Trailing-suffix broadcast check for Add.
bool IsSuffix(const Shape& big, const Shape& small) {
  if (small.size() > big.size()) return false;
  return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

struct ConvGeom {
  std::size_t n, c, h, w, o, k, ho, wo;
};

ConvGeom ConvGeometry(const Tensor& x, const Tensor& k, const OpAttrs& a) {
  ExpectRank(OpKind::kConv2d, x, 4, "input");
  ExpectRank(OpKind::kConv2d, k, 4, "kernel");
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), k.dim(0), k.dim(2), 0, 0};
  if (k.dim(1) != g.c) {
    Mismatch(OpKind::kConv2d, "input channels " + std::to_string(g.c) +
                                  " vs kernel channels " + std::to_string(k.dim(1)));
  }
  if (k.dim(2) != k.dim(3)) {
    Mismatch(OpKind::kConv2d, "kernel must be square, got " + ShapeString(k.shape()));
  }
  if (a.stride == 0) Mismatch(OpKind::kConv2d, "stride must be positive");
  if (g.h + 2 * a.padding < g.k || g.w + 2 * a.padding < g.k) {
    Mismatch(OpKind::kConv2d, "kernel " + ShapeString(k.shape()) +
                                  " larger than padded input " + ShapeString(x.shape()));
  }
  g.ho = (g.h + 2 * a.padding - g.k) / a.stride + 1;
  g.wo = (g.w + 2 * a.padding - g.k) / a.stride + 1;
  return g;
}

// Calls f(out_index, in_index, kernel_index) for every contributing tap.
template <typename F>
void ForEachConvTap(const ConvGeom& g, const OpAttrs& a, F&& f) {
  const long pad = static_cast<long>(a.padding);
  for (std::size_t n = 0; n < g.n; ++n)
    for (std::size_t o = 0; o < g.o; ++o)
      for (std::size_t i = 0; i < g.ho; ++i)
        for (std::size_t j = 0; j < g.wo; ++j) {
          const std::size_t out = ((n * g.o + o) * g.ho + i) * g.wo + j;
          for (std::size_t c = 0; c < g.c; ++c)
            for (std::size_t ki = 0; ki < g.k; ++ki) {
              const long y = static_cast<long>(i * a.stride + ki) - pad;
              if (y < 0 || y >= static_cast<long>(g.h)) continue;
              for (std::size_t kj = 0; kj < g.k; ++kj) {
                const long x = static_cast<long>(j * a.stride + kj) - pad;
                if (x < 0 || x >= static_cast<long>(g.w)) continue;
                const std::size_t in =
                    ((n * g.c + c) * g.h + static_cast<std::size_t>(y)) * g.w +
                    static_cast<std::size_t>(x);
                const std::size_t kw = ((o * g.c + c) * g.k + ki) * g.k + kj;
                f(out, in, kw);
              }
            }
        }
}

void AddInto(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

std::string_view OpName(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParam: return "param";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kRelu: return "relu";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kReshape: return "reshape";
    case OpKind::kConcat: return "concat";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kMaxPool2d: return "maxpool2d";
    case OpKind::kScale: return "scale";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kKlDiv: return "kl_div";
    case OpKind::kNll: return "nll";
    case OpKind::kDetach: return "detach";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::Constant(Tensor value) {
  return Push(Node{OpKind::kConstant, {}, std::move(value), {}, {}});
}

Var Graph::Param(Tensor& storage) {
  if (auto it = param_index_.find(&storage); it != param_index_.end()) {
    return Var(this, it->second);
  }
  Var v = Push(Node{OpKind::kParam, {}, storage, {}, {}});
  params_.push_back({&storage, v.id()});
  param_index_.emplace(&storage, v.id());
  return v;
}

Var Graph::Apply(OpKind kind, std::span<const Var> in, const OpAttrs& attrs) {
  for (const Var& v : in) {
    if (v.graph() != this) Mismatch(kind, "input belongs to another graph");
  }
  Node node{kind, {}, {}, attrs, {}};
  for (const Var& v : in) node.inputs.push_back(v.id());

  switch (kind) {
    case OpKind::kConstant:
    case OpKind::kParam:
      Mismatch(kind, "leaves are created with Constant()/Param()");

    case OpKind::kMatmul: {
      ExpectArity(kind, in, 2, 2);
      const Tensor& a = in[0].value();
      const Tensor& b = in[1].value();
      ExpectRank(kind, a, 2, "lhs");
      ExpectRank(kind, b, 2, "rhs");
      if (a.dim(1) != b.dim(0)) {
        Mismatch(kind, "inner extents differ: " + ShapeString(a.shape()) + " x " +
                           ShapeString(b.shape()));
      }
      const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
      Tensor out({n, m});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = a[i * k + p];
          for (std::size_t j = 0; j < m; ++j) out[i * m + j] += aip * b[p * m + j];
        }
      node.value = std::move(out);
      break;
    }

    case OpKind::kAdd: {
      ExpectArity(kind, in, 2, 2);
      const Tensor& a = in[0].value();
      const Tensor& b = in[1].value();
      if (!IsSuffix(a.shape(), b.shape())) {
        Mismatch(kind, ShapeString(b.shape()) + " does not broadcast onto " +
                           ShapeString(a.shape()));
      }
      Tensor out = a;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i % b.size()];
      node.value = std::move(out);
      break;
    }

    case OpKind::kMul: {
      ExpectArity(kind, in, 2, 2);
      const Tensor& a = in[0].value();
      const Tensor& b = in[1].value();
      if (a.shape() != b.shape()) {
        Mismatch(kind, ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
      }
      Tensor out = a;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
      node.value = std::move(out);
      break;
    }

    case OpKind::kRelu:
    case OpKind::kExp:
    case OpKind::kLog:
    case OpKind::kScale:
    case OpKind::kDetach: {
      ExpectArity(kind, in, 1, 1);
      Tensor out = in[0].value();
      for (double& v : out.values()) {
        switch (kind) {
          case OpKind::kRelu: v = v < 0.0 ? 0.0 : v; break;
          case OpKind::kExp: v = std::exp(v); break;
          case OpKind::kLog: v = std::log(v); break;
          case OpKind::kScale: v *= attrs.scalar; break;
          default: break;
        }
      }
      node.value = std::move(out);
      break;
    }

    case OpKind::kSum:
    case OpKind::kMean: {
      ExpectArity(kind, in, 1, 1);
      const Tensor& x = in[0].value();
      double s = 0.0;
      for (double v : x.values()) s += v;
      if (kind == OpKind::kMean) s /= static_cast<double>(x.size());
      node.value = Tensor::Scalar(s);
      break;
    }

    case OpKind::kReshape: {
      ExpectArity(kind, in, 1, 1);
      const Tensor& x = in[0].value();
      if (attrs.shape.empty() || NumElements(attrs.shape) != x.size()) {
        Mismatch(kind, "cannot view " + ShapeString(x.shape()) + " as " +
                           ShapeString(attrs.shape));
      }
      node.value = x.Reshaped(attrs.shape);
      break;
    }

    case OpKind::kConcat: {
      if (in.empty()) Mismatch(kind, "no inputs");
      const Shape& first = in[0].value().shape();
      if (attrs.axis >= first.size()) {
        Mismatch(kind, "axis " + std::to_string(attrs.axis) + " out of range for " +
                           ShapeString(first));
      }
      Shape out_shape = first;
      out_shape[attrs.axis] = 0;
      for (const Var& v : in) {
        const Shape& s = v.shape();
        bool ok = s.size() == first.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d) {
          if (d != attrs.axis && s[d] != first[d]) ok = false;
        }
        if (!ok) {
          Mismatch(kind, ShapeString(s) + " incompatible with " + ShapeString(first) +
                             " along axis " + std::to_string(attrs.axis));
        }
        out_shape[attrs.axis] += s[attrs.axis];
      }
      const std::size_t outer =
          NumElements(Shape(first.begin(), first.begin() + attrs.axis));
      std::vector<double> out;
      out.reserve(NumElements(out_shape));
      for (std::size_t o = 0; o < outer; ++o) {
        for (const Var& v : in) {
          const Tensor& t = v.value();
          const std::size_t chunk = t.size() / outer;
          out.insert(out.end(), t.buffer().begin() + o * chunk,
                     t.buffer().begin() + (o + 1) * chunk);
        }
      }
      node.value = Tensor(out_shape, std::move(out));
      break;
    }

    case OpKind::kConv2d: {
      ExpectArity(kind, in, 2, 3);
      const Tensor& x = in[0].value();
      const Tensor& k = in[1].value();
      const ConvGeom g = ConvGeometry(x, k, attrs);
      Tensor out({g.n, g.o, g.ho, g.wo});
      ForEachConvTap(g, attrs, [&](std::size_t o, std::size_t i, std::size_t w) {
        out[o] += x[i] * k[w];
      });
      if (in.size() == 3) {
        const Tensor& b = in[2].value();
        if (b.shape() != Shape{g.o}) {
          Mismatch(kind, "bias " + ShapeString(b.shape()) + " for " +
                             std::to_string(g.o) + " output channels");
        }
        const std::size_t plane = g.ho * g.wo;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[(i / plane) % g.o];
      }
      node.value = std::move(out);
      break;
    }

    case OpKind::kMaxPool2d: {
      ExpectArity(kind, in, 1, 1);
      const Tensor& x = in[0].value();
      ExpectRank(kind, x, 4, "input");
      const std::size_t k = attrs.window;
      if (k == 0 || x.dim(2) < k || x.dim(3) < k) {
        Mismatch(kind, "window " + std::to_string(k) + " does not fit " +
                           ShapeString(x.shape()));
      }
      const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
      const std::size_t ho = h / k, wo = w / k;
      Tensor out({n, c, ho, wo});
      node.argmax.resize(out.size());
      for (std::size_t p = 0; p < n * c; ++p)
        for (std::size_t i = 0; i < ho; ++i)
          for (std::size_t j = 0; j < wo; ++j) {
            std::size_t best = (p * h + i * k) * w + j * k;
            for (std::size_t di = 0; di < k; ++di)
              for (std::size_t dj = 0; dj < k; ++dj) {
                const std::size_t idx = (p * h + i * k + di) * w + j * k + dj;
                if (x[idx] > x[best]) best = idx;
              }
            const std::size_t o = (p * ho + i) * wo + j;
            out[o] = x[best];
            node.argmax[o] = best;
          }
      node.value = std::move(out);
      break;
    }

    case OpKind::kSoftmax:
    case OpKind::kLogSoftmax: {
      ExpectArity(kind, in, 1, 1);
      if (!(attrs.scalar > 0.0)) Mismatch(kind, "temperature must be positive");
      const Tensor& z = in[0].value();
      const auto [rows, cols] = Rows(z);
      Tensor out = z;
      for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.values().data() + r * cols;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cols; ++c) {
          row[c] /= attrs.scalar;
          mx = std::max(mx, row[c]);
        }
        double denom = 0.0;
        for (std::size_t c = 0; c < cols; ++c) denom += std::exp(row[c] - mx);
        const double lse = mx + std::log(denom);
        for (std::size_t c = 0; c < cols; ++c) {
          row[c] = kind == OpKind::kSoftmax ? std::exp(row[c] - lse) : row[c] - lse;
        }
      }
      node.value = std::move(out);
      break;
    }

    case OpKind::kKlDiv: {
      ExpectArity(kind, in, 2, 2);
      const Tensor& p = in[0].value();
      const Tensor& q = in[1].value();
      if (p.shape() != q.shape()) {
        Mismatch(kind, ShapeString(p.shape()) + " vs " + ShapeString(q.shape()));
      }
      const auto [rows, cols] = Rows(p);
      double s = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) s += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kProbFloor)));
      }
      (void)cols;
      node.value = Tensor::Scalar(s / static_cast<double>(rows));
      break;
    }

    case OpKind::kNll: {
      ExpectArity(kind, in, 1, 1);
      const Tensor& lp = in[0].value();
      ExpectRank(kind, lp, 2, "log-probabilities");
      if (attrs.labels.size() != lp.dim(0)) {
        Mismatch(kind, std::to_string(attrs.labels.size()) + " labels for " +
                           std::to_string(lp.dim(0)) + " rows");
      }
      double s = 0.0;
      for (std::size_t i = 0; i < lp.dim(0); ++i) {
        if (attrs.labels[i] >= lp.dim(1)) {
          Mismatch(kind, "label " + std::to_string(attrs.labels[i]) + " in row " +
                             std::to_string(i) + " out of range for " +
                             std::to_string(lp.dim(1)) + " classes");
        }
        s -= lp.at(i, attrs.labels[i]);
      }
      node.value = Tensor::Scalar(s / static_cast<double>(lp.dim(0)));
      break;
    }
  }
  return Push(std::move(node));
}

Gradients Graph::Backward(Var loss) const {
  if (loss.graph() != this) throw std::invalid_argument("backward: foreign loss");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + ShapeString(loss.shape()));
  }
  Gradients out;
  out.grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) out.grads_.emplace_back(n.value.shape(), 0.0);
  std::vector<bool> reached(nodes_.size(), false);
  out.grads_[loss.id()][0] = 1.0;
  reached[loss.id()] = true;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    if (!reached[id]) continue;
    BackwardNode(nodes_[id], out.grads_[id], out.grads_, reached);
  }
  return out;
}

void Graph::BackwardNode(const Node& node, const Tensor& g,
                         std::vector<Tensor>& grads,
                         std::vector<bool>& reached) const {
  auto in = [&](std::size_t i) -> const Tensor& { return nodes_[node.inputs[i]].value; };
  auto acc = [&](std::size_t i) -> Tensor& {
    reached[node.inputs[i]] = true;
    return grads[node.inputs[i]];
  };
  const Tensor& y = node.value;

  switch (node.kind) {
    case OpKind::kConstant:
    case OpKind::kParam:
    case OpKind::kDetach:
      break;

    case OpKind::kMatmul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
      Tensor& da = acc(0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g[i * m + j] * b[p * m + j];
          da[i * k + p] += s;
        }
      Tensor& db = acc(1);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = a[i * k + p];
          for (std::size_t j = 0; j < m; ++j) db[p * m + j] += aip * g[i * m + j];
        }
      break;
    }

    case OpKind::kAdd: {
      AddInto(acc(0), g);
      Tensor& db = acc(1);
      for (std::size_t i = 0; i < g.size(); ++i) db[i % db.size()] += g[i];
      break;
    }

    case OpKind::kMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      Tensor& da = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * b[i];
      Tensor& db = acc(1);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * a[i];
      break;
    }

    case OpKind::kRelu: {
      const Tensor& x = in(0);
      Tensor& dx = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (x[i] > 0.0) dx[i] += g[i];
      }
      break;
    }

    case OpKind::kExp: {
      Tensor& dx = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * y[i];
      break;
    }

    case OpKind::kLog: {
      const Tensor& x = in(0);
      Tensor& dx = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / x[i];
      break;
    }

    case OpKind::kScale: {
      Tensor& dx = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * node.attrs.scalar;
      break;
    }

    case OpKind::kSum:
    case OpKind::kMean: {
      Tensor& dx = acc(0);
      const double s =
          node.kind == OpKind::kMean ? g[0] / static_cast<double>(dx.size()) : g[0];
      for (double& v : dx.values()) v += s;
      break;
    }

    case OpKind::kReshape:
      AddInto(acc(0), g);
      break;

    case OpKind::kConcat: {
      const std::size_t axis = node.attrs.axis;
      const std::size_t outer =
          NumElements(Shape(y.shape().begin(), y.shape().begin() + axis));
      const std::size_t row = y.size() / outer;
      std::size_t offset = 0;
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        Tensor& dx = acc(k);
        const std::size_t chunk = dx.size() / outer;
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t c = 0; c < chunk; ++c)
            dx[o * chunk + c] += g[o * row + offset + c];
        offset += chunk;
      }
      break;
    }

    case OpKind::kConv2d: {
      const Tensor& x = in(0);
      const Tensor& k = in(1);
      const ConvGeom geo = ConvGeometry(x, k, node.attrs);
      Tensor& dx = acc(0);
      Tensor& dk = acc(1);
      ForEachConvTap(geo, node.attrs,
                     [&](std::size_t o, std::size_t i, std::size_t w) {
                       dx[i] += g[o] * k[w];
                       dk[w] += g[o] * x[i];
                     });
      if (node.inputs.size() == 3) {
        Tensor& db = acc(2);
        const std::size_t plane = geo.ho * geo.wo;
        for (std::size_t i = 0; i < g.size(); ++i) db[(i / plane) % geo.o] += g[i];
      }
      break;
    }

    case OpKind::kMaxPool2d: {
      Tensor& dx = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) dx[node.argmax[i]] += g[i];
      break;
    }

    case OpKind::kSoftmax: {
      // dz = (1/T) * y * (g - <g, y>) per row.
      const auto [rows, cols] = Rows(y);
      Tensor& dz = acc(0);
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c;
          dz[i] += y[i] * (g[i] - dot) / node.attrs.scalar;
        }
      }
      break;
    }

    case OpKind::kLogSoftmax: {
      // dz = (1/T) * (g - softmax * sum(g)) per row.
      const auto [rows, cols] = Rows(y);
      Tensor& dz = acc(0);
      for (std::size_t r = 0; r < rows; ++r) {
        double gs = 0.0;
        for (std::size_t c = 0; c < cols; ++c) gs += g[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c;
          dz[i] += (g[i] - std::exp(y[i]) * gs) / node.attrs.scalar;
        }
      }
      break;
    }

    case OpKind::kKlDiv: {
      const Tensor& p = in(0);
      const Tensor& q = in(1);
      const double scale = g[0] / static_cast<double>(Rows(p).first);
      Tensor& dp = acc(0);
      Tensor& dq = acc(1);
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        const double qf = std::max(q[i], kProbFloor);
        dp[i] += scale * (std::log(p[i]) - std::log(qf) + 1.0);
        if (q[i] > kProbFloor) dq[i] -= scale * p[i] / q[i];
      }
      break;
    }

    case OpKind::kNll: {
      const Tensor& lp = in(0);
      Tensor& dx = acc(0);
      const double scale = g[0] / static_cast<double>(lp.dim(0));
      for (std::size_t i = 0; i < lp.dim(0); ++i) {
        dx.at(i, node.attrs.labels[i]) -= scale;
      }
      break;
    }
  }
}

namespace {
Var Unary(OpKind kind, Var x, const OpAttrs& attrs = {}) {
  const Var in[] = {x};
  return x.graph()->Apply(kind, in, attrs);
}
Var Binary(OpKind kind, Var a, Var b, const OpAttrs& attrs = {}) {
  const Var in[] = {a, b};
  return a.graph()->Apply(kind, in, attrs);
}
}  // namespace

Var Matmul(Var a, Var b) { return Binary(OpKind::kMatmul, a, b); }
Var Add(Var a, Var b) { return Binary(OpKind::kAdd, a, b); }
Var Mul(Var a, Var b) { return Binary(OpKind::kMul, a, b); }
Var Relu(Var x) { return Unary(OpKind::kRelu, x); }
Var Exp(Var x) { return Unary(OpKind::kExp, x); }
Var Log(Var x) { return Unary(OpKind::kLog, x); }
Var Sum(Var x) { return Unary(OpKind::kSum, x); }
Var Mean(Var x) { return Unary(OpKind::kMean, x); }
Var Detach(Var x) { return Unary(OpKind::kDetach, x); }

Var Reshape(Var x, Shape shape) {
  OpAttrs a;
  a.shape = std::move(shape);
  return Unary(OpKind::kReshape, x, a);
}

Var Concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  OpAttrs a;
  a.axis = axis;
  return parts[0].graph()->Apply(OpKind::kConcat, parts, a);
}

Var Conv2d(Var input, Var kernel, std::size_t stride, std::size_t padding) {
  OpAttrs a;
  a.stride = stride;
  a.padding = padding;
  return Binary(OpKind::kConv2d, input, kernel, a);
}

Var Conv2d(Var input, Var kernel, Var bias, std::size_t stride,
           std::size_t padding) {
  OpAttrs a;
  a.stride = stride;
  a.padding = padding;
  const Var in[] = {input, kernel, bias};
  return input.graph()->Apply(OpKind::kConv2d, in, a);
}

Var MaxPool2d(Var x, std::size_t window) {
  OpAttrs a;
  a.window = window;
  return Unary(OpKind::kMaxPool2d, x, a);
}

Var Scale(Var x, double factor) {
  OpAttrs a;
  a.scalar = factor;
  return Unary(OpKind::kScale, x, a);
}

Var Softmax(Var logits, double temperature) {
  OpAttrs a;
  a.scalar = temperature;
  return Unary(OpKind::kSoftmax, logits, a);
}

Var LogSoftmax(Var logits, double temperature) {
  OpAttrs a;
  a.scalar = temperature;
  return Unary(OpKind::kLogSoftmax, logits, a);
}

Var KlDiv(Var p, Var q) { return Binary(OpKind::kKlDiv, p, q); }

Var Nll(Var log_probs, std::vector<std::size_t> labels) {
  OpAttrs a;
  a.labels = std::move(labels);
  return Unary(OpKind::kNll, log_probs, a);
}

double FiniteDiffCheck(const std::function<Var(Graph&)>& loss_fn,
                       std::span<Tensor* const> params, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("finite_diff_check: epsilon must be positive");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<Tensor> analytic;
  {
    Graph g;
    Var loss = loss_fn(g);
    if (!std::isfinite(loss.value()[0])) return kInf;
    const Gradients grads = g.Backward(loss);
    for (Tensor* p : params) {
      analytic.emplace_back(p->shape(), 0.0);
      for (const auto& b : g.params()) {
        if (b.storage == p) analytic.back() = grads.of(b.node);
      }
    }
  }

  auto eval = [&]() {
    Graph g;
    return loss_fn(g).value()[0];
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + epsilon;
      const double up = eval();
      p[i] = saved - epsilon;
      const double down = eval();
      p[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) return kInf;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[k][i];
      const double err =
          std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace tsa
