#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "brepmatch/errors.hpp"
#include "brepmatch/features.hpp"

namespace brepmatch::ad {

// Smooth leaky rectifier used for attention logits: slope 0.2 far left, 1
// far right, f(0) = 0.
inline double soft_leaky(double x) {
  const double sp = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return 0.2 * x + 0.8 * (sp - std::log(2.0));
}
inline double soft_leaky_grad(double x) { return 0.2 + 0.8 / (1.0 + std::exp(-x)); }

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

inline constexpr double kProbClamp = 1e-12;

// Directed typed edges grouped by destination (CSR).
struct EdgeList {
  std::vector<std::size_t> offsets{0};  // size n_nodes + 1
  std::vector<std::size_t> src;
  std::vector<int> type;
};

// Index lists, one per output row (CSR).
struct Segments {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> items;

  std::size_t size() const { return offsets.size() - 1; }
  void add(const std::vector<std::size_t>& v) {
    items.insert(items.end(), v.begin(), v.end());
    offsets.push_back(items.size());
  }
};

struct Var {
  int id = -1;
};

// Reverse-mode differentiation over row-major matrices. Nodes are recorded in
// evaluation order; backward() walks them in reverse.
class Tape {
public:
  Var constant(Matrix v) { return push(std::move(v), false); }

  // A parameter read in place; gradients are accumulated into *sink.
  Var parameter(const Matrix& value, Matrix* sink) {
    Node n;
    n.ref = &value;
    n.sink = sink;
    n.needs_grad = sink != nullptr;
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
  }

  const Matrix& value(Var v) const { return nodes_[v.id].value(); }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.cols() != B.rows()) throw ShapeError("matmul inner dimensions differ");
    Var out = push(A * B, any(a, b));
    record(out, [this, a, b, out] {
      const Matrix& G = grad(out);
      if (needs_grad(a)) grad(a).noalias() += G * value(b).transpose();
      if (needs_grad(b)) grad(b).noalias() += value(a).transpose() * G;
    });
    return out;
  }

  Var add(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) throw ShapeError("add shapes differ");
    Var out = push(value(a) + value(b), any(a, b));
    record(out, [this, a, b, out] {
      if (needs_grad(a)) grad(a) += grad(out);
      if (needs_grad(b)) grad(b) += grad(out);
    });
    return out;
  }

  // a + broadcast of the 1 x n row b
  Var add_row(Var a, Var b) {
    if (value(b).rows() != 1 || value(b).cols() != value(a).cols()) throw ShapeError("bias shape");
    Matrix v = value(a);
    v.rowwise() += value(b).row(0);
    Var out = push(std::move(v), any(a, b));
    record(out, [this, a, b, out] {
      if (needs_grad(a)) grad(a) += grad(out);
      if (needs_grad(b)) grad(b) += grad(out).colwise().sum();
    });
    return out;
  }

  Var tanh(Var a) {
    Var out = push(value(a).array().tanh().matrix(), any(a));
    record(out, [this, a, out] {
      if (!needs_grad(a)) return;
      const Matrix& y = value(out);
      grad(a).array() += grad(out).array() * (1.0 - y.array().square());
    });
    return out;
  }

  Var concat_cols(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    if (A.rows() != B.rows()) throw ShapeError("concat row counts differ");
    Matrix v(A.rows(), A.cols() + B.cols());
    v.leftCols(A.cols()) = A;
    v.rightCols(B.cols()) = B;
    Var out = push(std::move(v), any(a, b));
    record(out, [this, a, b, out] {
      const Matrix& G = grad(out);
      const auto ca = value(a).cols();
      if (needs_grad(a)) grad(a) += G.leftCols(ca);
      if (needs_grad(b)) grad(b) += G.rightCols(G.cols() - ca);
    });
    return out;
  }

  Var concat_rows(const std::vector<Var>& parts) {
    Eigen::Index rows = 0, cols = parts.empty() ? 0 : value(parts[0]).cols();
    bool ng = false;
    for (Var p : parts) {
      if (value(p).cols() != cols) throw ShapeError("concat column counts differ");
      rows += value(p).rows();
      ng = ng || needs_grad(p);
    }
    Matrix v(rows, cols);
    Eigen::Index r = 0;
    for (Var p : parts) {
      v.middleRows(r, value(p).rows()) = value(p);
      r += value(p).rows();
    }
    Var out = push(std::move(v), ng);
    record(out, [this, parts, out] {
      Eigen::Index r0 = 0;
      for (Var p : parts) {
        const auto n = value(p).rows();
        if (needs_grad(p)) grad(p) += grad(out).middleRows(r0, n);
        r0 += n;
      }
    });
    return out;
  }

  Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
    Var out = push(value(a).middleRows(start, count), any(a));
    record(out, [this, a, start, count, out] {
      if (needs_grad(a)) grad(a).middleRows(start, count) += grad(out);
    });
    return out;
  }

  Var gather_rows(Var a, std::vector<std::size_t> idx) {
    const Matrix& A = value(a);
    Matrix v(static_cast<Eigen::Index>(idx.size()), A.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) v.row(static_cast<Eigen::Index>(r)) = A.row(static_cast<Eigen::Index>(idx[r]));
    Var out = push(std::move(v), any(a));
    record(out, [this, a, idx = std::move(idx), out] {
      if (!needs_grad(a)) return;
      Matrix& g = grad(a);
      const Matrix& G = grad(out);
      for (std::size_t r = 0; r < idx.size(); ++r) g.row(static_cast<Eigen::Index>(idx[r])) += G.row(static_cast<Eigen::Index>(r));
    });
    return out;
  }

  // Row r of the result is the mean of rows seg[r] of a (zero when empty).
  Var segment_mean(Var a, const Segments& seg) {
    const Matrix& A = value(a);
    Matrix v = Matrix::Zero(static_cast<Eigen::Index>(seg.size()), A.cols());
    for (std::size_t r = 0; r < seg.size(); ++r) {
      const std::size_t b = seg.offsets[r], e = seg.offsets[r + 1];
      if (b == e) continue;
      for (std::size_t k = b; k < e; ++k) v.row(static_cast<Eigen::Index>(r)) += A.row(static_cast<Eigen::Index>(seg.items[k]));
      v.row(static_cast<Eigen::Index>(r)) /= static_cast<double>(e - b);
    }
    Var out = push(std::move(v), any(a));
    record(out, [this, a, &seg, out] {
      if (!needs_grad(a)) return;
      Matrix& g = grad(a);
      const Matrix& G = grad(out);
      for (std::size_t r = 0; r < seg.size(); ++r) {
        const std::size_t b = seg.offsets[r], e = seg.offsets[r + 1];
        if (b == e) continue;
        const double inv = 1.0 / static_cast<double>(e - b);
        for (std::size_t k = b; k < e; ++k)
          g.row(static_cast<Eigen::Index>(seg.items[k])) += inv * G.row(static_cast<Eigen::Index>(r));
      }
    });
    return out;
  }

  // Multi-head attention over typed edges. Per head h (columns h*dh..):
  //   x_e  = aq_h . q_dst + ak_h . k_src + at_h . T_type
  //   a_e  = softmax over the incoming edges of dst of soft_leaky(x_e)
  //   out  = sum_e a_e (v_src + T_type)
  // aq, ak, at are heads x dh. Nodes without incoming edges get zero.
  Var attention(Var q, Var k, Var v, Var t, Var aq, Var ak, Var at, const EdgeList& edges) {
    const Matrix& Q = value(q);
    const Matrix& K = value(k);
    const Matrix& V = value(v);
    const Matrix& T = value(t);
    const Matrix& Aq = value(aq);
    const Matrix& Ak = value(ak);
    const Matrix& At = value(at);
    const Eigen::Index heads = Aq.rows(), dh = Aq.cols();
    const Eigen::Index n = Q.rows();
    if (Q.cols() != heads * dh || K.cols() != Q.cols() || V.cols() != Q.cols() || T.cols() != Q.cols())
      throw ShapeError("attention widths");
    if (static_cast<Eigen::Index>(edges.offsets.size()) != n + 1) throw ShapeError("attention edge list size");
    Matrix sq(n, heads), sk(n, heads), st(T.rows(), heads);
    for (Eigen::Index h = 0; h < heads; ++h) {
      sq.col(h) = Q.middleCols(h * dh, dh) * Aq.row(h).transpose();
      sk.col(h) = K.middleCols(h * dh, dh) * Ak.row(h).transpose();
      st.col(h) = T.middleCols(h * dh, dh) * At.row(h).transpose();
    }
    const std::size_t ne = edges.src.size();
    auto alpha = std::make_shared<Matrix>(static_cast<Eigen::Index>(ne), heads);
    auto xs = std::make_shared<Matrix>(static_cast<Eigen::Index>(ne), heads);
    Matrix out = Matrix::Zero(n, Q.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t b = edges.offsets[static_cast<std::size_t>(i)], e = edges.offsets[static_cast<std::size_t>(i) + 1];
      if (b == e) continue;
      for (Eigen::Index h = 0; h < heads; ++h) {
        double zmax = -std::numeric_limits<double>::infinity();
        for (std::size_t m = b; m < e; ++m) {
          const double x = sq(i, h) + sk(static_cast<Eigen::Index>(edges.src[m]), h) + st(edges.type[m], h);
          (*xs)(static_cast<Eigen::Index>(m), h) = x;
          const double z = soft_leaky(x);
          (*alpha)(static_cast<Eigen::Index>(m), h) = z;
          zmax = std::max(zmax, z);
        }
        double sum = 0.0;
        for (std::size_t m = b; m < e; ++m) {
          double& a = (*alpha)(static_cast<Eigen::Index>(m), h);
          a = std::exp(a - zmax);
          sum += a;
        }
        for (std::size_t m = b; m < e; ++m) {
          double& a = (*alpha)(static_cast<Eigen::Index>(m), h);
          a /= sum;
          out.block(i, h * dh, 1, dh) +=
              a * (V.block(static_cast<Eigen::Index>(edges.src[m]), h * dh, 1, dh) + T.block(edges.type[m], h * dh, 1, dh));
        }
      }
    }
    const bool ng = any(q, k) || any(v, t) || any(aq, ak) || any(at);
    Var o = push(std::move(out), ng);
    record(o, [this, q, k, v, t, aq, ak, at, &edges, alpha, xs, o, heads, dh, n] {
      const Matrix& G = grad(o);
      const Matrix& Q = value(q);
      const Matrix& K = value(k);
      const Matrix& V = value(v);
      const Matrix& T = value(t);
      Matrix dsq = Matrix::Zero(n, heads), dsk = Matrix::Zero(K.rows(), heads), dst = Matrix::Zero(T.rows(), heads);
      Matrix dV = Matrix::Zero(V.rows(), V.cols()), dT = Matrix::Zero(T.rows(), T.cols());
      std::vector<double> da;
      for (Eigen::Index i = 0; i < n; ++i) {
        const std::size_t b = edges.offsets[static_cast<std::size_t>(i)], e = edges.offsets[static_cast<std::size_t>(i) + 1];
        if (b == e) continue;
        for (Eigen::Index h = 0; h < heads; ++h) {
          const auto g = G.block(i, h * dh, 1, dh);
          da.assign(e - b, 0.0);
          double dot = 0.0;
          for (std::size_t m = b; m < e; ++m) {
            const auto src = static_cast<Eigen::Index>(edges.src[m]);
            const double a = (*alpha)(static_cast<Eigen::Index>(m), h);
            const double d = g.cwiseProduct(V.block(src, h * dh, 1, dh) + T.block(edges.type[m], h * dh, 1, dh)).sum();
            da[m - b] = d;
            dot += a * d;
            dV.block(src, h * dh, 1, dh) += a * g;
            dT.block(edges.type[m], h * dh, 1, dh) += a * g;
          }
          for (std::size_t m = b; m < e; ++m) {
            const double a = (*alpha)(static_cast<Eigen::Index>(m), h);
            const double dx = a * (da[m - b] - dot) * soft_leaky_grad((*xs)(static_cast<Eigen::Index>(m), h));
            dsq(i, h) += dx;
            dsk(static_cast<Eigen::Index>(edges.src[m]), h) += dx;
            dst(edges.type[m], h) += dx;
          }
        }
      }
      const Matrix& Aq = value(aq);
      const Matrix& Ak = value(ak);
      const Matrix& At = value(at);
      if (needs_grad(v)) grad(v) += dV;
      for (Eigen::Index h = 0; h < heads; ++h) {
        if (needs_grad(q)) grad(q).middleCols(h * dh, dh).noalias() += dsq.col(h) * Aq.row(h);
        if (needs_grad(k)) grad(k).middleCols(h * dh, dh).noalias() += dsk.col(h) * Ak.row(h);
        if (needs_grad(aq)) grad(aq).row(h).noalias() += dsq.col(h).transpose() * Q.middleCols(h * dh, dh);
        if (needs_grad(ak)) grad(ak).row(h).noalias() += dsk.col(h).transpose() * K.middleCols(h * dh, dh);
        if (needs_grad(at)) grad(at).row(h).noalias() += dst.col(h).transpose() * T.middleCols(h * dh, dh);
        dT.middleCols(h * dh, dh).noalias() += dst.col(h) * At.row(h);
      }
      if (needs_grad(t)) grad(t) += dT;
    });
    return o;
  }

  // logit_p = w2 . tanh(A_i + B_j) + b2 for each pair p = (i, j).
  Var pair_logits(Var a, Var b, Var w2, Var b2, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    const Matrix& W = value(w2);
    if (A.cols() != B.cols() || W.rows() != A.cols() || W.cols() != 1) throw ShapeError("pair scorer shapes");
    const auto P = static_cast<Eigen::Index>(pairs.size());
    auto hidden = std::make_shared<Matrix>(P, A.cols());
    for (Eigen::Index p = 0; p < P; ++p) {
      const auto [i, j] = pairs[static_cast<std::size_t>(p)];
      hidden->row(p) = (A.row(static_cast<Eigen::Index>(i)) + B.row(static_cast<Eigen::Index>(j))).array().tanh().matrix();
    }
    Matrix z = (*hidden) * W;
    z.array() += value(b2)(0, 0);
    Var out = push(std::move(z), any(a, b) || any(w2, b2));
    record(out, [this, a, b, w2, b2, pairs = std::move(pairs), hidden, out] {
      const Matrix& G = grad(out);
      if (needs_grad(w2)) grad(w2).noalias() += hidden->transpose() * G;
      if (needs_grad(b2)) grad(b2)(0, 0) += G.sum();
      if (!needs_grad(a) && !needs_grad(b)) return;
      Matrix dpre = G * value(w2).transpose();
      dpre.array() *= 1.0 - hidden->array().square();
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto r = static_cast<Eigen::Index>(p);
        if (needs_grad(a)) grad(a).row(static_cast<Eigen::Index>(pairs[p].first)) += dpre.row(r);
        if (needs_grad(b)) grad(b).row(static_cast<Eigen::Index>(pairs[p].second)) += dpre.row(r);
      }
    });
    return out;
  }

  // scale * sum_p -[y log p + w (1-y) log(1-p)], p = clamp(sigmoid(z)).
  Var weighted_bce(Var logits, std::vector<double> labels, double w, double scale) {
    const Matrix& Z = value(logits);
    if (Z.cols() != 1 || static_cast<std::size_t>(Z.rows()) != labels.size()) throw ShapeError("loss shapes");
    double total = 0.0;
    for (Eigen::Index r = 0; r < Z.rows(); ++r) {
      const double p = std::clamp(sigmoid(Z(r, 0)), kProbClamp, 1.0 - kProbClamp);
      const double y = labels[static_cast<std::size_t>(r)];
      total += -(y * std::log(p) + w * (1.0 - y) * std::log(1.0 - p));
    }
    Matrix v(1, 1);
    v(0, 0) = scale * total;
    Var out = push(std::move(v), any(logits));
    record(out, [this, logits, labels = std::move(labels), w, scale, out] {
      if (!needs_grad(logits)) return;
      const double g = grad(out)(0, 0) * scale;
      const Matrix& Z = value(logits);
      Matrix& dz = grad(logits);
      for (Eigen::Index r = 0; r < Z.rows(); ++r) {
        const double s = sigmoid(Z(r, 0));
        if (s < kProbClamp || s > 1.0 - kProbClamp) continue;  // flat where clamped
        const double y = labels[static_cast<std::size_t>(r)];
        dz(r, 0) += g * (-y * (1.0 - s) + w * (1.0 - y) * s);
      }
    });
    return out;
  }

  // Runs reverse accumulation from the scalar `root` and adds parameter
  // gradients into their sinks.
  void backward(Var root) {
    if (value(root).size() != 1) throw ShapeError("backward needs a scalar root");
    if (!needs_grad(root)) return;
    grad(root)(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.size() == 0) continue;
      if (n.back) n.back();
      if (n.sink) *n.sink += n.grad;
    }
  }

private:
  struct Node {
    Matrix own;
    const Matrix* ref = nullptr;
    Matrix grad;
    Matrix* sink = nullptr;
    bool needs_grad = false;
    std::function<void()> back;
    const Matrix& value() const { return ref ? *ref : own; }
  };

  Var push(Matrix v, bool needs_grad) {
    Node n;
    n.own = std::move(v);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
  }

  void record(Var out, std::function<void()> f) {
    if (nodes_[out.id].needs_grad) nodes_[out.id].back = std::move(f);
  }

  bool any(Var a) const { return needs_grad(a); }
  bool any(Var a, Var b) const { return needs_grad(a) || needs_grad(b); }

  Matrix& grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value().rows(), n.value().cols());
    return n.grad;
  }

  std::vector<Node> nodes_;
};

}  // namespace brepmatch::ad
