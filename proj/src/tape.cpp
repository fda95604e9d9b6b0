#include "polyglot/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace polyglot {

NodeId Tape::push(Vector value, bool tracked) {
  if (ran_backward_) {
    throw std::logic_error("tape: cannot record after backward");
  }
  nodes_.push_back(Node{std::move(value), {}, tracked, {}});
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::check(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("tape: node " + std::to_string(id.index) +
                            " not on this tape (size " + std::to_string(nodes_.size()) + ")");
  }
}

void Tape::check_len(NodeId id, std::size_t len, const char* what) const {
  check(id);
  if (nodes_[id.index].value.size() != len) {
    throw std::invalid_argument(std::string("tape: ") + what + " has length " +
                                std::to_string(nodes_[id.index].value.size()) + ", expected " +
                                std::to_string(len));
  }
}

const Vector& Tape::value(NodeId id) const {
  check(id);
  return nodes_[id.index].value;
}

Vector& Tape::grad_buf(NodeId id) {
  Node& n = nodes_[id.index];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

const Vector& Tape::grad(NodeId id) {
  check(id);
  return grad_buf(id);
}

NodeId Tape::constant(Vector v) { return push(std::move(v), false); }

NodeId Tape::parameter(std::span<const double> values) {
  return push(Vector(values.begin(), values.end()), true);
}

NodeId Tape::column(NodeId m, std::size_t rows, std::size_t cols, std::size_t j) {
  check_len(m, rows * cols, "column: matrix");
  if (j >= cols) {
    throw std::out_of_range("tape: column " + std::to_string(j) + " out of range for " +
                            std::to_string(rows) + "x" + std::to_string(cols));
  }
  const Vector& mv = nodes_[m.index].value;
  Vector out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = mv[i * cols + j];
  const NodeId id = push(std::move(out), tracked(m));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [m, rows, cols, j, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      Vector& gm = t.grad_buf(m);
      for (std::size_t i = 0; i < rows; ++i) gm[i * cols + j] += gy[i];
    };
  }
  return id;
}

NodeId Tape::concat(std::span<const NodeId> parts) {
  if (parts.empty()) throw std::invalid_argument("tape: concat of zero parts");
  std::size_t total = 0;
  bool tr = false;
  for (const NodeId p : parts) {
    check(p);
    total += nodes_[p.index].value.size();
    tr = tr || tracked(p);
  }
  Vector out;
  out.reserve(total);
  for (const NodeId p : parts) {
    const Vector& v = nodes_[p.index].value;
    out.insert(out.end(), v.begin(), v.end());
  }
  const NodeId id = push(std::move(out), tr);
  if (tr) {
    std::vector<NodeId> ps(parts.begin(), parts.end());
    nodes_[id.index].back = [ps = std::move(ps), id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      std::size_t off = 0;
      for (const NodeId p : ps) {
        const std::size_t len = t.nodes_[p.index].value.size();
        if (t.tracked(p)) {
          Vector& gp = t.grad_buf(p);
          for (std::size_t i = 0; i < len; ++i) gp[i] += gy[off + i];
        }
        off += len;
      }
    };
  }
  return id;
}

NodeId Tape::linear(NodeId w, std::size_t rows, std::size_t cols, NodeId x) {
  check_len(w, rows * cols, "linear: matrix");
  check_len(x, cols, "linear: input");
  const Vector& wv = nodes_[w.index].value;
  const Vector& xv = nodes_[x.index].value;
  Vector out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = wv.data() + i * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * xv[j];
    out[i] = acc;
  }
  const NodeId id = push(std::move(out), tracked(w) || tracked(x));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [w, x, rows, cols, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      const Vector& wv = t.nodes_[w.index].value;
      const Vector& xv = t.nodes_[x.index].value;
      if (t.tracked(w)) {
        Vector& gw = t.grad_buf(w);
        for (std::size_t i = 0; i < rows; ++i) {
          double* gr = gw.data() + i * cols;
          const double g = gy[i];
          for (std::size_t j = 0; j < cols; ++j) gr[j] += g * xv[j];
        }
      }
      if (t.tracked(x)) {
        Vector& gx = t.grad_buf(x);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* wr = wv.data() + i * cols;
          const double g = gy[i];
          for (std::size_t j = 0; j < cols; ++j) gx[j] += wr[j] * g;
        }
      }
    };
  }
  return id;
}

NodeId Tape::affine(NodeId w, std::size_t rows, std::size_t cols, NodeId x, NodeId b) {
  check_len(b, rows, "affine: bias");
  const NodeId wx = linear(w, rows, cols, x);
  return add(wx, b);
}

NodeId Tape::gate(NodeId w, NodeId u, NodeId b, NodeId x, NodeId h, std::size_t rows,
                  std::size_t x_len, std::size_t h_len) {
  check_len(w, rows * x_len, "gate: W");
  check_len(u, rows * h_len, "gate: U");
  check_len(b, rows, "gate: bias");
  check_len(x, x_len, "gate: x");
  check_len(h, h_len, "gate: h");
  const Vector& wv = nodes_[w.index].value;
  const Vector& uv = nodes_[u.index].value;
  const Vector& bv = nodes_[b.index].value;
  const Vector& xv = nodes_[x.index].value;
  const Vector& hv = nodes_[h.index].value;
  Vector out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = wv.data() + i * x_len;
    const double* ur = uv.data() + i * h_len;
    double acc = 0.0;
    for (std::size_t j = 0; j < x_len; ++j) acc += wr[j] * xv[j];
    for (std::size_t j = 0; j < h_len; ++j) acc += ur[j] * hv[j];
    out[i] = acc + bv[i];
  }
  const bool tr =
      tracked(w) || tracked(u) || tracked(b) || tracked(x) || tracked(h);
  const NodeId id = push(std::move(out), tr);
  if (tr) {
    nodes_[id.index].back = [w, u, b, x, h, rows, x_len, h_len, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      const Vector& wv = t.nodes_[w.index].value;
      const Vector& uv = t.nodes_[u.index].value;
      const Vector& xv = t.nodes_[x.index].value;
      const Vector& hv = t.nodes_[h.index].value;
      if (t.tracked(w)) {
        Vector& gw = t.grad_buf(w);
        for (std::size_t i = 0; i < rows; ++i) {
          double* gr = gw.data() + i * x_len;
          const double g = gy[i];
          for (std::size_t j = 0; j < x_len; ++j) gr[j] += g * xv[j];
        }
      }
      if (t.tracked(u)) {
        Vector& gu = t.grad_buf(u);
        for (std::size_t i = 0; i < rows; ++i) {
          double* gr = gu.data() + i * h_len;
          const double g = gy[i];
          for (std::size_t j = 0; j < h_len; ++j) gr[j] += g * hv[j];
        }
      }
      if (t.tracked(b)) {
        Vector& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < rows; ++i) gb[i] += gy[i];
      }
      if (t.tracked(x)) {
        Vector& gx = t.grad_buf(x);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* wr = wv.data() + i * x_len;
          const double g = gy[i];
          for (std::size_t j = 0; j < x_len; ++j) gx[j] += wr[j] * g;
        }
      }
      if (t.tracked(h)) {
        Vector& gh = t.grad_buf(h);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* ur = uv.data() + i * h_len;
          const double g = gy[i];
          for (std::size_t j = 0; j < h_len; ++j) gh[j] += ur[j] * g;
        }
      }
    };
  }
  return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
  check(a);
  check_len(b, nodes_[a.index].value.size(), "add: rhs");
  const Vector& av = nodes_[a.index].value;
  const Vector& bv = nodes_[b.index].value;
  Vector out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  const NodeId id = push(std::move(out), tracked(a) || tracked(b));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [a, b, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      if (t.tracked(a)) {
        Vector& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (t.tracked(b)) {
        Vector& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
      }
    };
  }
  return id;
}

NodeId Tape::hadamard(NodeId a, NodeId b) {
  check(a);
  check_len(b, nodes_[a.index].value.size(), "hadamard: rhs");
  const Vector& av = nodes_[a.index].value;
  const Vector& bv = nodes_[b.index].value;
  Vector out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const NodeId id = push(std::move(out), tracked(a) || tracked(b));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [a, b, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      const Vector& av = t.nodes_[a.index].value;
      const Vector& bv = t.nodes_[b.index].value;
      if (t.tracked(a)) {
        Vector& ga = t.grad_buf(a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += bv[i] * gy[i];
      }
      if (t.tracked(b)) {
        Vector& gb = t.grad_buf(b);
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += av[i] * gy[i];
      }
    };
  }
  return id;
}

NodeId Tape::sigmoid(NodeId a) {
  check(a);
  const Vector& av = nodes_[a.index].value;
  Vector out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = polyglot::sigmoid(av[i]);
  const NodeId id = push(std::move(out), tracked(a));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [a, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      const Vector& y = t.nodes_[id.index].value;
      Vector& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += y[i] * (1.0 - y[i]) * gy[i];
    };
  }
  return id;
}

NodeId Tape::tanh(NodeId a) {
  check(a);
  const Vector& av = nodes_[a.index].value;
  Vector out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::tanh(av[i]);
  const NodeId id = push(std::move(out), tracked(a));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [a, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      const Vector& y = t.nodes_[id.index].value;
      Vector& ga = t.grad_buf(a);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += (1.0 - y[i] * y[i]) * gy[i];
    };
  }
  return id;
}

NodeId Tape::outer(NodeId u, NodeId v) {
  check(u);
  check(v);
  const Vector& uv = nodes_[u.index].value;
  const Vector& vv = nodes_[v.index].value;
  if (uv.empty() || vv.empty()) throw std::invalid_argument("tape: outer of empty vector");
  const std::size_t a = uv.size();
  const std::size_t b = vv.size();
  Vector out(a * b);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) out[i * b + j] = uv[i] * vv[j];
  }
  const NodeId id = push(std::move(out), tracked(u) || tracked(v));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [u, v, a, b, id](Tape& t) {
      const Vector& gy = t.nodes_[id.index].grad;
      const Vector& uv = t.nodes_[u.index].value;
      const Vector& vv = t.nodes_[v.index].value;
      if (t.tracked(u)) {
        Vector& gu = t.grad_buf(u);
        for (std::size_t i = 0; i < a; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < b; ++j) acc += gy[i * b + j] * vv[j];
          gu[i] += acc;
        }
      }
      if (t.tracked(v)) {
        Vector& gv = t.grad_buf(v);
        for (std::size_t i = 0; i < a; ++i) {
          const double ui = uv[i];
          for (std::size_t j = 0; j < b; ++j) gv[j] += gy[i * b + j] * ui;
        }
      }
    };
  }
  return id;
}

NodeId Tape::sum(NodeId a) {
  check(a);
  const Vector& av = nodes_[a.index].value;
  double acc = 0.0;
  for (const double v : av) acc += v;
  const NodeId id = push(Vector{acc}, tracked(a));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [a, id](Tape& t) {
      const double g = t.nodes_[id.index].grad[0];
      Vector& ga = t.grad_buf(a);
      for (double& v : ga) v += g;
    };
  }
  return id;
}

NodeId Tape::mean(std::span<const NodeId> scalars) {
  if (scalars.empty()) throw std::invalid_argument("tape: mean of zero terms");
  bool tr = false;
  double acc = 0.0;
  for (const NodeId s : scalars) {
    check_len(s, 1, "mean: term");
    acc += nodes_[s.index].value[0];
    tr = tr || tracked(s);
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  const NodeId id = push(Vector{acc * inv}, tr);
  if (tr) {
    std::vector<NodeId> terms(scalars.begin(), scalars.end());
    nodes_[id.index].back = [terms = std::move(terms), inv, id](Tape& t) {
      const double g = t.nodes_[id.index].grad[0] * inv;
      for (const NodeId s : terms) {
        if (t.tracked(s)) t.grad_buf(s)[0] += g;
      }
    };
  }
  return id;
}

NodeId Tape::cross_entropy(NodeId logits, std::size_t target) {
  check(logits);
  const Vector& z = nodes_[logits.index].value;
  if (z.empty()) throw std::invalid_argument("tape: cross_entropy on empty logits");
  if (target >= z.size()) {
    throw std::out_of_range("tape: cross_entropy target " + std::to_string(target) +
                            " out of range " + std::to_string(z.size()));
  }
  const double lse = log_sum_exp(z);
  const NodeId id = push(Vector{lse - z[target]}, tracked(logits));
  if (nodes_[id.index].tracked) {
    nodes_[id.index].back = [logits, target, lse, id](Tape& t) {
      const double g = t.nodes_[id.index].grad[0];
      const Vector& z = t.nodes_[logits.index].value;
      Vector& gz = t.grad_buf(logits);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double p = std::exp(z[i] - lse);
        gz[i] += (p - (i == target ? 1.0 : 0.0)) * g;
      }
    };
  }
  return id;
}

void Tape::backward(NodeId loss) {
  check(loss);
  if (ran_backward_) {
    throw std::logic_error("tape: backward already ran on this tape");
  }
  if (nodes_[loss.index].value.size() != 1) {
    throw std::invalid_argument("tape: backward requires a scalar loss, node has length " +
                                std::to_string(nodes_[loss.index].value.size()));
  }
  ran_backward_ = true;
  grad_buf(loss)[0] = 1.0;
  for (std::uint32_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.back || n.grad.empty()) continue;  // leaf, or the loss does not reach it
    n.back(*this);
  }
}

}  // namespace polyglot
