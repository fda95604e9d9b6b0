#include "polyglot/cells.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace polyglot {

namespace {

void check_gate(const GateParams& g, std::size_t h, std::size_t m, const char* name) {
  if (g.w.rows() != h || g.w.cols() != m || g.u.rows() != h || g.u.cols() != h ||
      g.b.size() != h) {
    throw std::invalid_argument(std::string("lstm: ") + name + " block is " +
                                std::to_string(g.w.rows()) + "x" + std::to_string(g.w.cols()) +
                                "/" + std::to_string(g.u.rows()) + "x" +
                                std::to_string(g.u.cols()) + "/" + std::to_string(g.b.size()) +
                                ", expected " + std::to_string(h) + "x" + std::to_string(m) +
                                "/" + std::to_string(h) + "x" + std::to_string(h) + "/" +
                                std::to_string(h));
  }
}

Vector preact(const GateParams& g, const Vector& x, const Vector& h) {
  return affine2(g.w, x, g.u, h, g.b);
}

}  // namespace

void LstmCellParams::validate() const {
  const std::size_t h = hidden();
  const std::size_t m = input_size();
  check_gate(input, h, m, "input");
  check_gate(forget, h, m, "forget");
  check_gate(candidate, h, m, "candidate");
  check_gate(output, h, m, "output");
}

void RnnCellParams::validate() const {
  const std::size_t h = hidden();
  const std::size_t m = input_size();
  if (w_hx.rows() != h || w_hx.cols() != m || w_hh.rows() != h || w_hh.cols() != h ||
      b_h.size() != h) {
    throw std::invalid_argument("rnn: blocks are " + std::to_string(w_hx.rows()) + "x" +
                                std::to_string(w_hx.cols()) + "/" + std::to_string(w_hh.rows()) +
                                "x" + std::to_string(w_hh.cols()) + "/" +
                                std::to_string(b_h.size()) + ", expected consistent h x m");
  }
}

LstmState lstm_step(const LstmCellParams& p, const Vector& x, const LstmState& prev) {
  p.validate();
  if (x.size() != p.input_size() || prev.h.size() != p.hidden() || prev.c.size() != p.hidden()) {
    throw std::invalid_argument("lstm_step: x has length " + std::to_string(x.size()) +
                                ", state has lengths " + std::to_string(prev.h.size()) + "/" +
                                std::to_string(prev.c.size()) + ", cell is " +
                                std::to_string(p.hidden()) + "x" + std::to_string(p.input_size()));
  }
  const Vector i = sigmoid_vec(preact(p.input, x, prev.h));
  const Vector f = sigmoid_vec(preact(p.forget, x, prev.h));
  const Vector g = tanh_vec(preact(p.candidate, x, prev.h));
  const Vector o = sigmoid_vec(preact(p.output, x, prev.h));
  LstmState next;
  next.c = add(hadamard(f, prev.c), hadamard(i, g));
  next.h = hadamard(o, tanh_vec(next.c));
  return next;
}

Vector rnn_step(const RnnCellParams& p, const Vector& x, const Vector& h_prev) {
  p.validate();
  if (x.size() != p.input_size() || h_prev.size() != p.hidden()) {
    throw std::invalid_argument("rnn_step: x has length " + std::to_string(x.size()) +
                                ", h has length " + std::to_string(h_prev.size()) + ", cell is " +
                                std::to_string(p.hidden()) + "x" + std::to_string(p.input_size()));
  }
  GateParams g{p.w_hx, p.w_hh, p.b_h};
  return tanh_vec(preact(g, x, h_prev));
}

LstmStateNodes lstm_step(Tape& tape, const LstmNodeIds& p, std::size_t hidden,
                         std::size_t input, NodeId x, const LstmStateNodes& prev) {
  const NodeId i = tape.sigmoid(tape.gate(p.wi, p.ui, p.bi, x, prev.h, hidden, input, hidden));
  const NodeId f = tape.sigmoid(tape.gate(p.wf, p.uf, p.bf, x, prev.h, hidden, input, hidden));
  const NodeId g = tape.tanh(tape.gate(p.wg, p.ug, p.bg, x, prev.h, hidden, input, hidden));
  const NodeId o = tape.sigmoid(tape.gate(p.wo, p.uo, p.bo, x, prev.h, hidden, input, hidden));
  const NodeId c = tape.add(tape.hadamard(f, prev.c), tape.hadamard(i, g));
  const NodeId h = tape.hadamard(o, tape.tanh(c));
  return LstmStateNodes{h, c};
}

NodeId rnn_step(Tape& tape, const RnnNodeIds& p, std::size_t hidden, std::size_t input,
                NodeId x, NodeId h_prev) {
  return tape.tanh(tape.gate(p.w_hx, p.w_hh, p.b_h, x, h_prev, hidden, input, hidden));
}

}  // namespace polyglot
