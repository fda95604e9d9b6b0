#pragma once

#include <cstddef>
#include <utility>

#include "polyglot/linalg.hpp"
#include "polyglot/tape.hpp"

namespace polyglot {

// One gate block: input-to-hidden weights, hidden-to-hidden weights, bias.
struct GateParams {
  Matrix w;  // h x m
  Matrix u;  // h x h
  Vector b;  // h
};

// Peephole-free LSTM cell: input, forget, candidate and output blocks of
// identical shape.
struct LstmCellParams {
  GateParams input, forget, candidate, output;

  std::size_t hidden() const { return input.b.size(); }
  std::size_t input_size() const { return input.w.cols(); }
  void validate() const;
};

struct LstmState {
  Vector h, c;
};

struct RnnCellParams {
  Matrix w_hx;  // h x m
  Matrix w_hh;  // h x h
  Vector b_h;   // h

  std::size_t hidden() const { return b_h.size(); }
  std::size_t input_size() const { return w_hx.cols(); }
  void validate() const;
};

// Gates i, f, o via logistic sigmoid of their affine forms, candidate via
// tanh; c = f .* c_prev + i .* cand, h = o .* tanh(c). Entries of h lie in
// (-1, 1).
LstmState lstm_step(const LstmCellParams& p, const Vector& x, const LstmState& prev);

// h = tanh(W_hx x + W_hh h_prev + b_h)
Vector rnn_step(const RnnCellParams& p, const Vector& x, const Vector& h_prev);

// Tape counterparts over parameter nodes registered by the caller.
struct LstmNodeIds {
  NodeId wi, ui, bi;
  NodeId wf, uf, bf;
  NodeId wg, ug, bg;
  NodeId wo, uo, bo;
};

struct LstmStateNodes {
  NodeId h, c;
};

LstmStateNodes lstm_step(Tape& tape, const LstmNodeIds& p, std::size_t hidden,
                         std::size_t input, NodeId x, const LstmStateNodes& prev);

struct RnnNodeIds {
  NodeId w_hx, w_hh, b_h;
};

NodeId rnn_step(Tape& tape, const RnnNodeIds& p, std::size_t hidden, std::size_t input,
                NodeId x, NodeId h_prev);

}  // namespace polyglot
