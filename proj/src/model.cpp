#include "polyglot/model.hpp"

#include <cmath>
#include <stdexcept>

#include "polyglot/corpus.hpp"
#include "polyglot/rng.hpp"

namespace polyglot {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kLang: return "lang";
    case Variant::kTypology: return "typology";
  }
  throw std::logic_error("unreachable variant");
}

std::string to_string(CellKind c) {
  return c == CellKind::kLstm ? "lstm" : "rnn";
}

Variant variant_from_string(const std::string& s) {
  if (s == "baseline") return Variant::kBaseline;
  if (s == "lang") return Variant::kLang;
  if (s == "typology") return Variant::kTypology;
  throw std::invalid_argument("unknown variant '" + s + "' (baseline|lang|typology)");
}

CellKind cell_from_string(const std::string& s) {
  if (s == "lstm") return CellKind::kLstm;
  if (s == "rnn") return CellKind::kRnn;
  throw std::invalid_argument("unknown cell '" + s + "' (lstm|rnn)");
}

namespace {

void fill_uniform(std::span<double> values, Rng& rng, std::size_t fan_in) {
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : values) v = rng.uniform(-s, s);
}

GateParams make_gate(std::size_t h, std::size_t m, Rng& rng, double bias) {
  GateParams g;
  g.w = Matrix(h, m);
  fill_uniform(g.w.flat(), rng, m);
  g.u = Matrix(h, h);
  fill_uniform(g.u.flat(), rng, h);
  g.b = Vector(h, bias);
  return g;
}

}  // namespace

PolyglotModel PolyglotModel::create(const ModelConfig& config, const Vocab& vocab,
                                    const std::optional<TypologyTable>& typology) {
  if (config.embedding_dim == 0 || config.context_width == 0 || config.hidden_size == 0 ||
      config.language_dim == 0) {
    throw std::invalid_argument("model: all dimensions must be positive");
  }
  if ((config.variant == Variant::kTypology) != typology.has_value()) {
    throw std::invalid_argument("model: a typology table is required for the typology "
                                "variant and must be absent otherwise");
  }
  if (vocab.size() == 0) throw std::invalid_argument("model: empty vocabulary");

  PolyglotModel m;
  m.config_ = config;
  m.vocab_ = vocab;

  const std::size_t d = config.embedding_dim;
  const std::size_t k = config.context_width;
  const std::size_t hidden = config.hidden_size;
  const std::size_t n_langs = vocab.languages().size();

  if (typology) {
    for (const std::string& lang : vocab.languages()) {
      if (!typology->has(lang)) {
        throw std::invalid_argument("model: typology table has no row for language '" + lang +
                                    "'");
      }
    }
    m.typology_ = typology->restricted_to(vocab.languages());
    for (const std::string& lang : vocab.languages()) {
      m.typology_rows_.push_back(m.typology_->features_for(lang));
    }
  }

  Rng rng(config.seed);
  m.x_ = Matrix(d, vocab.size());
  fill_uniform(m.x_.flat(), rng, d);
  if (config.variant != Variant::kBaseline) {
    m.x_lang_ = Matrix(d, n_langs);
    fill_uniform(m.x_lang_.flat(), rng, d);
  }
  m.w_cx_ = Matrix(hidden, k * d);
  fill_uniform(m.w_cx_.flat(), rng, k * d);
  m.b_c_ = Vector(hidden, 0.0);
  if (config.variant != Variant::kBaseline) {
    m.w_clang_ = Matrix(hidden, d);
    fill_uniform(m.w_clang_.flat(), rng, d);
  }
  if (config.cell == CellKind::kLstm) {
    m.lstm_.input = make_gate(hidden, hidden, rng, 0.0);
    m.lstm_.forget = make_gate(hidden, hidden, rng, 1.0);
    m.lstm_.candidate = make_gate(hidden, hidden, rng, 0.0);
    m.lstm_.output = make_gate(hidden, hidden, rng, 0.0);
  } else {
    m.rnn_.w_hx = Matrix(hidden, hidden);
    fill_uniform(m.rnn_.w_hx.flat(), rng, hidden);
    m.rnn_.w_hh = Matrix(hidden, hidden);
    fill_uniform(m.rnn_.w_hh.flat(), rng, hidden);
    m.rnn_.b_h = Vector(hidden, 0.0);
  }
  if (config.variant == Variant::kTypology) {
    const std::size_t f = m.typology_->feature_count();
    m.w_l_ = Matrix(config.language_dim, f);
    fill_uniform(m.w_l_.flat(), rng, f);
    m.b_l_ = Vector(config.language_dim, 0.0);
  }
  m.w_out_ = Matrix(vocab.size(), m.output_width(), 0.0);
  m.b_out_ = Vector(vocab.size(), 0.0);
  return m;
}

const TypologyTable& PolyglotModel::typology() const {
  if (!typology_) throw std::logic_error("model: no typology bound (variant is not typology)");
  return *typology_;
}

std::size_t PolyglotModel::output_width() const {
  return config_.variant == Variant::kTypology ? config_.hidden_size * config_.language_dim
                                               : config_.hidden_size;
}

void PolyglotModel::check_language(std::size_t language) const {
  if (language >= vocab_.languages().size()) {
    throw std::out_of_range("model: language index " + std::to_string(language) +
                            " out of range " + std::to_string(vocab_.languages().size()));
  }
}

PolyglotModel::ContextEmbedding PolyglotModel::embed_context(
    std::span<const std::size_t> context, std::size_t language) const {
  if (context.size() != config_.context_width) {
    throw std::invalid_argument("model: context has " + std::to_string(context.size()) +
                                " symbols, expected " + std::to_string(config_.context_width));
  }
  ContextEmbedding out;
  const std::size_t d = config_.embedding_dim;
  out.x_t.resize(d * context.size());
  for (std::size_t c = 0; c < context.size(); ++c) {
    const std::size_t idx = context[c];
    if (idx >= vocab_.size()) {
      throw std::out_of_range("model: symbol index " + std::to_string(idx) + " out of range " +
                              std::to_string(vocab_.size()));
    }
    for (std::size_t i = 0; i < d; ++i) out.x_t[c * d + i] = x_(i, idx);
  }
  if (config_.variant != Variant::kBaseline) {
    check_language(language);
    out.x_lang.resize(d);
    for (std::size_t i = 0; i < d; ++i) out.x_lang[i] = x_lang_(i, language);
  }
  return out;
}

Vector PolyglotModel::local_context(const Vector& x_t, const Vector& x_lang) const {
  if (config_.variant == Variant::kBaseline) {
    return affine(w_cx_, x_t, b_c_);
  }
  return affine2(w_cx_, x_t, w_clang_, x_lang, b_c_);
}

Vector PolyglotModel::language_projection(const Vector& t_l) const {
  if (config_.variant != Variant::kTypology) {
    throw std::logic_error("model: language_projection requires the typology variant");
  }
  return tanh_vec(affine(w_l_, t_l, b_l_));
}

Vector PolyglotModel::language_projection_for(std::size_t language) const {
  check_language(language);
  return language_projection(typology_rows_[language]);
}

Vector PolyglotModel::output_distribution(const Vector& g_t, const Vector* f_l) const {
  if ((config_.variant == Variant::kTypology) != (f_l != nullptr)) {
    throw std::invalid_argument("model: f_l must be given exactly for the typology variant");
  }
  if (config_.variant == Variant::kTypology) {
    const Matrix g = outer(g_t, *f_l);
    Vector flat(g.flat().begin(), g.flat().end());
    return softmax(affine(w_out_, flat, b_out_));
  }
  return softmax(affine(w_out_, g_t, b_out_));
}

std::vector<Vector> PolyglotModel::forward_logits(std::span<const std::size_t> sequence,
                                                  std::size_t language) const {
  if (sequence.empty() || sequence.front() != vocab_.bos()) {
    throw std::invalid_argument("model: sequence must be wrapped (start with <s>)");
  }
  for (const std::size_t idx : sequence) {
    if (idx >= vocab_.size()) {
      throw std::out_of_range("model: symbol index " + std::to_string(idx) + " out of range " +
                              std::to_string(vocab_.size()));
    }
  }
  if (config_.variant != Variant::kBaseline) check_language(language);

  const std::size_t k = config_.context_width;
  const std::size_t hidden = config_.hidden_size;

  Vector x_lang;
  Vector f_l;
  if (config_.variant != Variant::kBaseline) {
    x_lang.resize(config_.embedding_dim);
    for (std::size_t i = 0; i < x_lang.size(); ++i) x_lang[i] = x_lang_(i, language);
  }
  if (config_.variant == Variant::kTypology) f_l = language_projection_for(language);

  LstmState state{Vector(hidden, 0.0), Vector(hidden, 0.0)};
  Vector h = Vector(hidden, 0.0);

  std::vector<Vector> logits;
  logits.reserve(sequence.size() - 1);
  for (std::size_t t = 1; t < sequence.size(); ++t) {
    const std::vector<std::size_t> window = context_window(sequence, t, k, vocab_.bos());
    const ContextEmbedding emb = embed_context(window, language);
    const Vector c_t = local_context(emb.x_t, emb.x_lang);
    const Vector* g_t;
    if (config_.cell == CellKind::kLstm) {
      state = lstm_step(lstm_, c_t, state);
      g_t = &state.h;
    } else {
      h = rnn_step(rnn_, c_t, h);
      g_t = &h;
    }
    if (config_.variant == Variant::kTypology) {
      const Matrix g = outer(*g_t, f_l);
      Vector flat(g.flat().begin(), g.flat().end());
      logits.push_back(affine(w_out_, flat, b_out_));
    } else {
      logits.push_back(affine(w_out_, *g_t, b_out_));
    }
  }
  return logits;
}

std::vector<Vector> PolyglotModel::forward_sequence(std::span<const std::size_t> sequence,
                                                    std::size_t language) const {
  std::vector<Vector> out = forward_logits(sequence, language);
  for (Vector& z : out) z = softmax(z);
  return out;
}

std::vector<PolyglotModel::ParamRef> PolyglotModel::parameters() {
  std::vector<ParamRef> out;
  const auto mat = [&](const char* name, Matrix& m) {
    out.push_back(ParamRef{name, m.flat(), m.rows(), m.cols()});
  };
  const auto vec = [&](const char* name, Vector& v) {
    out.push_back(ParamRef{name, v, v.size(), 1});
  };
  mat("X", x_);
  if (config_.variant != Variant::kBaseline) mat("X_lang", x_lang_);
  mat("W_cx", w_cx_);
  vec("b_c", b_c_);
  if (config_.variant != Variant::kBaseline) mat("W_clang", w_clang_);
  if (config_.cell == CellKind::kLstm) {
    const auto gate = [&](const char* base, GateParams& g) {
      const std::string s(base);
      out.push_back(ParamRef{s + ".w", g.w.flat(), g.w.rows(), g.w.cols()});
      out.push_back(ParamRef{s + ".u", g.u.flat(), g.u.rows(), g.u.cols()});
      out.push_back(ParamRef{s + ".b", g.b, g.b.size(), 1});
    };
    gate("lstm.input", lstm_.input);
    gate("lstm.forget", lstm_.forget);
    gate("lstm.candidate", lstm_.candidate);
    gate("lstm.output", lstm_.output);
  } else {
    mat("rnn.w_hx", rnn_.w_hx);
    mat("rnn.w_hh", rnn_.w_hh);
    vec("rnn.b_h", rnn_.b_h);
  }
  if (config_.variant == Variant::kTypology) {
    mat("W_l", w_l_);
    vec("b_l", b_l_);
  }
  mat("W_out", w_out_);
  vec("b_out", b_out_);
  return out;
}

PolyglotModel::ParamRef PolyglotModel::parameter(const std::string& name) {
  for (ParamRef& p : parameters()) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("model: no parameter named '" + name + "'");
}

ModelGraph::ModelGraph(Tape& tape, PolyglotModel& model) : tape_(&tape), model_(&model) {
  for (const PolyglotModel::ParamRef& p : model.parameters()) {
    const NodeId node = tape.parameter(p.values);
    bound_.push_back(Bound{p, node});
    by_name_.emplace(p.name, node);
  }
}

NodeId ModelGraph::node_of(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("graph: no parameter '" + name + "'");
  return it->second;
}

NodeId ModelGraph::language_column(std::size_t language) {
  const auto it = lang_cache_.find(language);
  if (it != lang_cache_.end()) return it->second;
  const Matrix& xl = model_->x_lang_;
  const NodeId col = tape_->column(node_of("X_lang"), xl.rows(), xl.cols(), language);
  lang_cache_.emplace(language, col);
  return col;
}

NodeId ModelGraph::projection(std::size_t language) {
  const auto it = proj_cache_.find(language);
  if (it != proj_cache_.end()) return it->second;
  const NodeId t_l = tape_->constant(model_->typology_rows_[language]);
  const Matrix& wl = model_->w_l_;
  const NodeId f =
      tape_->tanh(tape_->affine(node_of("W_l"), wl.rows(), wl.cols(), t_l, node_of("b_l")));
  proj_cache_.emplace(language, f);
  return f;
}

std::vector<NodeId> ModelGraph::sequence_losses(std::span<const std::size_t> sequence,
                                                std::size_t language) {
  return build(sequence, language, true);
}

std::vector<NodeId> ModelGraph::sequence_logits(std::span<const std::size_t> sequence,
                                                std::size_t language) {
  return build(sequence, language, false);
}

std::vector<NodeId> ModelGraph::build(std::span<const std::size_t> sequence,
                                      std::size_t language, bool losses) {
  PolyglotModel& m = *model_;
  Tape& tape = *tape_;
  if (sequence.empty() || sequence.front() != m.vocab_.bos()) {
    throw std::invalid_argument("graph: sequence must be wrapped (start with <s>)");
  }
  const Variant variant = m.config_.variant;
  if (variant != Variant::kBaseline) m.check_language(language);

  const std::size_t d = m.config_.embedding_dim;
  const std::size_t k = m.config_.context_width;
  const std::size_t hidden = m.config_.hidden_size;
  const std::size_t v = m.vocab_.size();

  const NodeId x = node_of("X");
  const NodeId w_cx = node_of("W_cx");
  const NodeId b_c = node_of("b_c");
  const NodeId w_out = node_of("W_out");
  const NodeId b_out = node_of("b_out");

  LstmNodeIds lstm{};
  RnnNodeIds rnn{};
  if (m.config_.cell == CellKind::kLstm) {
    lstm = LstmNodeIds{node_of("lstm.input.w"),     node_of("lstm.input.u"),
                       node_of("lstm.input.b"),     node_of("lstm.forget.w"),
                       node_of("lstm.forget.u"),    node_of("lstm.forget.b"),
                       node_of("lstm.candidate.w"), node_of("lstm.candidate.u"),
                       node_of("lstm.candidate.b"), node_of("lstm.output.w"),
                       node_of("lstm.output.u"),    node_of("lstm.output.b")};
  } else {
    rnn = RnnNodeIds{node_of("rnn.w_hx"), node_of("rnn.w_hh"), node_of("rnn.b_h")};
  }

  NodeId x_lang{};
  NodeId f_l{};
  if (variant != Variant::kBaseline) x_lang = language_column(language);
  if (variant == Variant::kTypology) f_l = projection(language);

  LstmStateNodes state{tape.constant(Vector(hidden, 0.0)), tape.constant(Vector(hidden, 0.0))};
  NodeId h = state.h;

  // column nodes are shared within the sequence
  std::map<std::size_t, NodeId> columns;
  const auto column_node = [&](std::size_t idx) {
    const auto it = columns.find(idx);
    if (it != columns.end()) return it->second;
    const NodeId c = tape.column(x, d, v, idx);
    columns.emplace(idx, c);
    return c;
  };

  std::vector<NodeId> out;
  out.reserve(sequence.size() - 1);
  std::vector<NodeId> window(k);
  for (std::size_t t = 1; t < sequence.size(); ++t) {
    const std::vector<std::size_t> ctx = context_window(sequence, t, k, m.vocab_.bos());
    for (std::size_t c = 0; c < k; ++c) window[c] = column_node(ctx[c]);
    const NodeId x_t = tape.concat(window);
    NodeId c_t;
    if (variant == Variant::kBaseline) {
      c_t = tape.affine(w_cx, hidden, k * d, x_t, b_c);
    } else {
      c_t = tape.gate(w_cx, node_of("W_clang"), b_c, x_t, x_lang, hidden, k * d, d);
    }
    NodeId g_t;
    if (m.config_.cell == CellKind::kLstm) {
      state = lstm_step(tape, lstm, hidden, hidden, c_t, state);
      g_t = state.h;
    } else {
      h = rnn_step(tape, rnn, hidden, hidden, c_t, h);
      g_t = h;
    }
    NodeId logits;
    if (variant == Variant::kTypology) {
      const NodeId gated = tape.outer(g_t, f_l);
      logits = tape.affine(w_out, v, hidden * m.config_.language_dim, gated, b_out);
    } else {
      logits = tape.affine(w_out, v, hidden, g_t, b_out);
    }
    out.push_back(losses ? tape.cross_entropy(logits, sequence[t]) : logits);
  }
  return out;
}

}  // namespace polyglot
