#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyglot/cells.hpp"
#include "polyglot/linalg.hpp"
#include "polyglot/tape.hpp"
#include "polyglot/typology.hpp"
#include "polyglot/vocab.hpp"

namespace polyglot {

// baseline: phone contexts only; lang: adds the learned language vector to the
// local-context layer; typology: additionally gates the recurrent state with a
// projected typology vector.
enum class Variant { kBaseline, kLang, kTypology };
enum class CellKind { kLstm, kRnn };

std::string to_string(Variant v);
std::string to_string(CellKind c);
Variant variant_from_string(const std::string& s);
CellKind cell_from_string(const std::string& s);

struct ModelConfig {
  std::size_t embedding_dim = 100;  // d
  std::size_t context_width = 3;    // k; contexts are the k most recent phones
  std::size_t hidden_size = 100;    // local-context layer and recurrent layer
  std::size_t language_dim = 20;    // L
  Variant variant = Variant::kBaseline;
  CellKind cell = CellKind::kLstm;
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

// All trainable state of one architecture variant, plus vocab, config and the
// typology binding of the typology variant. Forward passes are const; training
// mutates parameters through parameters().
class PolyglotModel {
 public:
  PolyglotModel() = default;

  // Weight matrices initialized uniform in [-s, s] with s = 1/sqrt(fan-in),
  // biases zero except the LSTM forget-gate bias (1.0); the output layer is
  // zeroed so an untrained model emits the uniform distribution.
  // Deterministic in config.seed.
  static PolyglotModel create(const ModelConfig& config, const Vocab& vocab,
                              const std::optional<TypologyTable>& typology = std::nullopt);

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  bool has_typology() const { return typology_.has_value(); }
  const TypologyTable& typology() const;

  struct ContextEmbedding {
    Vector x_t;     // k context-phone columns of X, oldest first
    Vector x_lang;  // column of X_lang; empty for the baseline variant
  };
  ContextEmbedding embed_context(std::span<const std::size_t> context,
                                 std::size_t language) const;

  // c_t = W_cx x_t + W_clang x_lang + b_c (language term absent for baseline).
  // Linear; no nonlinearity is applied.
  Vector local_context(const Vector& x_t, const Vector& x_lang) const;

  // f_l = tanh(W_l t_l + b_l); typology variant only.
  Vector language_projection(const Vector& t_l) const;
  // f_l for one of the model's languages, from the bound typology rows.
  Vector language_projection_for(std::size_t language) const;

  // softmax(W_out g + b_out), or softmax(W_out vec(g (x) f^T) + b_out) for the
  // typology variant (pass f_l then).
  Vector output_distribution(const Vector& g_t, const Vector* f_l = nullptr) const;

  // Per-target-position logits for a wrapped sequence; recurrent state starts
  // at zero. Position t is predicted from the k symbols before it.
  std::vector<Vector> forward_logits(std::span<const std::size_t> sequence,
                                     std::size_t language) const;
  // softmax of forward_logits; each entry sums to 1 within 1e-9.
  std::vector<Vector> forward_sequence(std::span<const std::size_t> sequence,
                                       std::size_t language) const;

  struct ParamRef {
    std::string name;
    std::span<double> values;
    std::size_t rows, cols;  // biases are n x 1
  };
  // Fixed order: X, X_lang, W_cx, b_c, W_clang, cell blocks, W_l, b_l,
  // W_out, b_out (absent blocks skipped per variant/cell).
  std::vector<ParamRef> parameters();
  ParamRef parameter(const std::string& name);

  const Matrix& phone_table() const { return x_; }
  const Matrix& language_table() const { return x_lang_; }
  const Matrix& output_weights() const { return w_out_; }

  // Little-endian binary container: magic, version, JSON header (config,
  // vocab, typology), raw parameter blocks. Round trips bit-exactly.
  void save(const std::filesystem::path& path) const;
  static PolyglotModel load(const std::filesystem::path& path);

 private:
  friend class ModelGraph;

  std::size_t output_width() const;
  void check_language(std::size_t language) const;

  ModelConfig config_;
  Vocab vocab_;
  std::optional<TypologyTable> typology_;
  std::vector<Vector> typology_rows_;  // aligned with vocab_.languages()

  Matrix x_;       // d x |V|
  Matrix x_lang_;  // d x #languages
  Matrix w_cx_;    // hidden x (k d)
  Vector b_c_;
  Matrix w_clang_;  // hidden x d
  LstmCellParams lstm_;
  RnnCellParams rnn_;
  Matrix w_l_;  // L x F
  Vector b_l_;
  Matrix w_out_;  // |V| x hidden, or |V| x (hidden L) for typology
  Vector b_out_;
};

// Differentiable twin of the model's forward pass on a Tape. Parameters are
// registered once per graph; the language vector and f_l are cached per
// language. One graph per tape, one tape per minibatch.
class ModelGraph {
 public:
  ModelGraph(Tape& tape, PolyglotModel& model);

  // One cross-entropy node per target position of a wrapped, unpadded
  // sequence.
  std::vector<NodeId> sequence_losses(std::span<const std::size_t> sequence,
                                      std::size_t language);
  // Logits nodes instead; used to pin the graph against the pure forward.
  std::vector<NodeId> sequence_logits(std::span<const std::size_t> sequence,
                                      std::size_t language);

  struct Bound {
    PolyglotModel::ParamRef param;
    NodeId node;
  };
  const std::vector<Bound>& bound_params() const { return bound_; }

 private:
  std::vector<NodeId> build(std::span<const std::size_t> sequence, std::size_t language,
                            bool losses);
  NodeId language_column(std::size_t language);
  NodeId projection(std::size_t language);
  NodeId node_of(const std::string& name) const;

  Tape* tape_;
  PolyglotModel* model_;
  std::vector<Bound> bound_;
  std::map<std::string, NodeId> by_name_;
  std::map<std::size_t, NodeId> lang_cache_;
  std::map<std::size_t, NodeId> proj_cache_;
};

}  // namespace polyglot
