#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "polyglot/adam.hpp"
#include "polyglot/corpus.hpp"
#include "polyglot/model.hpp"

namespace polyglot {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 100;
  AdamConfig adam;
  double grad_clip = 0.0;  // global-norm threshold; 0 disables clipping
  std::uint64_t seed = 0;
  UnknownPolicy unknown_policy = UnknownPolicy::kReject;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_perplexity = 0.0;
  double wall_seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // lowest dev perplexity, 1-based; 0 when empty

  // Deterministic export: wall_seconds stays off the file so identical runs
  // produce identical reports.
  nlohmann::json to_json() const;
};

// Mean negative log-probability (natural log) of the gold symbols over the
// batch's unmasked positions, computed via log-softmax.
double sequence_loss(const PolyglotModel& model, const Batch& batch);

// NLL per target position of one wrapped sequence.
std::vector<double> position_nll(const PolyglotModel& model,
                                 std::span<const std::size_t> sequence, std::size_t language);

struct CorpusNll {
  double total = 0.0;
  std::size_t targets = 0;
};
CorpusNll corpus_nll(const PolyglotModel& model, const Corpus& corpus,
                     UnknownPolicy policy = UnknownPolicy::kReject);

// exp(mean per-target NLL) over all targets of the corpus.
double perplexity(const PolyglotModel& model, const Corpus& corpus,
                  UnknownPolicy policy = UnknownPolicy::kReject);

// Adam over per-epoch reshuffled minibatches; dev perplexity recorded each
// epoch; returns the report and leaves the final-epoch model in place (no
// early stopping). Deterministic given the seed.
TrainReport train(PolyglotModel& model, const Corpus& train_corpus, const Corpus& dev_corpus,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace polyglot
