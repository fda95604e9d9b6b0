#include "polyglot/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "polyglot/rng.hpp"
#include "polyglot/tape.hpp"

namespace polyglot {

nlohmann::json TrainReport::to_json() const {
  nlohmann::json out;
  out["epochs"] = nlohmann::json::array();
  for (const EpochRecord& r : epochs) {
    out["epochs"].push_back({{"epoch", r.epoch},
                             {"train_loss", r.train_loss},
                             {"dev_perplexity", r.dev_perplexity}});
  }
  out["best_epoch"] = best_epoch;
  return out;
}

namespace {

void check_batch(const PolyglotModel& model, const Batch& batch) {
  if (batch.vocab_size != model.vocab().size()) {
    throw std::invalid_argument("batch/model vocab mismatch: batch indexed over " +
                                std::to_string(batch.vocab_size) + " symbols, model has " +
                                std::to_string(model.vocab().size()));
  }
  if (batch.context_width != model.config().context_width) {
    throw std::invalid_argument("batch/model context mismatch: batch built with k=" +
                                std::to_string(batch.context_width) + ", model expects k=" +
                                std::to_string(model.config().context_width));
  }
}

std::size_t true_length(const Batch& batch, std::size_t s) {
  std::size_t targets = 0;
  for (const std::uint8_t m : batch.target_mask[s]) targets += m;
  return targets + 1;  // leading <s> is never a target
}

}  // namespace

std::vector<double> position_nll(const PolyglotModel& model,
                                 std::span<const std::size_t> sequence, std::size_t language) {
  const std::vector<Vector> logits = model.forward_logits(sequence, language);
  std::vector<double> out;
  out.reserve(logits.size());
  for (std::size_t t = 0; t < logits.size(); ++t) {
    out.push_back(log_sum_exp(logits[t]) - logits[t][sequence[t + 1]]);
  }
  return out;
}

double sequence_loss(const PolyglotModel& model, const Batch& batch) {
  check_batch(model, batch);
  double total = 0.0;
  std::size_t targets = 0;
  for (std::size_t s = 0; s < batch.sequences.size(); ++s) {
    const std::size_t len = true_length(batch, s);
    const std::span<const std::size_t> seq(batch.sequences[s].data(), len);
    for (const double nll : position_nll(model, seq, batch.languages[s])) {
      total += nll;
      ++targets;
    }
  }
  if (targets == 0) throw std::invalid_argument("sequence_loss: batch has no targets");
  return total * (1.0 / static_cast<double>(targets));
}

CorpusNll corpus_nll(const PolyglotModel& model, const Corpus& corpus, UnknownPolicy policy) {
  CorpusNll acc;
  for (const Entry& e : corpus.entries) {
    const std::vector<std::size_t> seq = index_sequence(model.vocab(), e.phones, policy);
    const std::size_t lang = model.vocab().language_index(e.language);
    for (const double nll : position_nll(model, seq, lang)) {
      acc.total += nll;
      acc.targets += 1;
    }
  }
  return acc;
}

double perplexity(const PolyglotModel& model, const Corpus& corpus, UnknownPolicy policy) {
  const CorpusNll acc = corpus_nll(model, corpus, policy);
  if (acc.targets == 0) throw std::invalid_argument("perplexity: empty corpus");
  return std::exp(acc.total / static_cast<double>(acc.targets));
}

TrainReport train(PolyglotModel& model, const Corpus& train_corpus, const Corpus& dev_corpus,
                  const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (config.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  TrainReport report;
  if (config.epochs == 0) return report;
  if (train_corpus.empty()) throw std::invalid_argument("train: empty training corpus");
  if (dev_corpus.empty()) throw std::invalid_argument("train: empty dev corpus");

  std::vector<PolyglotModel::ParamRef> params = model.parameters();
  std::vector<AdamState> states;
  states.reserve(params.size());
  for (const PolyglotModel::ParamRef& p : params) {
    states.emplace_back(p.name, p.values.size(), config.adam);
  }

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<Batch> batches =
        make_batches(train_corpus, model.vocab(), config.batch_size,
                     model.config().context_width, mix_seed(config.seed, epoch),
                     config.unknown_policy);
    double total_nll = 0.0;
    std::size_t total_targets = 0;
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      const Batch& batch = batches[bi];
      Tape tape;
      ModelGraph graph(tape, model);
      std::vector<NodeId> losses;
      for (std::size_t s = 0; s < batch.sequences.size(); ++s) {
        const std::size_t len = true_length(batch, s);
        const std::span<const std::size_t> seq(batch.sequences[s].data(), len);
        const std::vector<NodeId> ls = graph.sequence_losses(seq, batch.languages[s]);
        losses.insert(losses.end(), ls.begin(), ls.end());
      }
      const NodeId loss = tape.mean(losses);
      const double value = tape.value(loss)[0];
      if (!std::isfinite(value)) {
        throw std::runtime_error("train: non-finite loss in batch " + std::to_string(bi) +
                                 " of epoch " + std::to_string(epoch));
      }
      tape.backward(loss);

      double scale = 1.0;
      if (config.grad_clip > 0.0) {
        double sq = 0.0;
        for (const ModelGraph::Bound& b : graph.bound_params()) {
          for (const double g : tape.grad(b.node)) sq += g * g;
        }
        const double norm = std::sqrt(sq);
        if (norm > config.grad_clip) scale = config.grad_clip / norm;
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        const ModelGraph::Bound& b = graph.bound_params()[i];
        if (scale == 1.0) {
          adam_step(b.param.values, tape.grad(b.node), states[i]);
        } else {
          Vector scaled = tape.grad(b.node);
          for (double& g : scaled) g *= scale;
          adam_step(b.param.values, scaled, states[i]);
        }
      }
      total_nll += value * static_cast<double>(losses.size());
      total_targets += losses.size();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total_nll / static_cast<double>(total_targets);
    rec.dev_perplexity = perplexity(model, dev_corpus, config.unknown_policy);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  report.best_epoch = 1;
  for (std::size_t i = 1; i < report.epochs.size(); ++i) {
    if (report.epochs[i].dev_perplexity <
        report.epochs[report.best_epoch - 1].dev_perplexity) {
      report.best_epoch = i + 1;
    }
  }
  return report;
}

}  // namespace polyglot
