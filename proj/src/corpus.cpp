#include "polyglot/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "polyglot/rng.hpp"

namespace polyglot {

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries) n += e.phones.size();
  return n;
}

std::vector<std::string> Corpus::languages() const {
  std::set<std::string> seen;
  for (const Entry& e : entries) seen.insert(e.language);
  return {seen.begin(), seen.end()};
}

namespace {

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line,
                              const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Corpus load_dictionary(const std::filesystem::path& path, const std::string& language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open dictionary file " + path.string());
  }
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      parse_error(path, lineno, "expected `word<TAB>phone phone ...`");
    }
    const std::string word = line.substr(0, tab);
    if (word.empty()) parse_error(path, lineno, "empty word field");
    std::vector<std::string> phones = split_tokens(line.substr(tab + 1));
    if (phones.empty()) parse_error(path, lineno, "empty phone field");
    for (const std::string& p : phones) {
      if (p == kBos || p == kEos || p == kUnk) {
        parse_error(path, lineno, "phone '" + p + "' collides with a control symbol");
      }
    }
    Entry e;
    e.language = language;
    e.word = word;
    e.phones.reserve(phones.size() + 2);
    e.phones.push_back(kBos);
    e.phones.insert(e.phones.end(), phones.begin(), phones.end());
    e.phones.push_back(kEos);
    corpus.entries.push_back(std::move(e));
  }
  if (corpus.empty()) {
    throw std::runtime_error("dictionary file " + path.string() + " has no entries");
  }
  return corpus;
}

void save_dictionary(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write dictionary file " + path.string());
  }
  for (const Entry& e : corpus.entries) {
    out << e.word << '\t';
    for (std::size_t i = 1; i + 1 < e.phones.size(); ++i) {
      if (i > 1) out << ' ';
      out << e.phones[i];
    }
    out << '\n';
  }
}

Corpus merge(std::span<const Corpus> parts) {
  Corpus out;
  for (const Corpus& c : parts) {
    out.entries.insert(out.entries.end(), c.entries.begin(), c.entries.end());
  }
  return out;
}

SplitResult split(const Corpus& corpus, double dev_fraction, double test_fraction,
                  std::uint64_t seed) {
  const bool valid = dev_fraction >= 0.0 && dev_fraction < 1.0 && test_fraction >= 0.0 &&
                     test_fraction < 1.0 && dev_fraction + test_fraction < 1.0;
  if (!valid) {  // also rejects NaN
    throw std::invalid_argument("split: fractions must lie in [0,1) and sum below 1");
  }
  if (corpus.size() < 3) {
    throw std::invalid_argument("split: corpus has " + std::to_string(corpus.size()) +
                                " entries, need at least 3");
  }
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const auto amount = [&](double f) {
    // round toward dev/test, with a guard against representation error on
    // exact products such as 100 * 0.15
    return static_cast<std::size_t>(
        std::ceil(f * static_cast<double>(corpus.size()) - 1e-9));
  };
  const std::size_t n_dev = amount(dev_fraction);
  const std::size_t n_test = amount(test_fraction);

  SplitResult result;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Entry& e = corpus.entries[order[i]];
    if (i < n_dev) {
      result.dev.entries.push_back(e);
    } else if (i < n_dev + n_test) {
      result.test.entries.push_back(e);
    } else {
      result.train.entries.push_back(e);
    }
  }
  return result;
}

std::size_t index_symbol(const Vocab& vocab, const std::string& symbol, UnknownPolicy policy) {
  if (const auto idx = vocab.find(symbol)) return *idx;
  if (policy == UnknownPolicy::kMapToUnk) {
    if (const auto u = vocab.unk()) return *u;
    throw std::runtime_error("unknown phone '" + symbol +
                             "' and the vocabulary has no <unk> symbol");
  }
  throw std::runtime_error("unknown phone '" + symbol + "'");
}

std::vector<std::size_t> index_sequence(const Vocab& vocab, std::span<const std::string> symbols,
                                        UnknownPolicy policy) {
  std::vector<std::size_t> out;
  out.reserve(symbols.size());
  for (const std::string& s : symbols) out.push_back(index_symbol(vocab, s, policy));
  return out;
}

std::size_t Batch::target_count() const {
  std::size_t n = 0;
  for (const auto& mask : target_mask) {
    for (const std::uint8_t m : mask) n += m;
  }
  return n;
}

std::vector<Batch> make_batches(const Corpus& corpus, const Vocab& vocab,
                                std::size_t batch_size, std::size_t context_width,
                                std::uint64_t seed, UnknownPolicy policy) {
  if (batch_size < 1) throw std::invalid_argument("make_batches: batch size must be >= 1");
  if (context_width < 1) throw std::invalid_argument("make_batches: context width must be >= 1");

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    Batch batch;
    batch.context_width = context_width;
    batch.vocab_size = vocab.size();
    for (std::size_t i = start; i < end; ++i) {
      const Entry& e = corpus.entries[order[i]];
      batch.sequences.push_back(index_sequence(vocab, e.phones, policy));
      batch.languages.push_back(vocab.language_index(e.language));
      batch.max_len = std::max(batch.max_len, e.phones.size());
    }
    for (auto& seq : batch.sequences) {
      std::vector<std::uint8_t> mask(batch.max_len, 0);
      for (std::size_t t = 1; t < seq.size(); ++t) mask[t] = 1;
      seq.resize(batch.max_len, vocab.bos());
      batch.target_mask.push_back(std::move(mask));
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<std::size_t> context_window(std::span<const std::size_t> sequence, std::size_t t,
                                        std::size_t k, std::size_t bos_index) {
  if (t == 0 || t > sequence.size()) {
    throw std::out_of_range("context_window: position " + std::to_string(t) +
                            " has no context in a sequence of length " +
                            std::to_string(sequence.size()));
  }
  std::vector<std::size_t> window(k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(k) +
                             static_cast<std::ptrdiff_t>(c);
    window[c] = p >= 0 ? sequence[static_cast<std::size_t>(p)] : bos_index;
  }
  return window;
}

Vocab build_vocab(std::span<const Corpus> corpora, bool with_unk) {
  if (corpora.empty()) throw std::invalid_argument("build_vocab: no corpora");
  std::set<std::string> phones;
  std::set<std::string> languages;
  for (const Corpus& c : corpora) {
    for (const Entry& e : c.entries) {
      languages.insert(e.language);
      for (std::size_t i = 1; i + 1 < e.phones.size(); ++i) phones.insert(e.phones[i]);
    }
  }
  return Vocab({phones.begin(), phones.end()}, {languages.begin(), languages.end()}, with_unk);
}

}  // namespace polyglot
