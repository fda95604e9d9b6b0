#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "polyglot/vocab.hpp"

namespace polyglot {

// One dictionary entry. The phone sequence is stored wrapped with <s> ... </s>;
// the orthographic word is kept for reporting only.
struct Entry {
  std::string language;
  std::string word;
  std::vector<std::string> phones;  // wrapped

  bool operator==(const Entry&) const = default;
};

struct Corpus {
  std::vector<Entry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  // wrapped tokens, i.e. phones plus the two controls per entry
  std::size_t token_count() const;
  // distinct languages, sorted
  std::vector<std::string> languages() const;

  bool operator==(const Corpus&) const = default;
};

// Parses `word<TAB>phone phone ...`; UTF-8, LF lines, '#'-prefixed comment
// lines and blank lines are skipped. Malformed lines are rejected with their
// line number; an entry-free file is rejected.
Corpus load_dictionary(const std::filesystem::path& path, const std::string& language);

// Inverse of load_dictionary (controls stripped). Entries keep file order.
void save_dictionary(const Corpus& corpus, const std::filesystem::path& path);

Corpus merge(std::span<const Corpus> parts);

struct SplitResult {
  Corpus train, dev, test;
};

// Deterministic shuffle by seed, then an exact partition; dev and test sizes
// round upward when fractions do not divide evenly.
SplitResult split(const Corpus& corpus, double dev_fraction, double test_fraction,
                  std::uint64_t seed);

enum class UnknownPolicy { kReject, kMapToUnk };

std::size_t index_symbol(const Vocab& vocab, const std::string& symbol, UnknownPolicy policy);
std::vector<std::size_t> index_sequence(const Vocab& vocab, std::span<const std::string> symbols,
                                        UnknownPolicy policy);

// A shuffled group of indexed sequences padded to the batch maximum length.
// target_mask[s][t] marks scored positions: 1 <= t < len(s). The context for
// the target at t is the k preceding symbols, left-padded with <s>.
struct Batch {
  std::vector<std::vector<std::size_t>> sequences;   // padded with <s>
  std::vector<std::vector<std::uint8_t>> target_mask;
  std::vector<std::size_t> languages;                // index into vocab.languages()
  std::size_t context_width = 0;
  std::size_t vocab_size = 0;
  std::size_t max_len = 0;

  std::size_t target_count() const;
};

std::vector<Batch> make_batches(const Corpus& corpus, const Vocab& vocab,
                                std::size_t batch_size, std::size_t context_width,
                                std::uint64_t seed,
                                UnknownPolicy policy = UnknownPolicy::kReject);

// The k symbols preceding position t, oldest first, left-padded with <s>.
std::vector<std::size_t> context_window(std::span<const std::size_t> sequence, std::size_t t,
                                        std::size_t k, std::size_t bos_index);

// Vocabulary over the union of phones and languages of the given corpora.
Vocab build_vocab(std::span<const Corpus> corpora, bool with_unk = false);

}  // namespace polyglot
