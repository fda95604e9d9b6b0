#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polyglot {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kUnk = "<unk>";

// Symbol reserved in the shared inventory for a language, e.g. "<lang:it>".
std::string language_symbol(const std::string& language);

// Shared multilingual symbol inventory: the union of per-language phone sets,
// control symbols, one symbol per language, and optionally <unk>. Index layout
// is deterministic: sorted phones, then <s>, </s>, then language symbols in
// sorted language order, then <unk> when enabled.
class Vocab {
 public:
  Vocab() = default;
  // phones and languages may arrive in any order and with duplicates; both are
  // de-duplicated and sorted, so construction is input-order independent.
  Vocab(std::vector<std::string> phones, std::vector<std::string> languages, bool with_unk);

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(std::size_t index) const;
  std::optional<std::size_t> find(const std::string& symbol) const;
  std::size_t index_of(const std::string& symbol) const;  // throws if absent

  std::size_t bos() const { return phones_.size(); }
  std::size_t eos() const { return phones_.size() + 1; }
  std::optional<std::size_t> unk() const;

  const std::vector<std::string>& phones() const { return phones_; }
  const std::vector<std::string>& languages() const { return languages_; }
  bool has_unk() const { return with_unk_; }

  // position of a language in languages(); throws listing known languages
  std::size_t language_index(const std::string& language) const;
  std::size_t language_symbol_index(std::size_t language_index) const;

  bool is_phone(std::size_t index) const { return index < phones_.size(); }

  bool operator==(const Vocab&) const = default;

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> phones_;
  std::vector<std::string> languages_;
  bool with_unk_ = false;
};

}  // namespace polyglot
