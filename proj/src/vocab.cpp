#include "polyglot/vocab.hpp"

#include <algorithm>
#include <stdexcept>

namespace polyglot {

std::string language_symbol(const std::string& language) { return "<lang:" + language + ">"; }

Vocab::Vocab(std::vector<std::string> phones, std::vector<std::string> languages, bool with_unk)
    : with_unk_(with_unk) {
  std::sort(phones.begin(), phones.end());
  phones.erase(std::unique(phones.begin(), phones.end()), phones.end());
  std::sort(languages.begin(), languages.end());
  languages.erase(std::unique(languages.begin(), languages.end()), languages.end());
  phones_ = std::move(phones);
  languages_ = std::move(languages);

  symbols_ = phones_;
  symbols_.push_back(kBos);
  symbols_.push_back(kEos);
  for (const std::string& lang : languages_) symbols_.push_back(language_symbol(lang));
  if (with_unk_) symbols_.push_back(kUnk);

  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const auto [it, inserted] = index_.emplace(symbols_[i], i);
    if (!inserted) {
      throw std::invalid_argument("vocab: symbol '" + symbols_[i] +
                                  "' collides with a reserved symbol");
    }
  }
}

const std::string& Vocab::symbol(std::size_t index) const {
  if (index >= symbols_.size()) {
    throw std::out_of_range("vocab: index " + std::to_string(index) + " out of range " +
                            std::to_string(symbols_.size()));
  }
  return symbols_[index];
}

std::optional<std::size_t> Vocab::find(const std::string& symbol) const {
  const auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocab::index_of(const std::string& symbol) const {
  const auto it = index_.find(symbol);
  if (it == index_.end()) {
    throw std::out_of_range("vocab: unknown symbol '" + symbol + "'");
  }
  return it->second;
}

std::optional<std::size_t> Vocab::unk() const {
  if (!with_unk_) return std::nullopt;
  return index_.at(kUnk);
}

std::size_t Vocab::language_index(const std::string& language) const {
  const auto it = std::lower_bound(languages_.begin(), languages_.end(), language);
  if (it == languages_.end() || *it != language) {
    std::string known;
    for (const std::string& l : languages_) {
      if (!known.empty()) known += ", ";
      known += l;
    }
    throw std::out_of_range("vocab: unknown language '" + language + "' (known: " + known + ")");
  }
  return static_cast<std::size_t>(it - languages_.begin());
}

std::size_t Vocab::language_symbol_index(std::size_t language_index) const {
  if (language_index >= languages_.size()) {
    throw std::out_of_range("vocab: language index " + std::to_string(language_index) +
                            " out of range " + std::to_string(languages_.size()));
  }
  return phones_.size() + 2 + language_index;
}

}  // namespace polyglot
