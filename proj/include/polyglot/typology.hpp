#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "polyglot/linalg.hpp"

namespace polyglot {

// Per-language binary typological feature vectors, served as 0.0/1.0 reals.
// Read-only after construction.
class TypologyTable {
 public:
  TypologyTable() = default;
  // Validates binary entries and a uniform row width.
  TypologyTable(std::vector<std::string> feature_names, std::map<std::string, Vector> rows);

  // Header row of feature names (optionally led by a "language" column label),
  // then one row per language: id, then F tab- or comma-separated 0/1 cells.
  static TypologyTable load(const std::filesystem::path& path);

  std::size_t feature_count() const { return feature_names_.size(); }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  bool has(const std::string& language) const { return rows_.count(language) > 0; }
  // The stored row; throws for unknown languages, listing the known ones.
  const Vector& features_for(const std::string& language) const;

  std::vector<std::string> languages() const;  // sorted
  const std::map<std::string, Vector>& rows() const { return rows_; }

  // Rows for exactly the given languages; missing languages are an error.
  TypologyTable restricted_to(const std::vector<std::string>& languages) const;

  bool operator==(const TypologyTable&) const = default;

 private:
  std::vector<std::string> feature_names_;
  std::map<std::string, Vector> rows_;
};

}  // namespace polyglot
