#include "polyglot/typology.hpp"

#include <fstream>
#include <stdexcept>

namespace polyglot {

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == '\t' || c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TypologyTable::TypologyTable(std::vector<std::string> feature_names,
                             std::map<std::string, Vector> rows)
    : feature_names_(std::move(feature_names)), rows_(std::move(rows)) {
  for (const auto& [lang, row] : rows_) {
    if (row.size() != feature_names_.size()) {
      throw std::invalid_argument("typology: row for '" + lang + "' has " +
                                  std::to_string(row.size()) + " values, expected " +
                                  std::to_string(feature_names_.size()));
    }
    for (const double v : row) {
      if (v != 0.0 && v != 1.0) {
        throw std::invalid_argument("typology: row for '" + lang + "' has non-binary value");
      }
    }
  }
}

TypologyTable TypologyTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open typology file " + path.string());
  }
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> features;
  std::map<std::string, Vector> rows;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = split_cells(line);
    if (!saw_header) {
      if (!cells.empty() && (cells[0] == "language" || cells[0] == "Language")) {
        cells.erase(cells.begin());
      }
      if (cells.empty()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": header has no feature names");
      }
      features = std::move(cells);
      saw_header = true;
      continue;
    }
    if (cells.size() != features.size() + 1) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": row has " +
                               std::to_string(cells.size() - 1) + " values, expected " +
                               std::to_string(features.size()));
    }
    const std::string lang = cells[0];
    if (rows.count(lang)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": duplicate language '" + lang + "'");
    }
    Vector row;
    row.reserve(features.size());
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (cells[i] == "0") {
        row.push_back(0.0);
      } else if (cells[i] == "1") {
        row.push_back(1.0);
      } else {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": non-binary value '" + cells[i] + "'");
      }
    }
    rows.emplace(lang, std::move(row));
  }
  if (!saw_header) {
    throw std::runtime_error("typology file " + path.string() + " has no header row");
  }
  return TypologyTable(std::move(features), std::move(rows));
}

const Vector& TypologyTable::features_for(const std::string& language) const {
  const auto it = rows_.find(language);
  if (it == rows_.end()) {
    std::string known;
    for (const auto& [lang, row] : rows_) {
      if (!known.empty()) known += ", ";
      known += lang;
    }
    throw std::out_of_range("typology: unknown language '" + language + "' (known: " + known +
                            ")");
  }
  return it->second;
}

std::vector<std::string> TypologyTable::languages() const {
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& [lang, row] : rows_) out.push_back(lang);
  return out;
}

TypologyTable TypologyTable::restricted_to(const std::vector<std::string>& languages) const {
  std::map<std::string, Vector> rows;
  for (const std::string& lang : languages) rows.emplace(lang, features_for(lang));
  return TypologyTable(feature_names_, std::move(rows));
}

}  // namespace polyglot
