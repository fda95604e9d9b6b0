#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polyglot/linalg.hpp"
#include "polyglot/model.hpp"

namespace polyglot {

// Learned phone vectors, one row per symbol. Text form is
// `symbol<TAB>v1 v2 ... vd` with 17 significant digits.
struct EmbeddingMatrix {
  std::vector<std::string> symbols;
  std::vector<Vector> rows;
  std::size_t dim = 0;

  bool has(const std::string& symbol) const;
  const Vector& row(const std::string& symbol) const;  // throws naming the phone
  std::size_t index_of(const std::string& symbol) const;
};

// Rows of X in vocab order; language/control symbols only with include_special.
EmbeddingMatrix export_vectors(const PolyglotModel& model, bool include_special = false);
void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);

// Phones x named binary phonological properties. Same text form as the
// embeddings with 0/1 cells; an optional leading `# name name ...` comment
// line carries the property names.
struct LinguisticMatrix {
  std::vector<std::string> symbols;
  std::vector<std::string> properties;
  std::vector<Vector> rows;  // binary
};
LinguisticMatrix load_linguistic_matrix(const std::filesystem::path& path);

// 1 - cos(u, v), in [0, 2]; exactly 0 for element-identical vectors. Rejects
// zero vectors (undefined direction).
double cosine_distance(const Vector& u, const Vector& v);

// Pairwise cosine distances between phone vectors; zero diagonal, symmetric.
class SubstitutionTable {
 public:
  SubstitutionTable() = default;
  SubstitutionTable(std::vector<std::string> source, std::vector<std::string> target,
                    Matrix costs);

  double cost(const std::string& from, const std::string& to) const;  // throws naming the phone
  const std::vector<std::string>& source_phones() const { return source_; }
  const std::vector<std::string>& target_phones() const { return target_; }
  const Matrix& costs() const { return costs_; }

 private:
  std::vector<std::string> source_, target_;
  Matrix costs_;
};

SubstitutionTable substitution_table(const EmbeddingMatrix& emb,
                                     std::span<const std::string> source,
                                     std::span<const std::string> target);

// n closest phones by cosine distance, ascending, query excluded; ties broken
// lexicographically.
std::vector<std::pair<std::string, double>> nearest_phones(const EmbeddingMatrix& emb,
                                                           const std::string& phone,
                                                           std::size_t n);

// n phones with the highest coefficient in one embedding dimension,
// descending; ties broken lexicographically.
std::vector<std::string> top_phones(const EmbeddingMatrix& emb, std::size_t dimension,
                                    std::size_t n);

struct PropertyAlignment {
  std::string property;
  std::size_t dimension = 0;
  double correlation = 0.0;
  bool constant = false;  // zero-variance property column; correlation fixed at 0
};

struct AlignmentResult {
  std::vector<PropertyAlignment> properties;
  double score = 0.0;  // sum of max correlations

  nlohmann::json to_json() const;
};

// Pearson correlation of every linguistic column with every embedding column
// over the shared phones (centered over that intersection); each property
// aligns to the dimension maximizing signed correlation. Many-to-one allowed.
AlignmentResult qvec_align(const EmbeddingMatrix& emb, const LinguisticMatrix& ling);

enum class EditOp { kSubstitute, kDelete, kInsert };

struct EditStep {
  EditOp op;
  std::size_t source_pos = 0;     // position in the source, where applicable
  std::size_t candidate_pos = 0;  // position in the candidate, where applicable
  std::string from, to;
};

struct AdaptResult {
  double cost = 0.0;
  std::vector<EditStep> trace;  // exact matches are implicit and not recorded
};

// Minimum-cost alignment of source onto candidate: substitutions cost
// table(a, b), insertions/deletions a uniform positive cost. One optimal trace
// is returned, ties resolved substitution > deletion > insertion, leftmost
// first.
AdaptResult adapt_score(std::span<const std::string> source,
                        std::span<const std::string> candidate,
                        const SubstitutionTable& table, double indel_cost);

}  // namespace polyglot
