#include "polyglot/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace polyglot {

bool EmbeddingMatrix::has(const std::string& symbol) const {
  return std::find(symbols.begin(), symbols.end(), symbol) != symbols.end();
}

std::size_t EmbeddingMatrix::index_of(const std::string& symbol) const {
  const auto it = std::find(symbols.begin(), symbols.end(), symbol);
  if (it == symbols.end()) {
    throw std::out_of_range("embeddings: no row for phone '" + symbol + "'");
  }
  return static_cast<std::size_t>(it - symbols.begin());
}

const Vector& EmbeddingMatrix::row(const std::string& symbol) const {
  return rows[index_of(symbol)];
}

EmbeddingMatrix export_vectors(const PolyglotModel& model, bool include_special) {
  const Vocab& vocab = model.vocab();
  const Matrix& x = model.phone_table();
  EmbeddingMatrix out;
  out.dim = model.config().embedding_dim;
  for (std::size_t idx = 0; idx < vocab.size(); ++idx) {
    if (!include_special && !vocab.is_phone(idx)) continue;
    Vector row(out.dim);
    for (std::size_t i = 0; i < out.dim; ++i) row[i] = x(i, idx);
    out.symbols.push_back(vocab.symbol(idx));
    out.rows.push_back(std::move(row));
  }
  return out;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write embedding file " + path.string());
  for (std::size_t r = 0; r < emb.symbols.size(); ++r) {
    out << emb.symbols[r] << '\t';
    for (std::size_t i = 0; i < emb.rows[r].size(); ++i) {
      if (i > 0) out << ' ';
      out << format_real(emb.rows[r][i]);
    }
    out << '\n';
  }
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
  EmbeddingMatrix out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected `symbol<TAB>values`");
    }
    Vector row;
    std::istringstream vals(line.substr(tab + 1));
    double v;
    while (vals >> v) row.push_back(v);
    if (row.empty()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": no values");
    }
    if (out.dim == 0) out.dim = row.size();
    if (row.size() != out.dim) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": row has " +
                               std::to_string(row.size()) + " values, expected " +
                               std::to_string(out.dim));
    }
    out.symbols.push_back(line.substr(0, tab));
    out.rows.push_back(std::move(row));
  }
  if (out.symbols.empty()) {
    throw std::runtime_error("embedding file " + path.string() + " has no rows");
  }
  return out;
}

LinguisticMatrix load_linguistic_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open linguistic matrix " + path.string());
  LinguisticMatrix out;
  std::string line;
  std::size_t lineno = 0;
  bool saw_data = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!saw_data && out.properties.empty()) {
        std::istringstream names(line.substr(1));
        std::string name;
        while (names >> name) out.properties.push_back(name);
      }
      continue;
    }
    saw_data = true;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected `symbol<TAB>values`");
    }
    Vector row;
    std::istringstream vals(line.substr(tab + 1));
    std::string cell;
    while (vals >> cell) {
      if (cell == "0") {
        row.push_back(0.0);
      } else if (cell == "1") {
        row.push_back(1.0);
      } else {
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": non-binary value '" + cell + "'");
      }
    }
    if (row.empty()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": no values");
    }
    if (!out.rows.empty() && row.size() != out.rows.front().size()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": row has " +
                               std::to_string(row.size()) + " values, expected " +
                               std::to_string(out.rows.front().size()));
    }
    out.symbols.push_back(line.substr(0, tab));
    out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) {
    throw std::runtime_error("linguistic matrix " + path.string() + " has no rows");
  }
  if (out.properties.empty()) {
    for (std::size_t i = 0; i < out.rows.front().size(); ++i) {
      out.properties.push_back("p" + std::to_string(i));
    }
  }
  if (out.properties.size() != out.rows.front().size()) {
    throw std::runtime_error("linguistic matrix " + path.string() + ": header names " +
                             std::to_string(out.properties.size()) + " properties, rows have " +
                             std::to_string(out.rows.front().size()));
  }
  return out;
}

double cosine_distance(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine_distance: lengths " + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()));
  }
  if (u == v) {
    // identical vectors have distance 0 by definition; this also sidesteps
    // sqrt round-off on the diagonal of substitution tables
    bool zero = true;
    for (const double x : u) zero = zero && x == 0.0;
    if (zero) throw std::invalid_argument("cosine_distance: zero vector");
    return 0.0;
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument("cosine_distance: zero vector");
  }
  double cos = dot / (std::sqrt(nu) * std::sqrt(nv));
  cos = std::clamp(cos, -1.0, 1.0);
  return 1.0 - cos;
}

SubstitutionTable::SubstitutionTable(std::vector<std::string> source,
                                     std::vector<std::string> target, Matrix costs)
    : source_(std::move(source)), target_(std::move(target)), costs_(std::move(costs)) {
  if (costs_.rows() != source_.size() || costs_.cols() != target_.size()) {
    throw std::invalid_argument("substitution table: cost matrix is " +
                                std::to_string(costs_.rows()) + "x" +
                                std::to_string(costs_.cols()) + ", expected " +
                                std::to_string(source_.size()) + "x" +
                                std::to_string(target_.size()));
  }
}

double SubstitutionTable::cost(const std::string& from, const std::string& to) const {
  const auto si = std::find(source_.begin(), source_.end(), from);
  if (si == source_.end()) {
    throw std::out_of_range("substitution table: no source phone '" + from + "'");
  }
  const auto ti = std::find(target_.begin(), target_.end(), to);
  if (ti == target_.end()) {
    throw std::out_of_range("substitution table: no target phone '" + to + "'");
  }
  return costs_(static_cast<std::size_t>(si - source_.begin()),
                static_cast<std::size_t>(ti - target_.begin()));
}

SubstitutionTable substitution_table(const EmbeddingMatrix& emb,
                                     std::span<const std::string> source,
                                     std::span<const std::string> target) {
  Matrix costs(source.size(), target.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vector& u = emb.row(source[i]);
    for (std::size_t j = 0; j < target.size(); ++j) {
      costs(i, j) = source[i] == target[j] ? 0.0 : cosine_distance(u, emb.row(target[j]));
    }
  }
  return SubstitutionTable({source.begin(), source.end()}, {target.begin(), target.end()},
                           std::move(costs));
}

std::vector<std::pair<std::string, double>> nearest_phones(const EmbeddingMatrix& emb,
                                                           const std::string& phone,
                                                           std::size_t n) {
  if (n < 1) throw std::invalid_argument("nearest_phones: n must be >= 1");
  const Vector& query = emb.row(phone);
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t r = 0; r < emb.symbols.size(); ++r) {
    if (emb.symbols[r] == phone) continue;
    out.emplace_back(emb.symbols[r], cosine_distance(query, emb.rows[r]));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  if (out.size() > n) out.resize(n);
  return out;
}

std::vector<std::string> top_phones(const EmbeddingMatrix& emb, std::size_t dimension,
                                    std::size_t n) {
  if (dimension >= emb.dim) {
    throw std::out_of_range("top_phones: dimension " + std::to_string(dimension) +
                            " out of range " + std::to_string(emb.dim));
  }
  std::vector<std::size_t> order(emb.symbols.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (emb.rows[a][dimension] != emb.rows[b][dimension]) {
      return emb.rows[a][dimension] > emb.rows[b][dimension];
    }
    return emb.symbols[a] < emb.symbols[b];
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < order.size() && i < n; ++i) out.push_back(emb.symbols[order[i]]);
  return out;
}

nlohmann::json AlignmentResult::to_json() const {
  nlohmann::json out;
  out["properties"] = nlohmann::json::array();
  for (const PropertyAlignment& p : properties) {
    out["properties"].push_back({{"property", p.property},
                                 {"dimension", p.dimension},
                                 {"correlation", p.correlation},
                                 {"constant", p.constant}});
  }
  out["score"] = score;
  return out;
}

namespace {

// Pearson over pre-extracted columns; exactly 1 for element-identical columns,
// 0 when either side has zero variance.
double pearson(const Vector& a, const Vector& b) {
  if (a == b) {
    double mean = 0.0;
    for (const double v : a) mean += v;
    mean /= static_cast<double>(a.size());
    bool constant = true;
    for (const double v : a) constant = constant && v == mean;
    return constant ? 0.0 : 1.0;
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / (std::sqrt(saa) * std::sqrt(sbb)), -1.0, 1.0);
}

bool is_constant(const Vector& a) {
  for (const double v : a) {
    if (v != a.front()) return false;
  }
  return true;
}

}  // namespace

AlignmentResult qvec_align(const EmbeddingMatrix& emb, const LinguisticMatrix& ling) {
  // shared phones in embedding order
  std::map<std::string, std::size_t> ling_index;
  for (std::size_t r = 0; r < ling.symbols.size(); ++r) ling_index.emplace(ling.symbols[r], r);
  std::vector<std::size_t> emb_rows, ling_rows;
  for (std::size_t r = 0; r < emb.symbols.size(); ++r) {
    const auto it = ling_index.find(emb.symbols[r]);
    if (it == ling_index.end()) continue;
    emb_rows.push_back(r);
    ling_rows.push_back(it->second);
  }
  if (emb_rows.size() < 2) {
    throw std::invalid_argument("qvec_align: need at least 2 shared phones, have " +
                                std::to_string(emb_rows.size()));
  }

  const std::size_t shared = emb_rows.size();
  std::vector<Vector> emb_cols(emb.dim, Vector(shared));
  for (std::size_t i = 0; i < shared; ++i) {
    const Vector& row = emb.rows[emb_rows[i]];
    for (std::size_t d = 0; d < emb.dim; ++d) emb_cols[d][i] = row[d];
  }

  AlignmentResult result;
  for (std::size_t p = 0; p < ling.properties.size(); ++p) {
    Vector col(shared);
    for (std::size_t i = 0; i < shared; ++i) col[i] = ling.rows[ling_rows[i]][p];

    PropertyAlignment alignment;
    alignment.property = ling.properties[p];
    if (is_constant(col)) {
      alignment.constant = true;
    } else {
      double best = -std::numeric_limits<double>::infinity();
      std::size_t best_dim = 0;
      for (std::size_t d = 0; d < emb.dim; ++d) {
        const double r = pearson(col, emb_cols[d]);
        if (r > best) {
          best = r;
          best_dim = d;
        }
      }
      alignment.dimension = best_dim;
      alignment.correlation = best;
    }
    result.score += alignment.correlation;
    result.properties.push_back(std::move(alignment));
  }
  return result;
}

namespace {

struct Cell {
  double cost = 0.0;
  int move = 0;  // 0 none, 1 diagonal, 2 delete (down), 3 insert (right)
};

}  // namespace

AdaptResult adapt_score(std::span<const std::string> source,
                        std::span<const std::string> candidate,
                        const SubstitutionTable& table, double indel_cost) {
  if (indel_cost <= 0.0) {
    throw std::invalid_argument("adapt_score: indel cost must be positive");
  }
  const std::size_t n = source.size();
  const std::size_t m = candidate.size();

  // substitution costs up front so missing phones fail before any scoring
  Matrix sub(n == 0 ? 1 : n, m == 0 ? 1 : m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      sub(i, j) = source[i] == candidate[j] ? 0.0 : table.cost(source[i], candidate[j]);
    }
  }

  // dp[i][j] = min cost of aligning source[i..) with candidate[j..); filling
  // from the end lets the trace run left to right with the preference order
  // substitution > deletion > insertion applied at the earliest choice point.
  std::vector<std::vector<Cell>> dp(n + 1, std::vector<Cell>(m + 1));
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      Cell& cell = dp[i][j];
      if (i == n && j == m) {
        cell = {0.0, 0};
        continue;
      }
      cell.cost = std::numeric_limits<double>::infinity();
      if (i < n && j < m) {
        const double c = sub(i, j) + dp[i + 1][j + 1].cost;
        if (c < cell.cost) cell = {c, 1};
      }
      if (i < n) {
        const double c = indel_cost + dp[i + 1][j].cost;
        if (c < cell.cost) cell = {c, 2};
      }
      if (j < m) {
        const double c = indel_cost + dp[i][j + 1].cost;
        if (c < cell.cost) cell = {c, 3};
      }
    }
  }

  AdaptResult result;
  result.cost = dp[0][0].cost;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    switch (dp[i][j].move) {
      case 1:
        if (source[i] != candidate[j]) {
          result.trace.push_back(EditStep{EditOp::kSubstitute, i, j, source[i], candidate[j]});
        }
        ++i;
        ++j;
        break;
      case 2:
        result.trace.push_back(EditStep{EditOp::kDelete, i, j, source[i], ""});
        ++i;
        break;
      case 3:
        result.trace.push_back(EditStep{EditOp::kInsert, i, j, "", candidate[j]});
        ++j;
        break;
      default:
        throw std::logic_error("adapt_score: broken trace");
    }
  }
  return result;
}

}  // namespace polyglot
