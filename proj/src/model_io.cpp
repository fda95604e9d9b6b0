#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "polyglot/model.hpp"

namespace polyglot {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4] = {0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

[[noreturn]] void bad_file(const std::filesystem::path& path, const std::string& section,
                           const std::string& what) {
  throw std::runtime_error("model file " + path.string() + ": " + section + ": " + what);
}

}  // namespace

void PolyglotModel::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["config"] = {{"embedding_dim", config_.embedding_dim},
                      {"context_width", config_.context_width},
                      {"hidden_size", config_.hidden_size},
                      {"language_dim", config_.language_dim},
                      {"variant", to_string(config_.variant)},
                      {"cell", to_string(config_.cell)},
                      {"seed", config_.seed}};
  header["vocab"] = {{"phones", vocab_.phones()},
                     {"languages", vocab_.languages()},
                     {"with_unk", vocab_.has_unk()}};
  if (typology_) {
    nlohmann::json rows = nlohmann::json::object();
    for (const auto& [lang, row] : typology_->rows()) {
      std::vector<int> bits;
      bits.reserve(row.size());
      for (const double v : row) bits.push_back(v != 0.0 ? 1 : 0);
      rows[lang] = bits;
    }
    header["typology"] = {{"features", typology_->feature_names()}, {"rows", rows}};
  } else {
    header["typology"] = nullptr;
  }
  nlohmann::json params = nlohmann::json::array();
  // parameters() is non-const by contract; serialization only reads
  auto& self = const_cast<PolyglotModel&>(*this);
  for (const ParamRef& p : self.parameters()) {
    params.push_back({{"name", p.name}, {"rows", p.rows}, {"cols", p.cols}});
  }
  header["params"] = params;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_u64(out, header_text.size());
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const ParamRef& p : self.parameters()) {
    write_u64(out, p.values.size());
    for (const double v : p.values) write_f64(out, v);
  }
  if (!out) throw std::runtime_error("write failed for model file " + path.string());
}

PolyglotModel PolyglotModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    bad_file(path, "magic", "not a polyglot model file");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    bad_file(path, "version",
             "unsupported version " + std::to_string(version) + ", expected " +
                 std::to_string(kVersion));
  }
  const std::uint64_t header_len = read_u64(in);
  if (!in || header_len > (std::uint64_t{1} << 30)) {
    bad_file(path, "header", "implausible length " + std::to_string(header_len));
  }
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) bad_file(path, "header", "truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    bad_file(path, "header", e.what());
  }

  ModelConfig config;
  Vocab vocab;
  std::optional<TypologyTable> typology;
  try {
    const auto& c = header.at("config");
    config.embedding_dim = c.at("embedding_dim").get<std::size_t>();
    config.context_width = c.at("context_width").get<std::size_t>();
    config.hidden_size = c.at("hidden_size").get<std::size_t>();
    config.language_dim = c.at("language_dim").get<std::size_t>();
    config.variant = variant_from_string(c.at("variant").get<std::string>());
    config.cell = cell_from_string(c.at("cell").get<std::string>());
    config.seed = c.at("seed").get<std::uint64_t>();
  } catch (const std::exception& e) {
    bad_file(path, "config", e.what());
  }
  try {
    const auto& v = header.at("vocab");
    vocab = Vocab(v.at("phones").get<std::vector<std::string>>(),
                  v.at("languages").get<std::vector<std::string>>(),
                  v.at("with_unk").get<bool>());
  } catch (const std::exception& e) {
    bad_file(path, "vocab", e.what());
  }
  try {
    const auto& t = header.at("typology");
    if (!t.is_null()) {
      std::map<std::string, Vector> rows;
      for (const auto& [lang, bits] : t.at("rows").items()) {
        Vector row;
        for (const int b : bits.get<std::vector<int>>()) row.push_back(b ? 1.0 : 0.0);
        rows.emplace(lang, std::move(row));
      }
      typology = TypologyTable(t.at("features").get<std::vector<std::string>>(),
                               std::move(rows));
    }
  } catch (const std::exception& e) {
    bad_file(path, "typology", e.what());
  }

  PolyglotModel model = create(config, vocab, typology);

  std::vector<ParamRef> params = model.parameters();
  const auto& meta = header.at("params");
  if (!meta.is_array() || meta.size() != params.size()) {
    bad_file(path, "params", "expected " + std::to_string(params.size()) + " blocks");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamRef& p = params[i];
    const auto& m = meta.at(i);
    if (m.at("name").get<std::string>() != p.name || m.at("rows").get<std::size_t>() != p.rows ||
        m.at("cols").get<std::size_t>() != p.cols) {
      bad_file(path, "parameter block '" + p.name + "'",
               "header lists " + m.dump() + ", expected " + std::to_string(p.rows) + "x" +
                   std::to_string(p.cols));
    }
    const std::uint64_t count = read_u64(in);
    if (count != p.values.size()) {
      bad_file(path, "parameter block '" + p.name + "'",
               "has " + std::to_string(count) + " values, expected " +
                   std::to_string(p.values.size()));
    }
    for (double& v : p.values) v = read_f64(in);
    if (!in) bad_file(path, "parameter block '" + p.name + "'", "truncated");
  }
  return model;
}

}  // namespace polyglot
