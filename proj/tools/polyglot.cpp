// Command-line front end: trains and evaluates the phone-level language
// models, exports phone vectors and runs the embedding analyses.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "polyglot/analysis.hpp"
#include "polyglot/corpus.hpp"
#include "polyglot/model.hpp"
#include "polyglot/rng.hpp"
#include "polyglot/trainer.hpp"
#include "polyglot/typology.hpp"

namespace {

using nlohmann::json;
using namespace polyglot;

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RunManifest {
  std::vector<std::pair<std::string, std::string>> languages;  // id, dictionary path
  std::optional<std::string> typology_path;
  ModelConfig model;
  TrainConfig train;
  double dev_fraction = 0.15;
  double test_fraction = 0.10;
  bool allow_unknown = false;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
};

RunManifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest " + path.string() + ": " + e.what());
  }

  RunManifest m;
  if (!j.contains("languages") || !j["languages"].is_array() || j["languages"].empty()) {
    throw std::runtime_error("manifest " + path.string() +
                             ": 'languages' must be a non-empty array");
  }
  for (const auto& lang : j["languages"]) {
    const std::string id = lang.at("id").get<std::string>();
    const std::string dict = lang.at("dictionary").get<std::string>();
    for (const auto& [seen, ignored] : m.languages) {
      if (seen == id) {
        throw std::runtime_error("manifest " + path.string() + ": duplicate language id '" +
                                 id + "'");
      }
    }
    m.languages.emplace_back(id, dict);
  }
  if (j.contains("typology") && !j["typology"].is_null()) {
    m.typology_path = j["typology"].get<std::string>();
  }
  if (j.contains("variant")) {
    m.model.variant = variant_from_string(j["variant"].get<std::string>());
  }
  if (j.contains("out")) m.out_dir = j["out"].get<std::string>();
  if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();

  if (j.contains("model")) {
    const auto& c = j["model"];
    if (c.contains("embedding_dim")) m.model.embedding_dim = c["embedding_dim"].get<std::size_t>();
    if (c.contains("context")) m.model.context_width = c["context"].get<std::size_t>();
    if (c.contains("hidden")) m.model.hidden_size = c["hidden"].get<std::size_t>();
    if (c.contains("language_dim")) m.model.language_dim = c["language_dim"].get<std::size_t>();
    if (c.contains("cell")) m.model.cell = cell_from_string(c["cell"].get<std::string>());
  }
  if (j.contains("train")) {
    const auto& c = j["train"];
    if (c.contains("epochs")) m.train.epochs = c["epochs"].get<std::size_t>();
    if (c.contains("batch_size")) m.train.batch_size = c["batch_size"].get<std::size_t>();
    if (c.contains("learning_rate")) m.train.adam.learning_rate = c["learning_rate"].get<double>();
    if (c.contains("beta1")) m.train.adam.beta1 = c["beta1"].get<double>();
    if (c.contains("beta2")) m.train.adam.beta2 = c["beta2"].get<double>();
    if (c.contains("epsilon")) m.train.adam.epsilon = c["epsilon"].get<double>();
    if (c.contains("grad_clip")) m.train.grad_clip = c["grad_clip"].get<double>();
    if (c.contains("dev_fraction")) m.dev_fraction = c["dev_fraction"].get<double>();
    if (c.contains("test_fraction")) m.test_fraction = c["test_fraction"].get<double>();
    if (c.contains("allow_unknown")) m.allow_unknown = c["allow_unknown"].get<bool>();
  }
  return m;
}

struct LoadedData {
  std::vector<Corpus> full;  // per language, manifest order
  Corpus train, dev, test;
  Vocab vocab;
  std::optional<TypologyTable> typology;
};

LoadedData load_data(const RunManifest& m) {
  LoadedData data;
  std::vector<Corpus> trains, devs, tests;
  for (std::size_t i = 0; i < m.languages.size(); ++i) {
    const auto& [id, dict] = m.languages[i];
    Corpus c = load_dictionary(dict, id);
    const SplitResult s = split(c, m.dev_fraction, m.test_fraction, mix_seed(m.seed, i));
    trains.push_back(s.train);
    devs.push_back(s.dev);
    tests.push_back(s.test);
    data.full.push_back(std::move(c));
  }
  data.train = merge(trains);
  data.dev = merge(devs);
  data.test = merge(tests);
  data.vocab = build_vocab(data.full, m.allow_unknown);
  if (m.model.variant == Variant::kTypology) {
    if (!m.typology_path) {
      throw std::runtime_error("the typology variant requires a typology file in the manifest");
    }
    data.typology = TypologyTable::load(*m.typology_path);
  }
  return data;
}

EmbeddingMatrix embeddings_from_flags(const std::string& model_path,
                                      const std::string& embeddings_path,
                                      bool include_special) {
  if (!model_path.empty()) {
    return export_vectors(PolyglotModel::load(model_path), include_special);
  }
  if (!embeddings_path.empty()) {
    return load_embeddings(embeddings_path);
  }
  throw std::runtime_error("pass --model or --embeddings");
}

std::vector<std::string> split_phones(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"phone-level polyglot language models"};
  app.require_subcommand(1);

  // ------------------------------------------------------------------ train
  auto* train_cmd = app.add_subcommand("train", "train a model from a manifest");
  std::string manifest_path;
  std::string out_flag;
  std::string variant_flag;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  std::size_t epochs_flag = 0;
  std::size_t batch_flag = 0;
  std::size_t context_flag = 0;
  double lr_flag = 0.0;
  bool allow_unk_flag = false;
  train_cmd->add_option("--manifest", manifest_path, "run manifest (JSON)")->required();
  train_cmd->add_option("--out", out_flag, "output directory (overrides the manifest)");
  train_cmd->add_option("--variant", variant_flag, "baseline|lang|typology");
  train_cmd->add_option("--seed", seed_flag, "run seed")->each([&](const std::string&) {
    seed_given = true;
  });
  train_cmd->add_option("--epochs", epochs_flag, "training epochs");
  train_cmd->add_option("--batch-size", batch_flag, "minibatch size");
  train_cmd->add_option("--context", context_flag, "context width k");
  train_cmd->add_option("--lr", lr_flag, "Adam learning rate");
  train_cmd->add_flag("--allow-unk", allow_unk_flag, "map unseen phones to <unk>");

  // ------------------------------------------------------------------- eval
  auto* eval_cmd = app.add_subcommand("eval", "perplexity of a saved model");
  std::string eval_model, eval_dict, eval_lang, eval_manifest, eval_split;
  bool eval_allow_unk = false;
  eval_cmd->add_option("--model", eval_model, "model file")->required();
  eval_cmd->add_option("--dict", eval_dict, "dictionary file to score");
  eval_cmd->add_option("--lang", eval_lang, "language id of --dict");
  eval_cmd->add_option("--manifest", eval_manifest, "manifest to re-derive a split from");
  eval_cmd->add_option("--split", eval_split, "train|dev|test (with --manifest)");
  eval_cmd->add_flag("--allow-unk", eval_allow_unk, "map unseen phones to <unk>");

  // ----------------------------------------------------------------- export
  auto* export_cmd = app.add_subcommand("export", "write phone vectors as text");
  std::string export_model, export_out;
  bool include_special = false;
  export_cmd->add_option("--model", export_model, "model file")->required();
  export_cmd->add_option("--out", export_out, "output directory")->required();
  export_cmd->add_flag("--include-special", include_special,
                       "keep <s>, </s> and language symbols");

  // ---------------------------------------------------------------- analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "embedding analyses");
  analyze_cmd->require_subcommand(1);
  std::string an_model, an_emb, an_out;

  auto* qvec_cmd = analyze_cmd->add_subcommand("qvec", "align dimensions to properties");
  std::string qvec_ling;
  qvec_cmd->add_option("--model", an_model, "model file");
  qvec_cmd->add_option("--embeddings", an_emb, "embedding text file");
  qvec_cmd->add_option("--linguistic", qvec_ling, "linguistic matrix file")->required();
  qvec_cmd->add_option("--out", an_out, "output directory for alignment.json");

  auto* nearest_cmd = analyze_cmd->add_subcommand("nearest", "closest phones by cosine");
  std::string near_phone;
  std::size_t near_n = 5;
  nearest_cmd->add_option("--model", an_model, "model file");
  nearest_cmd->add_option("--embeddings", an_emb, "embedding text file");
  nearest_cmd->add_option("--phone", near_phone, "query phone")->required();
  nearest_cmd->add_option("-n", near_n, "neighbours to list");

  auto* top_cmd = analyze_cmd->add_subcommand("top", "highest coefficients of a dimension");
  std::size_t top_dim = 0;
  std::size_t top_n = 5;
  top_cmd->add_option("--model", an_model, "model file");
  top_cmd->add_option("--embeddings", an_emb, "embedding text file");
  top_cmd->add_option("--dim", top_dim, "embedding dimension")->required();
  top_cmd->add_option("-n", top_n, "phones to list");

  // ------------------------------------------------------------------- dist
  auto* dist_cmd = app.add_subcommand("dist", "cosine substitution table");
  std::string dist_model, dist_emb, dist_out, dist_source, dist_target;
  dist_cmd->add_option("--model", dist_model, "model file");
  dist_cmd->add_option("--embeddings", dist_emb, "embedding text file");
  dist_cmd->add_option("--source", dist_source, "space-separated source phones")->required();
  dist_cmd->add_option("--target", dist_target,
                       "space-separated target phones (defaults to --source)");
  dist_cmd->add_option("--out", dist_out, "output directory for substitution.tsv");

  // ------------------------------------------------------------------ adapt
  auto* adapt_cmd = app.add_subcommand("adapt", "weighted edit distance between phone strings");
  std::string adapt_model, adapt_emb, adapt_src, adapt_cand;
  double indel = 1.0;
  adapt_cmd->add_option("--model", adapt_model, "model file");
  adapt_cmd->add_option("--embeddings", adapt_emb, "embedding text file");
  adapt_cmd->add_option("--source", adapt_src, "space-separated source phones")->required();
  adapt_cmd->add_option("--candidate", adapt_cand, "space-separated candidate phones")
      ->required();
  adapt_cmd->add_option("--indel", indel, "insertion/deletion cost");

  CLI11_PARSE(app, argc, argv);

  if (train_cmd->parsed()) {
    RunManifest m = parse_manifest(manifest_path);
    if (!out_flag.empty()) m.out_dir = out_flag;
    if (!variant_flag.empty()) m.model.variant = variant_from_string(variant_flag);
    if (seed_given) m.seed = seed_flag;
    if (epochs_flag > 0) m.train.epochs = epochs_flag;
    if (batch_flag > 0) m.train.batch_size = batch_flag;
    if (context_flag > 0) m.model.context_width = context_flag;
    if (lr_flag > 0.0) m.train.adam.learning_rate = lr_flag;
    if (allow_unk_flag) m.allow_unknown = true;
    m.model.seed = mix_seed(m.seed, 0x6d6f64656c);  // "model"
    m.train.seed = mix_seed(m.seed, 0x747261696e);  // "train"
    m.train.unknown_policy =
        m.allow_unknown ? UnknownPolicy::kMapToUnk : UnknownPolicy::kReject;

    const LoadedData data = load_data(m);
    PolyglotModel model = PolyglotModel::create(m.model, data.vocab, data.typology);
    std::printf("variant=%s  |V|=%zu  languages=%zu  train/dev/test=%zu/%zu/%zu\n",
                to_string(m.model.variant).c_str(), data.vocab.size(),
                data.vocab.languages().size(), data.train.size(), data.dev.size(),
                data.test.size());
    const TrainReport report =
        train(model, data.train, data.dev, m.train, [](const EpochRecord& r) {
          std::printf("epoch %zu  train loss %.6f  dev ppl %.6f  (%.1fs)\n", r.epoch,
                      r.train_loss, r.dev_perplexity, r.wall_seconds);
          std::fflush(stdout);
        });

    std::filesystem::create_directories(m.out_dir);
    const auto model_path = std::filesystem::path(m.out_dir) / "model.pglm";
    const auto report_path = std::filesystem::path(m.out_dir) / "report.json";
    model.save(model_path);
    std::ofstream rep(report_path, std::ios::binary);
    rep << report.to_json().dump(2) << '\n';
    std::printf("model: %s\nreport: %s\n", model_path.string().c_str(),
                report_path.string().c_str());
    return 0;
  }

  if (eval_cmd->parsed()) {
    const PolyglotModel model = PolyglotModel::load(eval_model);
    const UnknownPolicy policy =
        eval_allow_unk ? UnknownPolicy::kMapToUnk : UnknownPolicy::kReject;
    Corpus corpus;
    if (!eval_dict.empty()) {
      if (eval_lang.empty()) throw std::runtime_error("--dict requires --lang");
      corpus = load_dictionary(eval_dict, eval_lang);
    } else if (!eval_manifest.empty()) {
      if (eval_split.empty()) throw std::runtime_error("--manifest requires --split");
      const RunManifest m = parse_manifest(eval_manifest);
      const LoadedData data = load_data(m);
      if (eval_split == "train") {
        corpus = data.train;
      } else if (eval_split == "dev") {
        corpus = data.dev;
      } else if (eval_split == "test") {
        corpus = data.test;
      } else {
        throw std::runtime_error("--split must be train, dev or test");
      }
    } else {
      throw std::runtime_error("pass --dict or --manifest");
    }
    const double ppl = perplexity(model, corpus, policy);
    std::printf("perplexity: %s\n", format_real(ppl).c_str());
    return 0;
  }

  if (export_cmd->parsed()) {
    const PolyglotModel model = PolyglotModel::load(export_model);
    std::filesystem::create_directories(export_out);
    const auto path = std::filesystem::path(export_out) / "vectors.tsv";
    save_embeddings(export_vectors(model, include_special), path);
    std::printf("vectors: %s\n", path.string().c_str());
    return 0;
  }

  if (qvec_cmd->parsed()) {
    const EmbeddingMatrix emb = embeddings_from_flags(an_model, an_emb, false);
    const LinguisticMatrix ling = load_linguistic_matrix(qvec_ling);
    const AlignmentResult result = qvec_align(emb, ling);
    for (const PropertyAlignment& p : result.properties) {
      std::printf("%s\tdim %zu\tr %.6f%s\n", p.property.c_str(), p.dimension, p.correlation,
                  p.constant ? "\t(constant)" : "");
    }
    std::printf("score: %s\n", format_real(result.score).c_str());
    if (!an_out.empty()) {
      std::filesystem::create_directories(an_out);
      std::ofstream out(std::filesystem::path(an_out) / "alignment.json", std::ios::binary);
      out << result.to_json().dump(2) << '\n';
    }
    return 0;
  }

  if (nearest_cmd->parsed()) {
    const EmbeddingMatrix emb = embeddings_from_flags(an_model, an_emb, false);
    for (const auto& [phone, dist] : nearest_phones(emb, near_phone, near_n)) {
      std::printf("%s\t%.6f\n", phone.c_str(), dist);
    }
    return 0;
  }

  if (top_cmd->parsed()) {
    const EmbeddingMatrix emb = embeddings_from_flags(an_model, an_emb, false);
    for (const std::string& phone : top_phones(emb, top_dim, top_n)) {
      std::printf("%s\n", phone.c_str());
    }
    return 0;
  }

  if (dist_cmd->parsed()) {
    const EmbeddingMatrix emb = embeddings_from_flags(dist_model, dist_emb, false);
    const std::vector<std::string> source = split_phones(dist_source);
    const std::vector<std::string> target =
        dist_target.empty() ? source : split_phones(dist_target);
    const SubstitutionTable table = substitution_table(emb, source, target);

    std::ostringstream text;
    for (const std::string& t : table.target_phones()) text << '\t' << t;
    text << '\n';
    for (std::size_t i = 0; i < source.size(); ++i) {
      text << source[i];
      for (std::size_t j = 0; j < target.size(); ++j) {
        text << '\t' << format_real(table.costs()(i, j));
      }
      text << '\n';
    }
    if (dist_out.empty()) {
      std::fputs(text.str().c_str(), stdout);
    } else {
      std::filesystem::create_directories(dist_out);
      const auto path = std::filesystem::path(dist_out) / "substitution.tsv";
      std::ofstream out(path, std::ios::binary);
      out << text.str();
      std::printf("table: %s\n", path.string().c_str());
    }
    return 0;
  }

  if (adapt_cmd->parsed()) {
    const EmbeddingMatrix emb = embeddings_from_flags(adapt_model, adapt_emb, false);
    const std::vector<std::string> source = split_phones(adapt_src);
    const std::vector<std::string> candidate = split_phones(adapt_cand);
    std::vector<std::string> involved = source;
    involved.insert(involved.end(), candidate.begin(), candidate.end());
    std::sort(involved.begin(), involved.end());
    involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
    const SubstitutionTable table = substitution_table(emb, involved, involved);
    const AdaptResult result = adapt_score(source, candidate, table, indel);
    std::printf("cost: %s\n", format_real(result.cost).c_str());
    for (const EditStep& step : result.trace) {
      switch (step.op) {
        case EditOp::kSubstitute:
          std::printf("sub\t%s -> %s\t@%zu\n", step.from.c_str(), step.to.c_str(),
                      step.source_pos);
          break;
        case EditOp::kDelete:
          std::printf("del\t%s\t@%zu\n", step.from.c_str(), step.source_pos);
          break;
        case EditOp::kInsert:
          std::printf("ins\t%s\t@%zu\n", step.to.c_str(), step.candidate_pos);
          break;
      }
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
