#include <stdexcept>
#include <cmath>
#include <fstream>
#include <iterator>

#include "doctest.h"
#include "polyglot/model.hpp"
#include "polyglot/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/grad_check.hpp"

using namespace polyglot;

namespace {

Vocab small_vocab() {
  return Vocab({"a", "b", "x"}, {"L1", "L2"}, false);
}

TypologyTable small_typology(std::size_t features = 5) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < features; ++i) names.push_back("f" + std::to_string(i));
  std::map<std::string, Vector> rows;
  Vector r1(features, 0.0), r2(features, 0.0);
  for (std::size_t i = 0; i < features; i += 2) r1[i] = 1.0;
  for (std::size_t i = 1; i < features; i += 2) r2[i] = 1.0;
  rows.emplace("L1", r1);
  rows.emplace("L2", r2);
  return TypologyTable(std::move(names), std::move(rows));
}

ModelConfig micro_config(Variant variant, CellKind cell = CellKind::kLstm) {
  ModelConfig cfg;
  cfg.embedding_dim = 3;
  cfg.context_width = 2;
  cfg.hidden_size = 4;
  cfg.language_dim = 2;
  cfg.variant = variant;
  cfg.cell = cell;
  cfg.seed = 99;
  return cfg;
}

std::vector<std::size_t> wrapped(const Vocab& v, const std::vector<std::string>& phones) {
  std::vector<std::size_t> seq{v.bos()};
  for (const std::string& p : phones) seq.push_back(v.index_of(p));
  seq.push_back(v.eos());
  return seq;
}

}  // namespace

TEST_CASE("a fresh model emits the uniform distribution everywhere") {
  const Vocab v = small_vocab();
  for (const Variant variant : {Variant::kBaseline, Variant::kLang, Variant::kTypology}) {
    const auto typo = variant == Variant::kTypology
                          ? std::optional<TypologyTable>(small_typology())
                          : std::nullopt;
    const PolyglotModel m = PolyglotModel::create(micro_config(variant), v, typo);
    const auto dists = m.forward_sequence(wrapped(v, {"a", "b"}), 0);
    REQUIRE(dists.size() == 3);
    for (const Vector& d : dists) {
      for (const double p : d) {
        CHECK(p == doctest::Approx(1.0 / static_cast<double>(v.size())).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("identical seeds give bit-identical parameters") {
  const Vocab v = small_vocab();
  PolyglotModel a = PolyglotModel::create(micro_config(Variant::kLang), v);
  PolyglotModel b = PolyglotModel::create(micro_config(Variant::kLang), v);
  auto pa = a.parameters();
  auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    REQUIRE(pa[i].values.size() == pb[i].values.size());
    for (std::size_t j = 0; j < pa[i].values.size(); ++j) {
      CHECK(pa[i].values[j] == pb[i].values[j]);
    }
  }

  ModelConfig other = micro_config(Variant::kLang);
  other.seed = 100;
  PolyglotModel c = PolyglotModel::create(other, v);
  bool all_equal = true;
  auto pc = c.parameters();
  for (std::size_t j = 0; j < pa[0].values.size(); ++j) {
    all_equal = all_equal && pa[0].values[j] == pc[0].values[j];
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("the typology projection has the configured 20 x 190 shape") {
  std::vector<std::string> names;
  for (int i = 0; i < 190; ++i) names.push_back("F" + std::to_string(i));
  std::map<std::string, Vector> rows;
  Vector r1(190, 0.0), r2(190, 1.0);
  rows.emplace("L1", r1);
  rows.emplace("L2", r2);
  const TypologyTable table(names, rows);

  ModelConfig cfg = micro_config(Variant::kTypology);
  cfg.language_dim = 20;
  PolyglotModel m = PolyglotModel::create(cfg, small_vocab(), table);
  const auto w_l = m.parameter("W_l");
  CHECK(w_l.rows == 20);
  CHECK(w_l.cols == 190);
}

TEST_CASE("model creation validates the typology binding") {
  const Vocab v = small_vocab();
  CHECK_THROWS_AS(PolyglotModel::create(micro_config(Variant::kTypology), v),
                  std::invalid_argument);
  CHECK_THROWS_AS(PolyglotModel::create(micro_config(Variant::kLang), v, small_typology()),
                  std::invalid_argument);
  const TypologyTable missing({"f"}, {{"L1", {1.0}}});
  CHECK_THROWS_WITH_AS(PolyglotModel::create(micro_config(Variant::kTypology), v, missing),
                       doctest::Contains("L2"), std::invalid_argument);
}

TEST_CASE("local_context reduces to the bias under zero weights") {
  const Vocab v = small_vocab();
  PolyglotModel m = PolyglotModel::create(micro_config(Variant::kLang), v);
  for (double& w : m.parameter("W_cx").values) w = 0.0;
  for (double& w : m.parameter("W_clang").values) w = 0.0;
  auto b_c = m.parameter("b_c");
  for (std::size_t i = 0; i < b_c.values.size(); ++i) b_c.values[i] = 0.5 * (i + 1.0);
  const auto emb = m.embed_context(std::vector<std::size_t>{v.bos(), v.index_of("a")}, 0);
  const Vector c_t = m.local_context(emb.x_t, emb.x_lang);
  for (std::size_t i = 0; i < c_t.size(); ++i) CHECK(c_t[i] == 0.5 * (i + 1.0));
}

TEST_CASE("local_context matches a hand computation in two dimensions") {
  ModelConfig cfg = micro_config(Variant::kBaseline);
  cfg.embedding_dim = 1;
  cfg.context_width = 2;
  cfg.hidden_size = 2;
  const Vocab v = small_vocab();
  PolyglotModel m = PolyglotModel::create(cfg, v);
  auto w = m.parameter("W_cx");  // 2 x 2
  w.values[0] = 1.0;
  w.values[1] = 2.0;
  w.values[2] = 3.0;
  w.values[3] = 4.0;
  auto b = m.parameter("b_c");
  b.values[0] = 1.0;
  b.values[1] = 0.0;
  const Vector c_t = m.local_context({1.0, 1.0}, {});
  CHECK(c_t == Vector{4.0, 7.0});
}

TEST_CASE("the baseline variant ignores the language entirely") {
  const Vocab v = small_vocab();
  PolyglotModel m = PolyglotModel::create(micro_config(Variant::kBaseline), v);
  polyglot::testing::randomize_parameters(m, 5);
  const auto seq = wrapped(v, {"a", "x", "b"});
  const auto d0 = m.forward_logits(seq, 0);
  const auto d1 = m.forward_logits(seq, 1);
  CHECK(d0 == d1);
  const auto emb = m.embed_context(std::vector<std::size_t>{v.bos(), v.index_of("a")}, 0);
  CHECK(emb.x_lang.empty());
}

TEST_CASE("embed_context concatenates lookup columns oldest first") {
  const Vocab v = small_vocab();
  PolyglotModel m = PolyglotModel::create(micro_config(Variant::kLang), v);
  const std::size_t a = v.index_of("a");
  const auto emb = m.embed_context(std::vector<std::size_t>{v.bos(), a}, 1);
  const Matrix& x = m.phone_table();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(emb.x_t[i] == x(i, v.bos()));
    CHECK(emb.x_t[3 + i] == x(i, a));
    CHECK(emb.x_lang[i] == m.language_table()(i, 1));
  }
  // a shared <s> column appears twice
  const auto twice = m.embed_context(std::vector<std::size_t>{v.bos(), v.bos()}, 1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(twice.x_t[i] == twice.x_t[3 + i]);

  CHECK_THROWS_AS(m.embed_context(std::vector<std::size_t>{a}, 0), std::invalid_argument);
  CHECK_THROWS_AS(m.embed_context(std::vector<std::size_t>{a, 999}, 0), std::out_of_range);

  // k = 1 yields exactly one column
  ModelConfig narrow = micro_config(Variant::kLang);
  narrow.context_width = 1;
  PolyglotModel m1 = PolyglotModel::create(narrow, v);
  const auto one = m1.embed_context(std::vector<std::size_t>{a}, 0);
  REQUIRE(one.x_t.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(one.x_t[i] == m1.phone_table()(i, a));
}

TEST_CASE("initialization zeroes biases except the forget gate") {
  const Vocab v = small_vocab();
  PolyglotModel m = PolyglotModel::create(micro_config(Variant::kLang), v);
  for (const double b : m.parameter("lstm.forget.b").values) CHECK(b == 1.0);
  for (const double b : m.parameter("lstm.input.b").values) CHECK(b == 0.0);
  for (const double b : m.parameter("b_c").values) CHECK(b == 0.0);
  for (const double w : m.parameter("W_out").values) CHECK(w == 0.0);
  for (const double b : m.parameter("b_out").values) CHECK(b == 0.0);
}

TEST_CASE("language_projection depends only on the typology row") {
  const Vocab v = small_vocab();
  PolyglotModel m =
      PolyglotModel::create(micro_config(Variant::kTypology), v, small_typology());

  SUBCASE("zero weights give tanh of the bias") {
    for (double& w : m.parameter("W_l").values) w = 0.0;
    auto b = m.parameter("b_l");
    b.values[0] = 0.3;
    b.values[1] = -1.0;
    const Vector f = m.language_projection(Vector(5, 0.0));
    CHECK(f[0] == doctest::Approx(std::tanh(0.3)).epsilon(1e-15));
    CHECK(f[1] == doctest::Approx(std::tanh(-1.0)).epsilon(1e-15));
    const Vector f_any = m.language_projection(Vector{1.0, 1.0, 0.0, 1.0, 0.0});
    CHECK(f == f_any);  // W_l is zero, so t_l cannot matter
  }

  SUBCASE("identical typology rows give identical projections") {
    const Vector t{1.0, 0.0, 1.0, 0.0, 1.0};
    CHECK(m.language_projection(t) == m.language_projection(t));
    for (const double x : m.language_projection(t)) {
      CHECK(x > -1.0);
      CHECK(x < 1.0);
    }
  }

  SUBCASE("non-typology variants reject the projection") {
    PolyglotModel lang = PolyglotModel::create(micro_config(Variant::kLang), v);
    CHECK_THROWS_AS(lang.language_projection(Vector(5, 0.0)), std::logic_error);
  }
}

TEST_CASE("output_distribution covers the full vocabulary") {
  const Vocab v = small_vocab();

  SUBCASE("zero output layer is uniform") {
    PolyglotModel m = PolyglotModel::create(micro_config(Variant::kBaseline), v);
    const Vector d = m.output_distribution(Vector(4, 0.7));
    REQUIRE(d.size() == v.size());
    for (const double p : d) CHECK(p == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  }

  SUBCASE("a zero projection collapses the typology logits to the bias") {
    PolyglotModel m =
        PolyglotModel::create(micro_config(Variant::kTypology), v, small_typology());
    polyglot::testing::randomize_parameters(m, 21);
    auto b_out = m.parameter("b_out");
    const Vector expected = softmax(Vector(b_out.values.begin(), b_out.values.end()));
    const Vector f_zero(2, 0.0);
    const Vector d = m.output_distribution(Vector(4, 0.9), &f_zero);
    // the outer product with f_l = 0 vanishes
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(d[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
  }

  SUBCASE("pre-bias logits are bilinear in f_l") {
    PolyglotModel m =
        PolyglotModel::create(micro_config(Variant::kTypology), v, small_typology());
    polyglot::testing::randomize_parameters(m, 22);
    for (double& b : m.parameter("b_out").values) b = 0.0;
    const Vector g{0.2, -0.4, 0.6, 0.1};
    const Vector f{0.5, -0.3};
    Vector f2 = f;
    for (double& x : f2) x *= 2.0;
    const Vector p1 = m.output_distribution(g, &f);
    const Vector p2 = m.output_distribution(g, &f2);
    // log-probability ratios scale with the logits
    for (std::size_t i = 1; i < p1.size(); ++i) {
      const double r1 = std::log(p1[i]) - std::log(p1[0]);
      const double r2 = std::log(p2[i]) - std::log(p2[0]);
      CHECK(r2 == doctest::Approx(2.0 * r1).epsilon(1e-9));
    }
  }

  SUBCASE("f_l is required exactly for the typology variant") {
    PolyglotModel m = PolyglotModel::create(micro_config(Variant::kBaseline), v);
    const Vector f(2, 0.0);
    CHECK_THROWS_AS(m.output_distribution(Vector(4, 0.0), &f), std::invalid_argument);
    PolyglotModel t =
        PolyglotModel::create(micro_config(Variant::kTypology), v, small_typology());
    CHECK_THROWS_AS(t.output_distribution(Vector(4, 0.0)), std::invalid_argument);
  }
}

TEST_CASE("forward_sequence emits normalized causal distributions") {
  const Vocab v = small_vocab();
  for (const Variant variant : {Variant::kBaseline, Variant::kLang, Variant::kTypology}) {
    for (const CellKind cell : {CellKind::kLstm, CellKind::kRnn}) {
      const auto typo = variant == Variant::kTypology
                            ? std::optional<TypologyTable>(small_typology())
                            : std::nullopt;
      PolyglotModel m = PolyglotModel::create(micro_config(variant, cell), v, typo);
      polyglot::testing::randomize_parameters(m, 7);

      const auto seq = wrapped(v, {"a", "x", "b", "a"});
      const auto dists = m.forward_sequence(seq, 1);
      REQUIRE(dists.size() == seq.size() - 1);
      for (const Vector& d : dists) {
        double total = 0.0;
        for (const double p : d) total += p;
        CHECK(std::abs(total - 1.0) <= 1e-9);
      }

      // truncating the sequence leaves earlier distributions untouched
      const std::vector<std::size_t> prefix(seq.begin(), seq.begin() + 3);
      const auto short_dists = m.forward_sequence(prefix, 1);
      REQUIRE(short_dists.size() == 2);
      CHECK(short_dists[0] == dists[0]);
      CHECK(short_dists[1] == dists[1]);
    }
  }
}

TEST_CASE("forward passes validate their inputs") {
  const Vocab v = small_vocab();
  PolyglotModel m = PolyglotModel::create(micro_config(Variant::kLang), v);
  CHECK_THROWS_AS(m.forward_logits(std::vector<std::size_t>{v.index_of("a"), v.eos()}, 0),
                  std::invalid_argument);  // unwrapped
  CHECK_THROWS_AS(m.forward_logits(wrapped(v, {"a"}), 9), std::out_of_range);
}

TEST_CASE("the typology variant consumes the typology row") {
  const Vocab v = small_vocab();
  TypologyTable t1 = small_typology();
  PolyglotModel m = PolyglotModel::create(micro_config(Variant::kTypology), v, t1);
  polyglot::testing::randomize_parameters(m, 13);
  const auto seq = wrapped(v, {"a", "b"});
  const auto before = m.forward_logits(seq, 0);

  // same weights, different typology row for L1
  std::map<std::string, Vector> rows;
  rows.emplace("L1", Vector{1.0, 1.0, 1.0, 1.0, 1.0});
  rows.emplace("L2", t1.features_for("L2"));
  const TypologyTable t2(std::vector<std::string>(t1.feature_names()), std::move(rows));
  PolyglotModel m2 = PolyglotModel::create(micro_config(Variant::kTypology), v, t2);
  auto src = m.parameters();
  auto dst = m2.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < src[i].values.size(); ++j) {
      dst[i].values[j] = src[i].values[j];
    }
  }
  const auto after = m2.forward_logits(seq, 0);
  CHECK(before != after);
  // the untouched language is unaffected
  CHECK(m.forward_logits(seq, 1) == m2.forward_logits(seq, 1));
}

TEST_CASE("the tape graph reproduces the pure forward bit for bit") {
  const Vocab v = small_vocab();
  for (const Variant variant : {Variant::kBaseline, Variant::kLang, Variant::kTypology}) {
    for (const CellKind cell : {CellKind::kLstm, CellKind::kRnn}) {
      const auto typo = variant == Variant::kTypology
                            ? std::optional<TypologyTable>(small_typology())
                            : std::nullopt;
      PolyglotModel m = PolyglotModel::create(micro_config(variant, cell), v, typo);
      polyglot::testing::randomize_parameters(m, 31);

      const auto seq = wrapped(v, {"x", "a", "b"});
      const auto pure = m.forward_logits(seq, 1);

      Tape tape;
      ModelGraph graph(tape, m);
      const auto nodes = graph.sequence_logits(seq, 1);
      REQUIRE(nodes.size() == pure.size());
      for (std::size_t t = 0; t < nodes.size(); ++t) {
        CHECK(tape.value(nodes[t]) == pure[t]);
      }
    }
  }
}

TEST_CASE("end-to-end gradients of a micro model match finite differences") {
  const Vocab v = small_vocab();
  PolyglotModel m =
      PolyglotModel::create(micro_config(Variant::kTypology), v, small_typology());
  polyglot::testing::randomize_parameters(m, 47);
  const auto seq = wrapped(v, {"a", "x"});

  Tape tape;
  ModelGraph graph(tape, m);
  const auto losses = graph.sequence_losses(seq, 0);
  const NodeId loss = tape.mean(losses);
  tape.backward(loss);

  const auto loss_fn = [&] {
    double total = 0.0;
    const auto logits = m.forward_logits(seq, 0);
    for (std::size_t t = 0; t < logits.size(); ++t) {
      total += log_sum_exp(logits[t]) - logits[t][seq[t + 1]];
    }
    return total / static_cast<double>(logits.size());
  };

  polyglot::testing::GradCheck check;
  for (const ModelGraph::Bound& b : graph.bound_params()) {
    CHECK(check.compare(b.param.name, b.param.values, tape.grad(b.node), loss_fn));
  }
  INFO(check.first_failure);
  CHECK(check.failed == 0);
}

TEST_CASE("save and load round trip bit-exactly") {
  polyglot::testing::TempDir dir("model_io");
  const Vocab v = small_vocab();
  for (const Variant variant : {Variant::kBaseline, Variant::kLang, Variant::kTypology}) {
    const auto typo = variant == Variant::kTypology
                          ? std::optional<TypologyTable>(small_typology())
                          : std::nullopt;
    PolyglotModel m = PolyglotModel::create(micro_config(variant), v, typo);
    polyglot::testing::randomize_parameters(m, 61);
    const auto path = dir.file("m_" + to_string(variant) + ".pglm");
    m.save(path);
    PolyglotModel r = PolyglotModel::load(path);

    CHECK(r.config() == m.config());
    CHECK(r.vocab() == m.vocab());
    auto pm = m.parameters();
    auto pr = r.parameters();
    REQUIRE(pm.size() == pr.size());
    for (std::size_t i = 0; i < pm.size(); ++i) {
      CHECK(pm[i].name == pr[i].name);
      REQUIRE(pm[i].values.size() == pr[i].values.size());
      for (std::size_t j = 0; j < pm[i].values.size(); ++j) {
        CHECK(pm[i].values[j] == pr[i].values[j]);
      }
    }
    if (variant == Variant::kTypology) CHECK(r.typology() == m.typology());
  }
}

TEST_CASE("corrupt model files are rejected by section") {
  polyglot::testing::TempDir dir("model_bad");
  const Vocab v = small_vocab();
  PolyglotModel m = PolyglotModel::create(micro_config(Variant::kLang), v);
  const auto path = dir.file("m.pglm");
  m.save(path);

  SUBCASE("tampered magic") {
    auto bytes = [&] {
      std::ifstream in(path, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    bytes[0] = 'X';
    polyglot::testing::write_file(dir.file("bad.pglm"), bytes);
    CHECK_THROWS_WITH_AS(PolyglotModel::load(dir.file("bad.pglm")),
                         doctest::Contains("magic"), std::runtime_error);
  }

  SUBCASE("truncated parameter block") {
    auto bytes = [&] {
      std::ifstream in(path, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    bytes.resize(bytes.size() - 64);
    polyglot::testing::write_file(dir.file("trunc.pglm"), bytes);
    CHECK_THROWS_WITH_AS(PolyglotModel::load(dir.file("trunc.pglm")),
                         doctest::Contains("parameter block"), std::runtime_error);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(PolyglotModel::load(dir.file("nope.pglm")), std::runtime_error);
  }
}
