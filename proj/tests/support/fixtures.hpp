#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "polyglot/corpus.hpp"
#include "polyglot/model.hpp"
#include "polyglot/rng.hpp"

namespace polyglot::testing {

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("polyglot_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<unsigned>(::getpid())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// In-memory corpus from unwrapped phone strings, e.g. {"k a t", "a b"}.
inline Corpus corpus_from(const std::string& language,
                          const std::vector<std::string>& words) {
  Corpus c;
  for (std::size_t i = 0; i < words.size(); ++i) {
    Entry e;
    e.language = language;
    e.word = "w" + std::to_string(i);
    e.phones.push_back(kBos);
    std::string tok;
    for (const char ch : words[i]) {
      if (ch == ' ') {
        if (!tok.empty()) e.phones.push_back(tok);
        tok.clear();
      } else {
        tok += ch;
      }
    }
    if (!tok.empty()) e.phones.push_back(tok);
    e.phones.push_back(kEos);
    c.entries.push_back(std::move(e));
  }
  return c;
}

// Overwrites every parameter with uniform draws so gradients flow everywhere
// (a freshly created model has a zero output layer).
inline void randomize_parameters(PolyglotModel& model, std::uint64_t seed, double scale = 0.5) {
  Rng rng(seed);
  for (auto& p : model.parameters()) {
    for (double& v : p.values) v = rng.uniform(-scale, scale);
  }
}

}  // namespace polyglot::testing
