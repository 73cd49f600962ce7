#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "trollkit/corpus.hpp"
#include "trollkit/experiment.hpp"
#include "trollkit/noise.hpp"

namespace tk_test {

using namespace trollkit;

inline Utterance utt(std::string id, std::string user, std::string text, SafetyLabel truth,
                     SafetyLabel observed, Split split = Split::Train) {
  Utterance u;
  u.id = std::move(id);
  u.user_id = std::move(user);
  u.text = std::move(text);
  u.true_label = truth;
  u.split = split;
  u.observe(observed);
  return u;
}

inline Utterance clean(std::string id, std::string user, std::string text, SafetyLabel label,
                       Split split = Split::Train) {
  return utt(std::move(id), std::move(user), std::move(text), label, label, split);
}

/// Toy corpus where the token "zap" marks exactly the unsafe texts.
inline std::vector<Utterance> separable_set(std::size_t n, const std::string& prefix,
                                            std::size_t users = 4, Split split = Split::Train) {
  static const char* fillers[] = {"red", "blue", "green", "tall", "small", "fast", "slow", "warm"};
  std::vector<Utterance> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool unsafe = i % 2 == 0;
    std::string text = std::string(fillers[i % 8]) + " " + fillers[(i * 3 + 1) % 8];
    if (unsafe) text += " zap";
    out.push_back(clean(prefix + std::to_string(i), prefix + "u" + std::to_string(i % users), text,
                        unsafe ? SafetyLabel::Unsafe : SafetyLabel::Safe, split));
  }
  return out;
}

/// Small but realistic benchmark instance for one preset and seed.
inline BenchmarkInstance preset_instance(Preset preset, std::uint64_t seed,
                                         double rate = kDefaultTrollRate) {
  ExperimentConfig cfg;
  cfg.pool_spec.size = 6000;
  return make_instance(cfg, preset_population(preset, seed, rate), seed);
}

/// Sample standard deviation of a binomial proportion estimate.
inline double binomial_sd(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("trollkit-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace tk_test
