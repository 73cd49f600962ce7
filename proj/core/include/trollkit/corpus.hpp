#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trollkit/rng.hpp"

namespace trollkit {

/// Binary safety class. Safe is class 0, Unsafe is class 1.
enum class SafetyLabel : std::uint8_t { Safe = 0, Unsafe = 1 };

inline SafetyLabel flipped(SafetyLabel l) {
  return l == SafetyLabel::Safe ? SafetyLabel::Unsafe : SafetyLabel::Safe;
}
inline int as_int(SafetyLabel l) { return static_cast<int>(l); }
inline SafetyLabel label_from_int(int v) { return v == 0 ? SafetyLabel::Safe : SafetyLabel::Unsafe; }

enum class Difficulty : std::uint8_t { Standard, Adversarial };

enum class Split : std::uint8_t { Train, Valid, Eval, Pool };

std::string_view to_string(Difficulty d);
std::string_view to_string(Split s);

/// One labeled text example.
///
/// `annotated` is false only for wild-mode records whose ground truth is
/// unknown; in that case `true_label` mirrors `observed_label`.
struct Utterance {
  std::string id;
  std::string user_id;
  std::string text;
  SafetyLabel true_label = SafetyLabel::Safe;
  SafetyLabel observed_label = SafetyLabel::Safe;
  Difficulty difficulty = Difficulty::Standard;
  bool corrupted = false;
  Split split = Split::Pool;
  bool annotated = true;

  /// Sets the observed label and keeps `corrupted` consistent with it.
  void observe(SafetyLabel label) {
    observed_label = label;
    corrupted = observed_label != true_label;
  }

  bool operator==(const Utterance&) const = default;
};

struct PoolSpec {
  std::size_t size = 30000;
  double unsafe_fraction = 0.10;
  double adversarial_fraction = 0.50;
  std::uint64_t vocabulary_seed = 7;

  void validate() const;
};

/// Token inventory of the synthetic corpus.
///
/// Standard unsafe texts carry at least one marker token. Adversarial unsafe
/// texts carry none; they are unsafe because two benign trigger words occur
/// adjacently in a designated order.
struct Vocabulary {
  std::vector<std::string> benign;
  std::vector<std::string> markers;
  std::vector<std::string> trigger_words;
  std::vector<std::pair<std::string, std::string>> trigger_bigrams;

  static Vocabulary build(std::uint64_t vocabulary_seed);

  bool contains_marker(std::string_view text) const;
  bool contains_trigger_bigram(std::string_view text) const;

 private:
  std::set<std::string, std::less<>> marker_set_;
  std::set<std::pair<std::string, std::string>> bigram_set_;

  void index();
};

/// Synthetic stand-in for a crowdsourced safety pool. Deterministic in (spec, seed).
std::vector<Utterance> generate_pool(const PoolSpec& spec, std::uint64_t seed);

/// Like generate_pool, reusing an already built vocabulary.
std::vector<Utterance> generate_pool(const PoolSpec& spec, const Vocabulary& vocabulary,
                                     std::uint64_t seed);

/// Generates a single text of the requested class and difficulty.
std::string generate_text(const Vocabulary& vocabulary, SafetyLabel label, Difficulty difficulty,
                          Rng& rng);

struct EvalSplit {
  std::vector<Utterance> eval;
  std::vector<Utterance> remaining;
};

/// Draws a clean, standard-difficulty evaluation set with the requested
/// class composition. Throws CompositionError if a class is short.
EvalSplit split_eval(std::vector<Utterance> pool, std::size_t n_unsafe, std::size_t n_safe,
                     std::uint64_t seed);

enum class ReadMode {
  Strict,  ///< true_label and corrupted are required.
  Wild,    ///< true_label and corrupted may be absent.
};

/// Reads a JSONL dataset. Throws ParseError (with line number) on malformed
/// records or unknown fields, IntegrityError on duplicate ids or an
/// inconsistent `corrupted` flag.
std::vector<Utterance> read_dataset(const std::filesystem::path& path,
                                    ReadMode mode = ReadMode::Strict);
std::vector<Utterance> parse_dataset(std::string_view contents, ReadMode mode = ReadMode::Strict);

void write_dataset(const std::vector<Utterance>& data, const std::filesystem::path& path);
std::string render_dataset(const std::vector<Utterance>& data);

}  // namespace trollkit
