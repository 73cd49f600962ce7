#include "trollkit/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "trollkit/error.hpp"
#include "trollkit/text.hpp"

namespace trollkit {

namespace {

constexpr std::size_t kBenignWords = 2000;
constexpr std::size_t kMarkerWords = 3;
constexpr std::size_t kTriggerWords = 16;
constexpr std::size_t kTriggerBigrams = 24;
constexpr std::size_t kMinWords = 6;
constexpr std::size_t kMaxWords = 12;
constexpr std::size_t kMinMarkers = 3;
constexpr std::size_t kMaxMarkers = 4;
// Share of adversarial-text positions filled with trigger words, so that
// single trigger words are common in both classes.
constexpr double kTriggerDensity = 0.3;

constexpr std::string_view kOnsets = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::string pseudo_word(Rng& rng, std::size_t syllables) {
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(kOnsets.size())];
    w += kVowels[rng.below(kVowels.size())];
  }
  return w;
}

std::string join(const std::vector<std::string_view>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(Difficulty d) {
  return d == Difficulty::Standard ? "standard" : "adversarial";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Eval: return "eval";
    case Split::Pool: return "pool";
  }
  return "pool";
}

void PoolSpec::validate() const {
  if (size == 0) throw InvalidSpecError("pool size must be at least 1");
  if (!(unsafe_fraction >= 0.0 && unsafe_fraction <= 1.0))
    throw InvalidSpecError("unsafe_fraction must lie in [0, 1]");
  if (!(adversarial_fraction >= 0.0 && adversarial_fraction <= 1.0))
    throw InvalidSpecError("adversarial_fraction must lie in [0, 1]");
}

Vocabulary Vocabulary::build(std::uint64_t vocabulary_seed) {
  Rng rng(derive_seed(vocabulary_seed, "vocabulary"));
  std::set<std::string> seen;
  auto fresh = [&](std::size_t syllables) {
    for (;;) {
      auto w = pseudo_word(rng, syllables);
      if (seen.insert(w).second) return w;
    }
  };

  Vocabulary v;
  // Markers are one syllable longer than any benign word, so the two sets
  // never collide.
  for (std::size_t i = 0; i < kBenignWords; ++i) v.benign.push_back(fresh(2 + rng.below(2)));
  for (std::size_t i = 0; i < kMarkerWords; ++i) v.markers.push_back(fresh(4));
  v.trigger_words.assign(v.benign.begin(), v.benign.begin() + kTriggerWords);

  std::set<std::pair<std::string, std::string>> pairs;
  while (pairs.size() < kTriggerBigrams) {
    const auto& a = v.trigger_words[rng.below(kTriggerWords)];
    const auto& b = v.trigger_words[rng.below(kTriggerWords)];
    if (a == b) continue;
    if (pairs.insert({a, b}).second) v.trigger_bigrams.emplace_back(a, b);
  }
  v.index();
  return v;
}

void Vocabulary::index() {
  marker_set_ = {markers.begin(), markers.end()};
  bigram_set_ = {trigger_bigrams.begin(), trigger_bigrams.end()};
}

bool Vocabulary::contains_marker(std::string_view text) const {
  const auto tokens = tokenize(text);
  return std::any_of(tokens.begin(), tokens.end(),
                     [&](const std::string& t) { return marker_set_.contains(t); });
}

bool Vocabulary::contains_trigger_bigram(std::string_view text) const {
  const auto tokens = tokenize(text);
  for (std::size_t i = 1; i < tokens.size(); ++i)
    if (bigram_set_.contains({tokens[i - 1], tokens[i]})) return true;
  return false;
}

std::string generate_text(const Vocabulary& vocab, SafetyLabel label, Difficulty difficulty,
                          Rng& rng) {
  const std::size_t n = kMinWords + rng.below(kMaxWords - kMinWords + 1);
  const bool adversarial = difficulty == Difficulty::Adversarial;

  std::vector<std::string_view> words;
  for (;;) {
    words.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (adversarial && rng.bernoulli(kTriggerDensity))
        words.push_back(vocab.trigger_words[rng.below(vocab.trigger_words.size())]);
      else
        words.push_back(vocab.benign[rng.below(vocab.benign.size())]);
    }
    // Benign filler must never spell a trigger bigram by accident.
    if (!vocab.contains_trigger_bigram(join(words))) break;
  }

  if (label == SafetyLabel::Unsafe) {
    if (adversarial) {
      const auto& [a, b] = vocab.trigger_bigrams[rng.below(vocab.trigger_bigrams.size())];
      const std::size_t at = rng.below(n - 1);
      words[at] = a;
      words[at + 1] = b;
    } else {
      const std::size_t count = kMinMarkers + rng.below(kMaxMarkers - kMinMarkers + 1);
      for (std::size_t m = 0; m < count; ++m)
        words[rng.below(n)] = vocab.markers[rng.below(vocab.markers.size())];
    }
  }
  return join(words);
}

std::vector<Utterance> generate_pool(const PoolSpec& spec, std::uint64_t seed) {
  spec.validate();
  return generate_pool(spec, Vocabulary::build(spec.vocabulary_seed), seed);
}

std::vector<Utterance> generate_pool(const PoolSpec& spec, const Vocabulary& vocabulary,
                                     std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, "pool"));
  std::vector<Utterance> pool;
  pool.reserve(spec.size);
  char id[32];
  for (std::size_t i = 0; i < spec.size; ++i) {
    Utterance u;
    std::snprintf(id, sizeof id, "pool-%06zu", i);
    u.id = id;
    u.true_label = rng.bernoulli(spec.unsafe_fraction) ? SafetyLabel::Unsafe : SafetyLabel::Safe;
    u.difficulty =
        rng.bernoulli(spec.adversarial_fraction) ? Difficulty::Adversarial : Difficulty::Standard;
    u.observed_label = u.true_label;
    u.text = generate_text(vocabulary, u.true_label, u.difficulty, rng);
    u.split = Split::Pool;
    pool.push_back(std::move(u));
  }
  return pool;
}

EvalSplit split_eval(std::vector<Utterance> pool, std::size_t n_unsafe, std::size_t n_safe,
                     std::uint64_t seed) {
  std::vector<std::size_t> unsafe_idx;
  std::vector<std::size_t> safe_idx;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].difficulty != Difficulty::Standard) continue;
    (pool[i].true_label == SafetyLabel::Unsafe ? unsafe_idx : safe_idx).push_back(i);
  }
  auto require = [](std::size_t have, std::size_t want, const char* cls) {
    if (have < want) {
      std::ostringstream msg;
      msg << "insufficient standard " << cls << " utterances: requested " << want
          << ", available " << have;
      throw CompositionError(msg.str());
    }
  };
  require(unsafe_idx.size(), n_unsafe, "unsafe");
  require(safe_idx.size(), n_safe, "safe");

  Rng rng(derive_seed(seed, "eval-split"));
  rng.shuffle(std::span(unsafe_idx));
  rng.shuffle(std::span(safe_idx));

  std::vector<bool> chosen(pool.size(), false);
  for (std::size_t i = 0; i < n_unsafe; ++i) chosen[unsafe_idx[i]] = true;
  for (std::size_t i = 0; i < n_safe; ++i) chosen[safe_idx[i]] = true;

  EvalSplit out;
  out.eval.reserve(n_unsafe + n_safe);
  out.remaining.reserve(pool.size() - n_unsafe - n_safe);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto& u = pool[i];
    if (chosen[i]) {
      u.split = Split::Eval;
      u.observe(u.true_label);
      out.eval.push_back(std::move(u));
    } else {
      out.remaining.push_back(std::move(u));
    }
  }
  return out;
}

}  // namespace trollkit
