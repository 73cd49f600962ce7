#include <doctest.h>

#include <algorithm>
#include <set>

#include "support.hpp"
#include "trollkit/error.hpp"
#include "trollkit/text.hpp"

using namespace tk_test;

TEST_CASE("tokenize lowercases and splits on whitespace") {
  CHECK(tokenize("Hello  WORLD\tfoo\n") == std::vector<std::string>{"hello", "world", "foo"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   ").empty());
}

TEST_CASE("generate_pool: unsafe share within 3 sigma of the prior") {
  PoolSpec spec;
  spec.size = 30000;
  spec.unsafe_fraction = 0.10;
  const auto pool = generate_pool(spec, 11);
  REQUIRE(pool.size() == 30000);
  const auto unsafe = std::count_if(pool.begin(), pool.end(), [](const Utterance& u) {
    return u.true_label == SafetyLabel::Unsafe;
  });
  const double sd = std::sqrt(30000 * 0.1 * 0.9);
  CHECK(std::abs(static_cast<double>(unsafe) - 3000.0) <= 3 * sd);
}

TEST_CASE("generate_pool: zero unsafe fraction gives only safe texts") {
  PoolSpec spec;
  spec.size = 10;
  spec.unsafe_fraction = 0.0;
  const auto pool = generate_pool(spec, 1);
  REQUIRE(pool.size() == 10);
  for (const auto& u : pool) CHECK(u.true_label == SafetyLabel::Safe);
}

TEST_CASE("generate_pool is a pure function of spec and seed") {
  PoolSpec spec;
  spec.size = 500;
  CHECK(render_dataset(generate_pool(spec, 3)) == render_dataset(generate_pool(spec, 3)));
  CHECK(render_dataset(generate_pool(spec, 3)) != render_dataset(generate_pool(spec, 4)));
}

TEST_CASE("generate_pool rejects bad specs") {
  PoolSpec spec;
  spec.size = 0;
  CHECK_THROWS_AS(generate_pool(spec, 1), InvalidSpecError);
  spec.size = 10;
  spec.unsafe_fraction = 1.5;
  CHECK_THROWS_AS(generate_pool(spec, 1), InvalidSpecError);
  spec.unsafe_fraction = 0.1;
  spec.adversarial_fraction = -0.1;
  CHECK_THROWS_AS(generate_pool(spec, 1), InvalidSpecError);
}

TEST_CASE("pool records are clean, unique, and in the pool split") {
  PoolSpec spec;
  spec.size = 2000;
  const auto pool = generate_pool(spec, 5);
  std::set<std::string> ids;
  for (const auto& u : pool) {
    CHECK_FALSE(u.corrupted);
    CHECK(u.observed_label == u.true_label);
    CHECK(u.split == Split::Pool);
    CHECK_FALSE(u.text.empty());
    ids.insert(u.id);
  }
  CHECK(ids.size() == pool.size());
}

TEST_CASE("marker separation holds over a full pool") {
  PoolSpec spec;
  spec.size = 30000;
  const auto vocab = Vocabulary::build(spec.vocabulary_seed);
  const auto pool = generate_pool(spec, vocab, 21);
  std::size_t standard_unsafe = 0;
  std::size_t adversarial_unsafe = 0;
  for (const auto& u : pool) {
    if (u.true_label != SafetyLabel::Unsafe) continue;
    if (u.difficulty == Difficulty::Standard) {
      ++standard_unsafe;
      CHECK(vocab.contains_marker(u.text));
    } else {
      ++adversarial_unsafe;
      CHECK_FALSE(vocab.contains_marker(u.text));
      CHECK(vocab.contains_trigger_bigram(u.text));
    }
  }
  CHECK(standard_unsafe > 0);
  CHECK(adversarial_unsafe > 0);
}

TEST_CASE("safe texts carry neither markers nor trigger bigrams") {
  PoolSpec spec;
  spec.size = 5000;
  const auto vocab = Vocabulary::build(spec.vocabulary_seed);
  for (const auto& u : generate_pool(spec, vocab, 2)) {
    if (u.true_label != SafetyLabel::Safe) continue;
    CHECK_FALSE(vocab.contains_marker(u.text));
    CHECK_FALSE(vocab.contains_trigger_bigram(u.text));
  }
}

TEST_CASE("split_eval draws the requested clean standard composition") {
  PoolSpec spec;
  spec.size = 6000;
  const auto pool = generate_pool(spec, 8);
  const auto split = split_eval(pool, 100, 900, 8);
  REQUIRE(split.eval.size() == 1000);
  CHECK(split.remaining.size() == pool.size() - 1000);
  std::size_t unsafe = 0;
  std::set<std::string> eval_ids;
  for (const auto& u : split.eval) {
    unsafe += u.true_label == SafetyLabel::Unsafe;
    CHECK(u.difficulty == Difficulty::Standard);
    CHECK_FALSE(u.corrupted);
    CHECK(u.split == Split::Eval);
    eval_ids.insert(u.id);
  }
  CHECK(unsafe == 100);
  for (const auto& u : split.remaining) CHECK_FALSE(eval_ids.contains(u.id));
}

TEST_CASE("split_eval with an empty request leaves the pool unchanged") {
  PoolSpec spec;
  spec.size = 300;
  const auto pool = generate_pool(spec, 9);
  const auto split = split_eval(pool, 0, 0, 9);
  CHECK(split.eval.empty());
  CHECK(split.remaining == pool);
}

TEST_CASE("split_eval names the deficient class") {
  std::vector<Utterance> pool;
  for (int i = 0; i < 5; ++i)
    pool.push_back(clean("u" + std::to_string(i), "a", "x zap", SafetyLabel::Unsafe, Split::Pool));
  for (int i = 0; i < 50; ++i)
    pool.push_back(clean("s" + std::to_string(i), "a", "x y", SafetyLabel::Safe, Split::Pool));
  try {
    split_eval(pool, 100, 10, 1);
    FAIL("expected a composition error");
  } catch (const CompositionError& e) {
    CHECK(std::string(e.what()).find("unsafe") != std::string::npos);
  }
  CHECK_THROWS_AS(split_eval(pool, 1, 100, 1), CompositionError);
}

TEST_CASE("dataset round trip is field-for-field identity") {
  TempDir dir("roundtrip");
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto inst = preset_instance(Preset::Troll, seed);
    for (const auto* part : {&inst.train, &inst.valid, &inst.eval}) {
      const auto path = dir.path / "d.jsonl";
      write_dataset(*part, path);
      CHECK(read_dataset(path) == *part);
    }
  }
  PoolSpec spec;
  spec.size = 400;
  const auto pool = generate_pool(spec, 4);
  CHECK(parse_dataset(render_dataset(pool)) == pool);
}

TEST_CASE("text needing JSON escapes survives the round trip") {
  std::vector<Utterance> data{clean("q\"1", "user\\x", "tab\there \"quoted\" \xc3\xa9", SafetyLabel::Safe)};
  CHECK(parse_dataset(render_dataset(data)) == data);
}

TEST_CASE("read_dataset reports the failing line") {
  const std::string good =
      R"({"id":"a","user_id":"u","text":"hi","true_label":0,"observed_label":0,"difficulty":"standard","corrupted":false,"split":"train"})";
  const std::string no_text =
      R"({"id":"b","user_id":"u","true_label":0,"observed_label":0,"difficulty":"standard","corrupted":false,"split":"train"})";
  try {
    parse_dataset(good + "\n" + no_text + "\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("text") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_dataset(good + "\n{not json\n"), ParseError);
  CHECK_THROWS_AS(parse_dataset(R"({"id":"a","user_id":"u","text":"hi","true_label":0,"observed_label":0,"difficulty":"standard","corrupted":false,"split":"train","extra":1})"),
                  ParseError);
}

TEST_CASE("read_dataset cross-checks corrupted and ids") {
  const std::string bad_flag =
      R"({"id":"a","user_id":"u","text":"hi","true_label":1,"observed_label":1,"difficulty":"standard","corrupted":true,"split":"train"})";
  CHECK_THROWS_AS(parse_dataset(bad_flag), IntegrityError);
  const std::string rec =
      R"({"id":"a","user_id":"u","text":"hi","true_label":0,"observed_label":0,"difficulty":"standard","corrupted":false,"split":"train"})";
  CHECK_THROWS_AS(parse_dataset(rec + "\n" + rec + "\n"), IntegrityError);
}

TEST_CASE("wild mode accepts records without ground truth") {
  const std::string rec = R"({"id":"w1","user_id":"u","text":"hello there","observed_label":0,"difficulty":"standard","split":"pool"})";
  CHECK_THROWS_AS(parse_dataset(rec), ParseError);
  const auto data = parse_dataset(rec, ReadMode::Wild);
  REQUIRE(data.size() == 1);
  CHECK_FALSE(data[0].annotated);
  CHECK(data[0].true_label == data[0].observed_label);
  CHECK(parse_dataset(render_dataset(data), ReadMode::Wild) == data);
}

TEST_CASE("missing files surface as data errors") {
  CHECK_THROWS_AS(read_dataset("/nonexistent/trollkit/none.jsonl"), DataError);
}
