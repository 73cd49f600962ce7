#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "trollkit/corpus.hpp"
#include "trollkit/error.hpp"

namespace trollkit {

namespace {

using json = nlohmann::ordered_json;

const std::set<std::string, std::less<>> kKnownFields = {
    "id", "user_id", "text", "true_label", "observed_label", "difficulty", "corrupted", "split"};

SafetyLabel parse_label(const json& record, const char* field, std::size_t line) {
  const auto& v = record.at(field);
  if (!v.is_number_integer()) throw ParseError(line, std::string(field) + " must be 0 or 1");
  const auto x = v.get<long long>();
  if (x != 0 && x != 1) throw ParseError(line, std::string(field) + " must be 0 or 1");
  return label_from_int(static_cast<int>(x));
}

std::string parse_string(const json& record, const char* field, std::size_t line) {
  if (!record.contains(field)) throw ParseError(line, std::string("missing field \"") + field + "\"");
  const auto& v = record.at(field);
  if (!v.is_string()) throw ParseError(line, std::string(field) + " must be a string");
  return v.get<std::string>();
}

Difficulty parse_difficulty(const std::string& s, std::size_t line) {
  if (s == "standard") return Difficulty::Standard;
  if (s == "adversarial") return Difficulty::Adversarial;
  throw ParseError(line, "difficulty must be \"standard\" or \"adversarial\", got \"" + s + "\"");
}

Split parse_split(const std::string& s, std::size_t line) {
  if (s == "train") return Split::Train;
  if (s == "valid") return Split::Valid;
  if (s == "eval") return Split::Eval;
  if (s == "pool") return Split::Pool;
  throw ParseError(line, "unknown split \"" + s + "\"");
}

Utterance parse_record(const std::string& raw, std::size_t line, ReadMode mode) {
  json record;
  try {
    record = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) throw ParseError(line, "record must be a JSON object");
  for (const auto& [key, _] : record.items())
    if (!kKnownFields.contains(key)) throw ParseError(line, "unknown field \"" + key + "\"");

  Utterance u;
  u.id = parse_string(record, "id", line);
  if (u.id.empty()) throw ParseError(line, "id must be non-empty");
  u.user_id = parse_string(record, "user_id", line);
  u.text = parse_string(record, "text", line);
  if (u.text.empty()) throw ParseError(line, "text must be non-empty");
  if (!record.contains("observed_label")) throw ParseError(line, "missing field \"observed_label\"");
  u.observed_label = parse_label(record, "observed_label", line);
  u.difficulty = parse_difficulty(parse_string(record, "difficulty", line), line);
  u.split = parse_split(parse_string(record, "split", line), line);

  const bool has_true = record.contains("true_label");
  const bool has_corrupted = record.contains("corrupted");
  if (mode == ReadMode::Strict) {
    if (!has_true) throw ParseError(line, "missing field \"true_label\"");
    if (!has_corrupted) throw ParseError(line, "missing field \"corrupted\"");
  }
  if (has_corrupted && !record.at("corrupted").is_boolean())
    throw ParseError(line, "corrupted must be a boolean");

  if (has_true) {
    u.true_label = parse_label(record, "true_label", line);
    u.corrupted = u.true_label != u.observed_label;
    if (has_corrupted && record.at("corrupted").get<bool>() != u.corrupted)
      throw IntegrityError("line " + std::to_string(line) + ": record \"" + u.id +
                           "\" has corrupted flag inconsistent with its labels");
  } else if (has_corrupted) {
    // Wild data may carry only a quality flag; the true label follows from it.
    u.corrupted = record.at("corrupted").get<bool>();
    u.true_label = u.corrupted ? flipped(u.observed_label) : u.observed_label;
  } else {
    u.true_label = u.observed_label;
    u.corrupted = false;
    u.annotated = false;
  }
  return u;
}

}  // namespace

std::vector<Utterance> parse_dataset(std::string_view contents, ReadMode mode) {
  std::vector<Utterance> out;
  std::set<std::string, std::less<>> ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < contents.size()) {
    auto end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    ++line_no;
    const std::string raw(contents.substr(start, end - start));
    start = end + 1;
    if (raw.empty()) throw ParseError(line_no, "empty line");
    auto u = parse_record(raw, line_no, mode);
    if (!ids.insert(u.id).second)
      throw IntegrityError("line " + std::to_string(line_no) + ": duplicate id \"" + u.id + "\"");
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Utterance> read_dataset(const std::filesystem::path& path, ReadMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), mode);
}

std::string render_dataset(const std::vector<Utterance>& data) {
  std::string out;
  for (const auto& u : data) {
    json record;
    record["id"] = u.id;
    record["user_id"] = u.user_id;
    record["text"] = u.text;
    if (u.annotated) record["true_label"] = as_int(u.true_label);
    record["observed_label"] = as_int(u.observed_label);
    record["difficulty"] = std::string(to_string(u.difficulty));
    if (u.annotated) record["corrupted"] = u.corrupted;
    record["split"] = std::string(to_string(u.split));
    out += record.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::vector<Utterance>& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write dataset " + path.string());
  out << render_dataset(data);
  if (!out) throw DataError("failed writing dataset " + path.string());
}

}  // namespace trollkit
