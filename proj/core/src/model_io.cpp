#include <charconv>
#include <fstream>
#include <sstream>

#include "trollkit/error.hpp"
#include "trollkit/learner.hpp"

namespace trollkit {

namespace {

constexpr std::string_view kMagic = "trollkit-linear-model";
constexpr int kFormatVersion = 1;

std::string hex(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::hex);
  return std::string(buf, end);
}

double parse_hex(const std::string& s) {
  double x = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x, std::chars_format::hex);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw DataError("model artifact: bad number \"" + s + "\"");
  return x;
}

void expect(std::istream& in, std::string_view key) {
  std::string word;
  if (!(in >> word) || word != key)
    throw DataError("model artifact: expected \"" + std::string(key) + "\"");
}

}  // namespace

// Text format, one item per line; doubles are hex floats so the round trip
// is exact:
//   trollkit-linear-model 1
//   dimension <D>
//   ngram_orders <n> <o1> ... <on>
//   include_bias <0|1>
//   bias <w>
//   nonzero <m>
//   <index> <w>          (m lines, ascending index)
std::string serialize_model(const LinearModel& model) {
  std::ostringstream out;
  const auto& f = model.featurizer();
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "dimension " << f.dimension << '\n';
  out << "ngram_orders " << f.ngram_orders.size();
  for (int o : f.ngram_orders) out << ' ' << o;
  out << '\n';
  out << "include_bias " << (f.include_bias ? 1 : 0) << '\n';
  out << "bias " << hex(model.bias_weight()) << '\n';
  const auto w = model.weights();
  std::size_t nonzero = 0;
  for (double x : w) nonzero += x != 0.0;
  out << "nonzero " << nonzero << '\n';
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0.0) out << i << ' ' << hex(w[i]) << '\n';
  return out.str();
}

LinearModel deserialize_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic)
    throw DataError("not a trollkit model artifact");
  if (version != kFormatVersion)
    throw VersionError("unsupported model format version " + std::to_string(version));

  FeaturizerConfig f;
  expect(in, "dimension");
  in >> f.dimension;
  expect(in, "ngram_orders");
  std::size_t n_orders = 0;
  in >> n_orders;
  f.ngram_orders.resize(n_orders);
  for (auto& o : f.ngram_orders) in >> o;
  expect(in, "include_bias");
  int bias_flag = 0;
  in >> bias_flag;
  f.include_bias = bias_flag != 0;
  if (!in) throw DataError("model artifact: truncated header");
  try {
    f.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("model artifact: ") + e.what());
  }

  LinearModel model(f);
  std::string token;
  expect(in, "bias");
  in >> token;
  model.bias_ = parse_hex(token);
  expect(in, "nonzero");
  std::size_t nonzero = 0;
  in >> nonzero;
  for (std::size_t k = 0; k < nonzero; ++k) {
    std::size_t idx = 0;
    if (!(in >> idx >> token)) throw DataError("model artifact: truncated weights");
    if (idx >= f.dimension) throw DataError("model artifact: weight index out of range");
    model.weights_[idx] = parse_hex(token);
  }
  if (!model.is_finite()) throw DataError("model artifact: non-finite weights");
  return model;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model " + path.string());
  out << serialize_model(model);
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace trollkit
