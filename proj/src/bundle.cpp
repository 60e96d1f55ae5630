#include "cavparse/bundle.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace cavparse::bundle {
namespace {

using nlohmann::json;

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::vector<unsigned char> to_le_bytes(const std::vector<double>& values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return bytes;
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

json array_block(const std::vector<double>& values) {
  return json{{"dtype", "f64le"},
              {"count", values.size()},
              {"crc32", hex32(crc32_of(values))},
              {"data", encode_f64(values)}};
}

std::vector<double> read_block(const json& j, const std::string& name) {
  if (!j.is_object() || j.value("dtype", "") != "f64le") {
    throw FormatError("bundle: array '" + name + "' is not an f64le block");
  }
  const auto count = j.at("count").get<std::size_t>();
  std::vector<double> values;
  try {
    values = decode_f64(j.at("data").get<std::string>(), count);
  } catch (const FormatError& e) {
    throw FormatError("bundle: array '" + name + "': " + e.what());
  }
  const std::string expected = j.at("crc32").get<std::string>();
  const std::string actual = hex32(crc32_of(values));
  if (expected != actual) {
    throw FormatError("bundle: checksum failure in array '" + name + "' (stored " + expected + ", computed " +
                      actual + ")");
  }
  return values;
}

json train_config_json(const visual::TrainConfig& c) {
  return json{{"learning_rate", array_block({c.learning_rate})},
              {"epochs", c.epochs},
              {"l2", array_block({c.l2})},
              {"batch_size", c.batch_size},
              {"decay_factor", array_block({c.decay_factor})},
              {"decay_every", c.decay_every},
              {"hidden", c.hidden},
              {"seed", std::to_string(c.seed)}};
}

double scalar_block(const json& j, const std::string& name) {
  const auto v = read_block(j, name);
  if (v.size() != 1) throw FormatError("bundle: '" + name + "' must hold one value");
  return v[0];
}

visual::TrainConfig train_config_from(const json& j) {
  visual::TrainConfig c;
  c.learning_rate = scalar_block(j.at("learning_rate"), "learning_rate");
  c.epochs = j.at("epochs").get<int>();
  c.l2 = scalar_block(j.at("l2"), "l2");
  c.batch_size = j.at("batch_size").get<int>();
  c.decay_factor = scalar_block(j.at("decay_factor"), "decay_factor");
  c.decay_every = j.at("decay_every").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.seed = std::stoull(j.at("seed").get<std::string>());
  return c;
}

std::vector<double> history_column(const std::vector<ganet::GenerationStats>& h, int which) {
  std::vector<double> out;
  out.reserve(h.size());
  for (const auto& g : h) out.push_back(which == 0 ? g.best : g.mean);
  return out;
}

}  // namespace

bool operator==(const superpixel::SlicParams& a, const superpixel::SlicParams& b) {
  return a.target_count == b.target_count && std::bit_cast<std::uint64_t>(a.compactness) ==
                                                 std::bit_cast<std::uint64_t>(b.compactness) &&
         a.iterations == b.iterations && a.seed == b.seed;
}

bool operator==(const ModelBundle& a, const ModelBundle& b) {
  auto same_history = [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].generation != y[i].generation || x[i].best != y[i].best || x[i].mean != y[i].mean) return false;
    }
    return true;
  };
  return a.class_count == b.class_count && a.class_names == b.class_names && a.palette == b.palette &&
         a.slic == b.slic && a.grid_side == b.grid_side && a.feature_set == b.feature_set &&
         a.classifier == b.classifier && a.ocp == b.ocp && a.integration == b.integration &&
         same_history(a.ga_history, b.ga_history) && a.provenance == b.provenance;
}

void validate(const ModelBundle& b) {
  if (b.class_count < 1 || b.class_count >= kIgnore) throw InvalidInput("bundle: invalid class count");
  if (static_cast<int>(b.class_names.size()) != b.class_count || static_cast<int>(b.palette.size()) != b.class_count) {
    throw InvalidInput("bundle: class names / palette do not match class count");
  }
  visual::validate(b.classifier);
  context::validate(b.ocp);
  fusion::validate(b.integration);
  if (b.classifier.class_count != b.class_count || b.ocp.class_count != b.class_count ||
      b.integration.class_count != b.class_count) {
    throw InvalidInput("bundle: components disagree on class count");
  }
  if (b.ocp.grid_side != b.grid_side) throw InvalidInput("bundle: OCP grid side differs from bundle grid side");
}

std::uint32_t crc32_of(const std::vector<double>& values) {
  const auto bytes = to_le_bytes(values);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string encode_f64(const std::vector<double>& values) {
  const auto bytes = to_le_bytes(values);
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<double> decode_f64(const std::string& text, std::size_t expected_count) {
  if (text.size() % 4 != 0) throw FormatError("base-64 length not a multiple of 4");
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw FormatError("base-64 padding in the middle of a quartet");
      v[k] = value(c);
      if (v[k] < 0) throw FormatError("invalid base-64 character at offset " + std::to_string(i + k));
    }
    const std::uint32_t word = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    bytes.push_back(static_cast<unsigned char>(word >> 16));
    if (pad < 2) bytes.push_back(static_cast<unsigned char>(word >> 8));
    if (pad < 1) bytes.push_back(static_cast<unsigned char>(word));
  }
  if (bytes.size() != expected_count * 8) {
    throw FormatError("decoded " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(expected_count * 8));
  }
  std::vector<double> values(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

std::string serialize(const ModelBundle& b) {
  validate(b);
  json palette = json::array();
  for (const Rgb& c : b.palette) palette.push_back({c.r, c.g, c.b});
  const auto& cl = b.classifier;
  const auto& ocp = b.ocp;
  const auto& net = b.integration;
  std::vector<double> generations;
  for (const auto& g : b.ga_history) generations.push_back(g.generation);
  json doc = {
      {"format", kMagic},
      {"version", kFormatVersion},
      {"class_count", b.class_count},
      {"class_names", b.class_names},
      {"palette", palette},
      {"superpixel",
       {{"target_count", b.slic.target_count},
        {"compactness", array_block({b.slic.compactness})},
        {"iterations", b.slic.iterations},
        {"seed", std::to_string(b.slic.seed)}}},
      {"grid_side", b.grid_side},
      {"feature_set", b.feature_set},
      {"classifier",
       {{"class_count", cl.class_count},
        {"feature_dim", cl.feature_dim},
        {"hidden", cl.hidden},
        {"feature_mean", array_block(cl.feature_mean)},
        {"feature_scale", array_block(cl.feature_scale)},
        {"weights", array_block(cl.weights)},
        {"bias", array_block(cl.bias)},
        {"hidden_weights", array_block(cl.hidden_weights)},
        {"hidden_bias", array_block(cl.hidden_bias)},
        {"trained_with", train_config_json(cl.trained_with)}}},
      {"ocp",
       {{"class_count", ocp.class_count},
        {"grid_side", ocp.grid_side},
        {"smoothing_alpha", array_block({ocp.smoothing_alpha})},
        {"local", array_block(ocp.local)},
        {"global", array_block(ocp.global)},
        {"block_prior", array_block(ocp.block_prior)}}},
      {"integration",
       {{"class_count", net.class_count},
        {"hidden", net.hidden},
        {"mode", fusion::to_string(net.mode)},
        {"input_weights", array_block(net.input_weights)},
        {"input_bias", array_block(net.input_bias)},
        {"output_weights", array_block(net.output_weights)},
        {"output_bias", array_block(net.output_bias)}}},
      {"ga_history",
       {{"generation", array_block(generations)},
        {"best", array_block(history_column(b.ga_history, 0))},
        {"mean", array_block(history_column(b.ga_history, 1))}}},
      {"provenance", b.provenance},
  };
  return std::string(kMagic) + " " + std::to_string(kFormatVersion) + "\n" + doc.dump(1) + "\n";
}

ModelBundle deserialize(const std::string& text) {
  const std::size_t eol = text.find('\n');
  if (eol == std::string::npos) throw FormatError("bundle: missing header line (truncated at offset 0)");
  const std::string header = text.substr(0, eol);
  const std::string magic = std::string(kMagic) + " ";
  if (header.rfind(magic, 0) != 0) throw FormatError("bundle: not a cavparse bundle (bad header)");
  int version = 0;
  try {
    version = std::stoi(header.substr(magic.size()));
  } catch (const std::exception&) {
    throw FormatError("bundle: unreadable version in header '" + header + "'");
  }
  if (version != kFormatVersion) {
    throw FormatError("bundle: format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kFormatVersion) + ")");
  }
  json doc;
  try {
    doc = json::parse(text.begin() + static_cast<std::ptrdiff_t>(eol + 1), text.end());
  } catch (const json::parse_error& e) {
    throw FormatError("bundle: parse error at byte offset " + std::to_string(eol + 1 + e.byte) + ": " + e.what());
  }
  try {
    if (doc.at("version").get<int>() != version) throw FormatError("bundle: header and body versions differ");
    ModelBundle b;
    b.class_count = doc.at("class_count").get<int>();
    b.class_names = doc.at("class_names").get<std::vector<std::string>>();
    for (const auto& c : doc.at("palette")) {
      b.palette.push_back(Rgb{c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()});
    }
    const auto& sp = doc.at("superpixel");
    b.slic.target_count = sp.at("target_count").get<int>();
    b.slic.compactness = scalar_block(sp.at("compactness"), "compactness");
    b.slic.iterations = sp.at("iterations").get<int>();
    b.slic.seed = std::stoull(sp.at("seed").get<std::string>());
    b.grid_side = doc.at("grid_side").get<int>();
    b.feature_set = doc.at("feature_set").get<std::string>();

    const auto& cl = doc.at("classifier");
    b.classifier.class_count = cl.at("class_count").get<int>();
    b.classifier.feature_dim = cl.at("feature_dim").get<int>();
    b.classifier.hidden = cl.at("hidden").get<int>();
    b.classifier.feature_mean = read_block(cl.at("feature_mean"), "feature_mean");
    b.classifier.feature_scale = read_block(cl.at("feature_scale"), "feature_scale");
    b.classifier.weights = read_block(cl.at("weights"), "weights");
    b.classifier.bias = read_block(cl.at("bias"), "bias");
    b.classifier.hidden_weights = read_block(cl.at("hidden_weights"), "hidden_weights");
    b.classifier.hidden_bias = read_block(cl.at("hidden_bias"), "hidden_bias");
    b.classifier.trained_with = train_config_from(cl.at("trained_with"));

    const auto& ocp = doc.at("ocp");
    b.ocp.class_count = ocp.at("class_count").get<int>();
    b.ocp.grid_side = ocp.at("grid_side").get<int>();
    b.ocp.smoothing_alpha = scalar_block(ocp.at("smoothing_alpha"), "smoothing_alpha");
    b.ocp.local = read_block(ocp.at("local"), "local");
    b.ocp.global = read_block(ocp.at("global"), "global");
    b.ocp.block_prior = read_block(ocp.at("block_prior"), "block_prior");

    const auto& net = doc.at("integration");
    b.integration.class_count = net.at("class_count").get<int>();
    b.integration.hidden = net.at("hidden").get<int>();
    b.integration.mode = fusion::input_mode_from_string(net.at("mode").get<std::string>());
    b.integration.input_weights = read_block(net.at("input_weights"), "input_weights");
    b.integration.input_bias = read_block(net.at("input_bias"), "input_bias");
    b.integration.output_weights = read_block(net.at("output_weights"), "output_weights");
    b.integration.output_bias = read_block(net.at("output_bias"), "output_bias");

    const auto& hist = doc.at("ga_history");
    const auto gens = read_block(hist.at("generation"), "generation");
    const auto best = read_block(hist.at("best"), "best");
    const auto mean = read_block(hist.at("mean"), "mean");
    if (gens.size() != best.size() || gens.size() != mean.size()) {
      throw FormatError("bundle: GA history columns differ in length");
    }
    for (std::size_t i = 0; i < gens.size(); ++i) {
      b.ga_history.push_back({static_cast<int>(gens[i]), best[i], mean[i]});
    }
    b.provenance = doc.at("provenance").get<std::map<std::string, std::string>>();
    validate(b);
    return b;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bundle: malformed document: ") + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("bundle: inconsistent contents: ") + e.what());
  }
}

void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  const std::string text = serialize(b);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw FormatError("'" + path.string() + "': write failed");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open bundle '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize(buffer.str());
}

}  // namespace cavparse::bundle
