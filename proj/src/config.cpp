#include "mcfse/config.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

namespace mcfse {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

double read_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::int64_t read_integer(const json& j, const std::string& path, std::int64_t lo, std::int64_t hi) {
  std::int64_t v = 0;
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(hi)) fail(path, "value out of range");
    v = static_cast<std::int64_t>(u);
  } else if (j.is_number_integer()) {
    v = j.get<std::int64_t>();
  } else if (j.is_number_float()) {
    // 1e7 is a natural way to write a bit count.
    const double d = j.get<double>();
    if (!(std::floor(d) == d) || std::abs(d) > 9.0e15) fail(path, "expected an integer");
    v = static_cast<std::int64_t>(d);
  } else {
    fail(path, "expected an integer");
  }
  if (v < lo || v > hi) fail(path, "value out of range");
  return v;
}

std::uint64_t read_unsigned(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  return static_cast<std::uint64_t>(read_integer(j, path, 0, std::numeric_limits<std::int64_t>::max()));
}

int read_int(const json& j, const std::string& path, int lo = std::numeric_limits<int>::min()) {
  return static_cast<int>(read_integer(j, path, lo, std::numeric_limits<int>::max()));
}

template <class Apply>
void for_each_key(const json& section, const std::string& path, Apply&& apply) {
  require_object(section, path);
  for (const auto& [key, value] : section.items()) {
    if (!apply(key, value, path + "." + key)) fail(path + "." + key, "unknown key");
  }
}

void read_channel(const json& j, ChannelParams& c) {
  for_each_key(j, "channel", [&](const std::string& key, const json& v, const std::string& path) {
    if (key == "diffusion") c.diffusion = read_double(v, path);
    else if (key == "distance") c.distance = read_double(v, path);
    else if (key == "rx_radius") c.rx_radius = read_double(v, path);
    else if (key == "flow_parallel") c.flow_parallel = read_double(v, path);
    else if (key == "flow_perpendicular") c.flow_perpendicular = read_double(v, path);
    else if (key == "eta") c.eta = read_double(v, path);
    else if (key == "samples_per_symbol") c.samples_per_symbol = read_int(v, path);
    else if (key == "memory") c.memory = read_int(v, path);
    else if (key == "beta") c.beta = read_double(v, path);
    else if (key == "frame_length") c.frame_length = read_int(v, path);
    else return false;
    return true;
  });
}

void read_receiver(const json& j, SchemeParams& r) {
  for_each_key(j, "receiver", [&](const std::string& key, const json& v, const std::string& path) {
    if (key == "half_window") r.half_window = read_int(v, path);
    else if (key == "ff_lookahead") r.ff_lookahead = read_int(v, path);
    else if (key == "fb_taps") r.fb_taps = read_int(v, path);
    else if (key == "lambda") r.lambda = read_int(v, path);
    else if (key == "threshold") r.threshold = read_double(v, path);
    else return false;
    return true;
  });
}

std::vector<Scheme> read_schemes(const json& v, const std::string& path) {
  if (v.is_string()) {
    try {
      return parse_scheme_list(v.get<std::string>());
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }
  if (!v.is_array()) fail(path, "expected a list of scheme names");
  std::vector<Scheme> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto item = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_string()) fail(item, "expected a scheme name");
    const auto s = parse_scheme(v[i].get<std::string>());
    if (!s) fail(item, "unknown scheme '" + v[i].get<std::string>() + "'");
    out.push_back(*s);
  }
  return out;
}

std::vector<double> read_a_values(const json& v, const std::string& path) {
  if (v.is_string()) {
    try {
      return parse_a_values(v.get<std::string>());
    } catch (const ConfigError& e) {
      fail(path, e.what());
    }
  }
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) fail(path, "expected a list of numbers or a LIST|RANGE string");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(read_double(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void read_experiment(const json& j, ExperimentConfig& cfg) {
  for_each_key(j, "experiment", [&](const std::string& key, const json& v, const std::string& path) {
    if (key == "schemes") cfg.schemes = read_schemes(v, path);
    else if (key == "A") cfg.molecules = read_a_values(v, path);
    else if (key == "bits") cfg.target_bits = read_unsigned(v, path);
    else if (key == "seed") cfg.seed = read_unsigned(v, path);
    else if (key == "workers") cfg.workers = read_int(v, path);
    else return false;
    return true;
  });
}

double parse_number(std::string_view token) {
  const auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  token = trim(token);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
    throw ConfigError("'" + std::string(token) + "' is not a number");
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string_view artifact_version() { return "1.0.0"; }

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.channel = ChannelParams{};
  cfg.receiver = SchemeParams{};
  cfg.schemes = {Scheme::LinearFse};
  cfg.molecules = {1e4};
  cfg.target_bits = 10'000'000;
  cfg.seed = 1;
  cfg.workers = 1;
  return cfg;
}

ExperimentConfig config_from_json(const json& doc, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  require_object(doc, "config");
  for (const auto& [key, value] : doc.items()) {
    if (key == "channel") read_channel(value, cfg.channel);
    else if (key == "receiver") read_receiver(value, cfg.receiver);
    else if (key == "experiment") read_experiment(value, cfg);
    else if (key == "manifest") require_object(value, "manifest");
    else fail(key, "unknown section");
  }
  if (!cfg.molecules.empty()) cfg.channel.molecules = cfg.molecules.front();
  return cfg;
}

ExperimentConfig config_from_text(std::string_view text, const ExperimentConfig& base) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line and column.
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
  }
  return config_from_json(doc, base);
}

ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return config_from_text(text.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& c = cfg.channel;
  const auto& r = cfg.receiver;
  json schemes = json::array();
  for (Scheme s : cfg.schemes) schemes.push_back(std::string(scheme_name(s)));
  return json{
      {"channel",
       {{"diffusion", c.diffusion},
        {"distance", c.distance},
        {"rx_radius", c.rx_radius},
        {"flow_parallel", c.flow_parallel},
        {"flow_perpendicular", c.flow_perpendicular},
        {"eta", c.eta},
        {"samples_per_symbol", c.samples_per_symbol},
        {"memory", c.memory},
        {"beta", c.beta},
        {"frame_length", c.frame_length}}},
      {"receiver",
       {{"half_window", r.half_window},
        {"ff_lookahead", r.ff_lookahead},
        {"fb_taps", r.fb_taps},
        {"lambda", r.lambda},
        {"threshold", r.threshold}}},
      {"experiment",
       {{"schemes", schemes},
        {"A", cfg.molecules},
        {"bits", cfg.target_bits},
        {"seed", cfg.seed},
        {"workers", cfg.workers}}},
  };
}

std::vector<double> parse_a_values(std::string_view text) {
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("A range must be start:step:stop");
    const double start = parse_number(parts[0]);
    const double step = parse_number(parts[1]);
    const double stop = parse_number(parts[2]);
    if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("A range step must be positive");
    if (stop < start) throw ConfigError("A range stop is below start");
    const double span = (stop - start) / step;
    if (span > 1e6) throw ConfigError("A range has too many points");
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  for (auto token : split(text, ',')) out.push_back(parse_number(token));
  return out;
}

std::vector<Scheme> parse_scheme_list(std::string_view text) {
  if (text == "all") return all_schemes();
  std::vector<Scheme> out;
  for (auto token : split(text, ',')) {
    const auto s = parse_scheme(token);
    if (!s) throw ConfigError("unknown scheme '" + std::string(token) + "'");
    out.push_back(*s);
  }
  return out;
}

RunManifest make_manifest(const ExperimentConfig& config) {
  return RunManifest{std::string(artifact_version()), utc_now(), config.seed, config};
}

json to_manifest_json(const RunManifest& m) {
  json doc = config_to_json(m.config);
  doc["manifest"] = {{"version", m.version}, {"timestamp", m.timestamp}, {"seed", m.seed}};
  return doc;
}

RunManifest manifest_from_json(const json& doc) {
  RunManifest m;
  m.config = config_from_json(doc, default_config());
  if (!doc.contains("manifest")) throw ConfigError("manifest: missing");
  const auto& block = doc.at("manifest");
  for_each_key(block, "manifest", [&](const std::string& key, const json& v, const std::string& path) {
    if (key == "version" || key == "timestamp") {
      if (!v.is_string()) fail(path, "expected a string");
      (key == "version" ? m.version : m.timestamp) = v.get<std::string>();
    } else if (key == "seed") {
      m.seed = read_unsigned(v, path);
    } else {
      return false;
    }
    return true;
  });
  return m;
}

}  // namespace mcfse
