#include "mcfse/cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcfse/analysis.hpp"
#include "mcfse/config.hpp"
#include "mcfse/equalize.hpp"
#include "mcfse/validate.hpp"

namespace mcfse {

using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::string schemes;
  std::string a_values;
  std::optional<std::uint64_t> bits;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> eta;
  std::string output;
  std::string format = "csv";
  bool analytical = false;
  bool corrupt_gamma = false;
  std::uint64_t windows = ValidateOptions{}.windows;
  int trials = ValidateOptions{}.viterbi_trials;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--scheme", o.schemes, "Scheme name(s), comma separated, or 'all'");
  cmd->add_option("--A", o.a_values, "Released molecules: LIST (a,b,c) or RANGE (start:step:stop)");
  cmd->add_option("--bits", o.bits, "Transmitted bits per A value");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--eta", o.eta, "Expected external count per sample");
  cmd->add_option("--output", o.output, "Write results here instead of stdout");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

// Defaults < config file < flags.
ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg = default_config();
  if (!o.config_path.empty()) cfg = load_config_file(o.config_path, cfg);
  if (!o.schemes.empty()) cfg.schemes = parse_scheme_list(o.schemes);
  if (!o.a_values.empty()) cfg.molecules = parse_a_values(o.a_values);
  if (o.bits) cfg.target_bits = *o.bits;
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.eta) cfg.channel.eta = *o.eta;
  if (cfg.molecules.empty()) throw ConfigError("experiment.A: at least one value is required");
  cfg.channel.molecules = cfg.molecules.front();
  cfg.validate();
  return cfg;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      stream_ = &fallback;
    } else {
      file_.open(path);
      if (!file_) throw ConfigError(path + ": cannot open output file");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

void echo_manifest(const ExperimentConfig& cfg, const Options& o, std::ostream& err) {
  const json manifest = to_manifest_json(make_manifest(cfg));
  err << "manifest " << manifest.dump() << "\n";
  if (!o.output.empty()) {
    std::ofstream file(o.output + ".manifest.json");
    if (!file) throw ConfigError(o.output + ".manifest.json: cannot open for writing");
    file << manifest.dump(2) << "\n";
  }
}

int cmd_cir(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  const CirTable cir = build_cir_table(cfg.channel);
  Sink sink(o.output, out);
  auto& s = sink.get();
  if (o.format == "json") {
    json rows = json::array();
    for (int l = 0; l < cir.memory(); ++l)
      for (int m = 0; m < cir.samples(); ++m)
        rows.push_back({{"l", l + 1}, {"m", m + 1}, {"T_lm_seconds", cir.elapsed(l, m)}, {"h_lm", cir.h(l, m)}});
    s << json{{"t_peak_s", cir.t_peak},      {"T_b_s", cir.symbol_time}, {"dt_s", cir.sample_interval},
              {"eta", cfg.channel.eta},      {"A", cfg.channel.molecules}, {"table", rows}}
             .dump(2)
      << "\n";
    return kExitOk;
  }
  s << "# t_peak_s=" << num(cir.t_peak) << "\n";
  s << "# T_b_s=" << num(cir.symbol_time) << "\n";
  s << "# dt_s=" << num(cir.sample_interval) << "\n";
  s << "# eta=" << num(cfg.channel.eta) << "\n";
  s << "# A=" << num(cfg.channel.molecules) << "\n";
  s << "l,m,T_lm_seconds,h_lm\n";
  for (int l = 0; l < cir.memory(); ++l)
    for (int m = 0; m < cir.samples(); ++m)
      s << l + 1 << "," << m + 1 << "," << num(cir.elapsed(l, m)) << "," << num(cir.h(l, m)) << "\n";
  return kExitOk;
}

json window_json(const SampleIndexMap& map) {
  return {{"kind", map.kind == WindowKind::Centered ? "centered" : "causal"},
          {"first_symbol_offset", map.symbol_offset(0)},
          {"last_symbol_offset", map.symbol_offset(map.rows() - 1)},
          {"rows", map.rows()},
          {"samples", map.samples},
          {"order", "row-major: element i is sample i % samples of row i / samples"}};
}

int cmd_design(const ExperimentConfig& cfg, const Options& o, std::ostream& out, std::ostream& err) {
  if (cfg.schemes.size() != 1) throw ConfigError("design needs exactly one scheme");
  const Scheme scheme = cfg.schemes.front();
  const CirTable cir = build_cir_table(cfg.channel);
  const double eta = cfg.channel.eta;
  const auto& rx = cfg.receiver;
  json doc{{"scheme", scheme_name(scheme)}, {"A", cfg.channel.molecules}, {"eta", eta}};
  switch (scheme) {
    case Scheme::LinearFse:
    case Scheme::SymbolRate: {
      const LinearTaps t = scheme == Scheme::LinearFse ? design_linear_fse(cir, eta, rx.half_window)
                                                       : design_symbol_rate_eq(cir, eta, rx.half_window);
      doc["b"] = std::vector<double>(t.b.data(), t.b.data() + t.b.size());
      doc["a"] = json::array();
      doc["b_c"] = t.b_c;
      doc["window"] = window_json(t.map);
      if (scheme == Scheme::SymbolRate) doc["window"]["sample_column"] = cir.peak_sample() + 1;
      doc["mmse"] = t.mse;
      doc["condition"] = t.condition;
      break;
    }
    case Scheme::Dfe: {
      const DfeTaps t = design_dfe(cir, eta, rx.ff_lookahead, rx.fb_taps);
      doc["b"] = std::vector<double>(t.b.data(), t.b.data() + t.b.size());
      doc["a"] = std::vector<double>(t.a.data(), t.a.data() + t.a.size());
      doc["b_c"] = t.b_c;
      doc["window"] = window_json(t.map);
      doc["mmse"] = t.mse;
      doc["condition"] = t.condition;
      break;
    }
    case Scheme::MatchedFilter: {
      std::vector<double> b(static_cast<std::size_t>(cir.samples()));
      for (int m = 0; m < cir.samples(); ++m) b[static_cast<std::size_t>(m)] = cir.h(0, m);
      doc["b"] = b;
      doc["a"] = json::array();
      doc["b_c"] = 0.0;
      doc["window"] = window_json(SampleIndexMap::causal(0, cir.samples()));
      doc["mmse"] = nullptr;
      doc["threshold"] = matched_filter_threshold(cir, eta);
      break;
    }
    case Scheme::Mlsd:
    case Scheme::Dfsd:
      err << "error: " << scheme_name(scheme) << " has no equalizer taps to design\n";
      return kExitUsage;
  }
  Sink sink(o.output, out);
  sink.get() << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_ber(const ExperimentConfig& cfg, const Options& o, std::ostream& out, std::ostream& err) {
  const auto reports = run_sweep(cfg);

  struct Analytical {
    Scheme scheme;
    double molecules;
    double ber;
  };
  std::vector<Analytical> analytical;
  bool failed = false;
  if (o.analytical) {
    for (double a : cfg.molecules) {
      ChannelParams p = cfg.channel;
      p.molecules = a;
      const CirTable cir = build_cir_table(p);
      for (Scheme s : cfg.schemes) {
        if (!is_linear(s)) continue;
        try {
          const CirTable& used = s == Scheme::LinearFse ? cir : symbol_rate_slice(cir);
          const double ber =
              analytical_ber_linear(used, p.eta, cfg.receiver.half_window, cfg.receiver.threshold).ber;
          analytical.push_back({s, a, ber});
        } catch (const std::exception& e) {
          err << "error: " << scheme_name(s) << ":analytical at A=" << num(a) << ": " << e.what() << "\n";
          failed = true;
        }
      }
    }
  }

  for (const auto& r : reports) {
    if (!r.ok()) {
      err << "error: " << scheme_name(r.scheme) << " at A=" << num(r.molecules) << ": " << r.failure << "\n";
      failed = true;
    }
  }

  Sink sink(o.output, out);
  auto& s = sink.get();
  if (o.format == "json") {
    json rows = json::array();
    for (const auto& r : reports) {
      if (!r.ok()) continue;
      rows.push_back({{"scheme", scheme_name(r.scheme)},
                      {"A", r.molecules},
                      {"bits", r.bits},
                      {"errors", r.errors},
                      {"ber", r.ber},
                      {"ci_low", r.ci_low},
                      {"ci_high", r.ci_high},
                      {"seed", r.seed},
                      {"wall_time_s", r.wall_time_s}});
    }
    for (const auto& a : analytical)
      rows.push_back({{"scheme", std::string(scheme_name(a.scheme)) + ":analytical"}, {"A", a.molecules}, {"ber", a.ber}});
    s << rows.dump(2) << "\n";
  } else {
    s << "scheme,A,bits,errors,ber,ci_low,ci_high,seed\n";
    for (const auto& r : reports) {
      if (!r.ok()) continue;
      s << scheme_name(r.scheme) << "," << num(r.molecules) << "," << r.bits << "," << r.errors << ","
        << num(r.ber) << "," << num(r.ci_low) << "," << num(r.ci_high) << "," << r.seed << "\n";
    }
    // Analytical rows carry only the BER.
    for (const auto& a : analytical)
      s << scheme_name(a.scheme) << ":analytical," << num(a.molecules) << ",,," << num(a.ber) << ",,,\n";
  }
  return failed ? kExitNumerical : kExitOk;
}

int cmd_validate(const ExperimentConfig& cfg, const Options& o, std::ostream& out) {
  ValidateOptions vo;
  vo.seed = cfg.seed;
  vo.windows = o.windows;
  vo.viterbi_trials = o.trials;
  vo.corrupt_gamma = o.corrupt_gamma;
  const auto results = run_validation(cfg, vo);
  Sink sink(o.output, out);
  auto& s = sink.get();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    s << (r.passed ? "PASS " : "FAIL ") << r.name << " measured=" << num(r.measured)
      << " tolerance=" << num(r.tolerance);
    if (!r.detail.empty()) s << " (" << r.detail << ")";
    s << "\n";
  }
  s << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? kExitOk : kExitValidation;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Molecular-communication link simulator with MMSE equalizers and sequence detectors", "mcfse"};
  app.require_subcommand(1);
  Options o;

  auto* cir = app.add_subcommand("cir", "Tabulate the sampled impulse response");
  auto* design = app.add_subcommand("design", "Design equalizer taps (JSON)");
  auto* ber = app.add_subcommand("ber", "Monte Carlo BER sweep (CSV)");
  auto* validate = app.add_subcommand("validate", "Run the oracle and property suite");
  for (auto* cmd : {cir, design, ber, validate}) add_common(cmd, o);
  ber->add_flag("--analytical", o.analytical, "Add Gaussian-approximation rows for linear schemes");
  validate->add_flag("--corrupt-gamma", o.corrupt_gamma, "Negative control: perturb the covariance matrix");
  validate->add_option("--windows", o.windows, "Simulated windows per oracle")->check(CLI::PositiveNumber);
  validate->add_option("--trials", o.trials, "Random frames for the trellis checks")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    ExperimentConfig cfg = resolve(o);
    echo_manifest(cfg, o, err);
    if (*cir) return cmd_cir(cfg, o, out);
    if (*design) return cmd_design(cfg, o, out, err);
    if (*ber) return cmd_ber(cfg, o, out, err);
    return cmd_validate(cfg, o, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConditioningError& e) {
    err << "error: " << e.what() << " (condition estimate " << num(e.condition()) << ")\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace mcfse
