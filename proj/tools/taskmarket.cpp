// taskmarket: command-line front end.
//
//   taskmarket sweep         --config FILE [--out-dir DIR]
//   taskmarket verify-prop1  [--config FILE] [--draws N] [--seed S] [--out-dir DIR]
//   taskmarket classify      --input FILE [--stub FILE] [--lexicon FILE] [--config FILE] [--out-dir DIR]
//   taskmarket metrics OP    --input FILE [options] [--out-dir DIR]
//   taskmarket panel generate --config FILE | --manifest FILE [--seed S] [--out-dir DIR]
//   taskmarket panel estimate --config FILE [--panel FILE] [--out-dir DIR]
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskmarket/io/config.hpp"
#include "taskmarket/io/csv.hpp"
#include "taskmarket/io/reports.hpp"
#include "taskmarket/taskmarket.hpp"

namespace fs = std::filesystem;
using namespace taskmarket;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240601;

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("TASKMARKET_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const std::string s(raw);
    if (s.front() == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(s, &used, 10);
    if (used != s.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("TASKMARKET_SEED: '" + std::string(raw) + "' is not a nonnegative integer");
  }
}

// --seed, then the config file, then TASKMARKET_SEED, then the built-in default.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const std::optional<std::uint64_t>& config) {
  if (flag) return *flag;
  if (config) return *config;
  if (auto env = env_seed()) return *env;
  return kDefaultSeed;
}

fs::path resolve_out_dir(const std::optional<std::string>& flag, const std::optional<io::RunConfig>& cfg) {
  if (flag) return *flag;
  if (cfg && cfg->output_dir) return *cfg->output_dir;
  return ".";
}

std::optional<io::RunConfig> maybe_load(const std::optional<std::string>& path) {
  if (!path) return std::nullopt;
  return io::load_run_config(*path);
}

template <class T>
const T& need(const std::optional<T>& section, const char* name) {
  if (!section) throw ConfigError(std::string(name) + ": required section missing");
  return *section;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  std::optional<std::string> out_dir;
};

int cmd_sweep(const SweepArgs& a) {
  const auto cfg = io::load_run_config(a.config);
  const auto& econ = need(cfg.economy, "economy");
  const auto& sweep = need(cfg.sweep, "sweep");
  const auto table = sweep_theta(econ, sweep.thetas, sweep.options);
  const fs::path out = resolve_out_dir(a.out_dir, cfg);
  io::write_file_atomic(out / "sweep.csv", io::sweep_csv(table));
  io::write_file_atomic(out / "sweep.svg", io::sweep_svg(table));
  std::cout << "wrote " << (out / "sweep.csv").string() << " and " << (out / "sweep.svg").string() << " ("
            << table.rows.size() << " theta values)\n";
  return 0;
}

struct Prop1Args {
  std::optional<std::string> config;
  std::optional<std::size_t> draws;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

int cmd_verify_prop1(const Prop1Args& a) {
  const auto cfg = maybe_load(a.config);
  io::Prop1Config p;
  if (cfg && cfg->prop1) p = *cfg->prop1;
  if (a.draws) p.draws = *a.draws;
  const std::uint64_t seed = resolve_seed(a.seed, p.seed);
  const auto report = verify_proposition1(p.draws, seed, p.options);
  const fs::path out = resolve_out_dir(a.out_dir, cfg);
  io::write_file_atomic(out / "prop1_report.csv", io::prop1_csv(report));
  if (report.kept == 0) std::cerr << "warning: no draw passed the regularity filter; nothing was checked\n";
  std::cout << "seed=" << seed << " draws=" << p.draws << " kept=" << report.kept << " passed=" << report.passed
            << " max_rel_error=" << io::format_number(report.max_rel_error) << "\n";
  return report.all_passed() ? 0 : 1;
}

struct ClassifyArgs {
  std::optional<std::string> input;
  std::optional<std::string> stub;
  std::optional<std::string> lexicon;
  std::optional<std::string> config;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> concurrency;
  std::optional<std::string> out_dir;
};

std::vector<std::string> read_titles(const fs::path& path) {
  const std::string text = io::read_file(path);
  if (path.extension() == ".csv") {
    const auto table = io::parse_csv(text);
    if (table.header.empty()) return {};
    const std::size_t col = table.column_index("title");
    std::vector<std::string> titles;
    for (const auto& row : table.rows) titles.push_back(row[col]);
    return titles;
  }
  std::vector<std::string> titles;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!normalize_title(line).empty()) titles.push_back(line);
    start = end + 1;
  }
  return titles;
}

int cmd_classify(const ClassifyArgs& a) {
  const auto cfg = maybe_load(a.config);
  io::ClassifierConfig cc;
  if (cfg && cfg->classifier) cc = *cfg->classifier;
  if (a.input) cc.input = *a.input;
  if (a.stub) cc.stub = *a.stub;
  if (a.lexicon) cc.lexicon = *a.lexicon;
  if (a.batch_size) cc.plan.batch_size = *a.batch_size;
  if (a.concurrency) cc.plan.max_concurrency = *a.concurrency;
  if (cc.plan.batch_size < 1 || cc.plan.max_concurrency < 1) {
    throw ConfigError("batch size and concurrency must be at least 1");
  }
  if (!cc.input) throw ConfigError("classify: --input is required");

  // Reserved for a live client; read so the variables are recognised, never printed.
  [[maybe_unused]] const char* endpoint = std::getenv("TASKMARKET_CLASSIFIER_ENDPOINT");
  [[maybe_unused]] const char* credential = std::getenv("TASKMARKET_CLASSIFIER_KEY");

  const auto titles = read_titles(*cc.input);
  const Lexicon lex = cc.lexicon ? io::read_lexicon(io::load_json(*cc.lexicon), "lexicon") : default_lexicon();
  const ScriptedClassifier ext = cc.stub ? ScriptedClassifier::from_file(cc.stub->string()) : ScriptedClassifier();
  const auto results = classify_batch(titles, ext, lex, cc.plan);

  const fs::path out = resolve_out_dir(a.out_dir, cfg);
  io::write_file_atomic(out / "classified.csv", io::classification_csv(results));
  std::map<ClassificationMethod, std::size_t> counts;
  for (const auto& r : results) ++counts[r.method];
  std::cerr << "classified " << results.size() << " titles: external=" << counts[ClassificationMethod::External]
            << " keyword=" << counts[ClassificationMethod::Keyword]
            << " unresolved=" << counts[ClassificationMethod::Unresolved] << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
  std::string op;
  std::string input;
  std::optional<std::string> config;
  std::optional<std::string> out_dir;
  std::string output = "metrics.csv";
  std::string column;
  std::vector<std::string> group{"city", "year"};
  std::string unit = "firm";
  std::string period = "year";
  std::int64_t lag = 1;
  std::optional<double> lower;
  std::optional<double> upper;
};

long long as_key(double v, const std::string& column, std::size_t row) {
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw ConfigError("column '" + column + "' row " + std::to_string(row + 1) + ": expected an integer key");
  }
  return static_cast<long long>(v);
}

int cmd_metrics(const MetricsArgs& a) {
  const auto cfg = maybe_load(a.config);
  io::MetricsConfig mc;
  if (cfg && cfg->metrics) mc = *cfg->metrics;
  if (a.lower) mc.winsor_lower = *a.lower;
  if (a.upper) mc.winsor_upper = *a.upper;

  const auto table = io::read_csv(a.input);
  const PanelDataset panel = io::panel_from_csv(table);
  const std::size_t n = panel.rows();
  std::vector<std::pair<std::string, std::vector<double>>> added;
  const double nan = std::nan("");
  auto need_column = [&](const std::string& c) -> const std::vector<double>& {
    if (c.empty()) throw ConfigError("metrics " + a.op + ": --column is required");
    return panel.column(c);
  };

  if (a.op == "task-scores") {
    std::vector<double> routine(n), abstract(n), manual(n);
    for (std::size_t r = 0; r < n; ++r) {
      std::map<OccupationKind, std::int64_t> counts;
      for (auto k : kAllOccupations) {
        const std::string name = "count_" + std::string(to_string(k));
        if (!panel.has_column(name)) continue;
        const double v = panel.column(name)[r];
        counts[k] = std::isnan(v) ? 0 : static_cast<std::int64_t>(as_key(v, name, r));
      }
      const auto s = task_scores(mc.loadings, counts);
      routine[r] = s.routine;
      abstract[r] = s.abstract;
      manual[r] = s.manual;
    }
    added = {{"routine", routine}, {"abstract", abstract}, {"manual", manual}};
  } else if (a.op == "hhi") {
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<double> shares;
      for (auto k : kAllOccupations) {
        const std::string name = "share_" + std::string(to_string(k));
        if (panel.has_column(name)) shares.push_back(panel.column(name)[r]);
      }
      if (shares.empty()) throw ConfigError("metrics hhi: no share_<occupation> columns in input");
      out[r] = hhi(shares);
    }
    added = {{"hhi", out}};
  } else if (a.op == "winsorize") {
    const auto& col = need_column(a.column);
    std::vector<double> present;
    for (double v : col) {
      if (!std::isnan(v)) present.push_back(v);
    }
    std::vector<double> out(n, nan);
    if (!present.empty()) {
      const auto w = winsorize(present, mc.winsor_lower, mc.winsor_upper);
      for (std::size_t r = 0, j = 0; r < n; ++r) {
        if (!std::isnan(col[r])) out[r] = w[j++];
      }
    }
    added = {{a.column + "_w", out}};
  } else if (a.op == "loo") {
    const auto& col = need_column(a.column);
    if (a.group.empty()) throw ConfigError("metrics loo: --group needs at least one column");
    std::vector<GroupedValue<std::vector<long long>, long long>> rows;
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<long long> key;
      for (const auto& g : a.group) key.push_back(as_key(panel.column(g)[r], g, r));
      rows.push_back({key, as_key(panel.column(a.unit)[r], a.unit, r), col[r]});
    }
    const auto loo = leave_one_out_mean(std::span<const GroupedValue<std::vector<long long>, long long>>(rows));
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = loo[r].value_or(nan);
    added = {{a.column + "_loo", out}};
  } else if (a.op == "lag") {
    const auto& col = need_column(a.column);
    std::vector<PeriodValue<long long>> rows;
    for (std::size_t r = 0; r < n; ++r) {
      rows.push_back({as_key(panel.column(a.unit)[r], a.unit, r), as_key(panel.column(a.period)[r], a.period, r),
                      col[r]});
    }
    const auto lagged = lag_series(std::span<const PeriodValue<long long>>(rows), a.lag);
    std::vector<double> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = lagged[r].value_or(nan);
    added = {{a.column + "_lag" + std::to_string(a.lag), out}};
  } else {
    throw ConfigError("metrics: unknown operation '" + a.op + "'");
  }

  io::CsvWriter w;
  auto header = table.header;
  for (const auto& [name, _] : added) header.push_back(name);
  w.row(header);
  for (std::size_t r = 0; r < n; ++r) {
    auto fields = table.rows[r];
    for (const auto& [_, values] : added) fields.push_back(io::format_number(values[r]));
    w.row(fields);
  }
  const fs::path out = resolve_out_dir(a.out_dir, cfg) / a.output;
  io::write_file_atomic(out, w.str());
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// panel

struct GenerateArgs {
  std::optional<std::string> config;
  std::optional<std::string> manifest;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

int cmd_panel_generate(const GenerateArgs& a) {
  if (a.config.has_value() == a.manifest.has_value()) {
    throw ConfigError("panel generate: give exactly one of --config or --manifest");
  }
  std::optional<io::RunConfig> cfg;
  SynthConfig synth;
  EconomyConfig econ;
  if (a.manifest) {
    const auto m = io::read_manifest(io::load_json(*a.manifest), "manifest");
    synth = m.synth;
    econ = m.economy;
    if (a.seed) synth.seed = *a.seed;
  } else {
    const auto json = io::load_json(*a.config);
    cfg = io::read_run_config(json, fs::path(*a.config).parent_path());
    synth = need(cfg->synth, "synth");
    econ = cfg->economy ? *cfg->economy : default_economy();
    const bool config_seed = json.at("synth").contains("seed");
    synth.seed = resolve_seed(a.seed, config_seed ? std::optional<std::uint64_t>(synth.seed) : std::nullopt);
  }
  const auto panel = generate_panel(synth, econ);
  const auto truth = compute_truth(synth, econ);
  const fs::path out = resolve_out_dir(a.out_dir, cfg);
  io::write_file_atomic(out / "panel.csv", io::panel_to_csv(panel));
  io::write_file_atomic(out / "manifest.json", io::manifest_to_json(synth, econ, truth, panel.rows()).dump(2) + "\n");
  std::cout << "wrote " << (out / "panel.csv").string() << " (" << panel.rows() << " rows, seed " << synth.seed
            << ") and manifest.json\n";
  return 0;
}

struct EstimateArgs {
  std::string config;
  std::optional<std::string> panel;
  std::optional<std::string> out_dir;
};

int cmd_panel_estimate(const EstimateArgs& a) {
  const auto cfg = io::load_run_config(a.config);
  const auto& est = need(cfg.estimation, "estimation");
  const fs::path out = resolve_out_dir(a.out_dir, cfg);
  fs::path panel_path = out / "panel.csv";
  if (a.panel) {
    panel_path = *a.panel;
  } else if (est.panel) {
    panel_path = *est.panel;
  }
  const PanelDataset panel = io::read_panel_csv(panel_path);
  for (const auto& spec : est.specs) spec.validate(panel);
  std::vector<EstimateResult> results;
  for (const auto& spec : est.specs) {
    results.push_back(estimate_spec(panel, spec));
    const auto& r = results.back();
    if (r.dropped_rows > 0) std::cerr << r.spec_name << ": dropped " << r.dropped_rows << " incomplete rows\n";
    if (r.weak_instrument) std::cerr << r.spec_name << ": weak instrument (first-stage F < 10)\n";
  }
  io::write_file_atomic(out / "results.csv", io::results_csv(results));
  for (const auto& r : results) {
    const auto& t = r.terms.front();
    std::cout << r.spec_name << " [" << r.estimator << "] " << t.name << " = " << io::format_number(t.coefficient)
              << significance_stars(t.p_value()) << " (" << io::format_number(t.se) << "), n=" << r.n << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task assignment between occupations and digital capital: model, measurement and estimation"};
  app.require_subcommand(1);

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Cutoffs, labor demand and hiring shares over a theta grid");
  s->add_option("--config", sweep.config, "JSON config with economy and sweep sections")->required();
  s->add_option("--out-dir", sweep.out_dir, "Output directory");

  Prop1Args prop1;
  auto* p = app.add_subcommand("verify-prop1", "Monte Carlo check that the cutoff falls as theta rises");
  p->add_option("--config", prop1.config, "JSON config with an optional prop1 section");
  p->add_option("--draws", prop1.draws, "Number of random instances");
  p->add_option("--seed", prop1.seed, "Seed (overrides config and TASKMARKET_SEED)");
  p->add_option("--out-dir", prop1.out_dir, "Output directory");

  ClassifyArgs classify;
  auto* c = app.add_subcommand("classify", "Classify job titles into the five functional categories");
  c->add_option("--input", classify.input, "Titles: one per line, or a .csv with a title column");
  c->add_option("--stub", classify.stub, "Scripted external responses, one line per batch");
  c->add_option("--lexicon", classify.lexicon, "Keyword lexicon JSON");
  c->add_option("--config", classify.config, "JSON config with a classifier section");
  c->add_option("--batch-size", classify.batch_size, "Titles per external batch (default 30)");
  c->add_option("--concurrency", classify.concurrency, "Concurrent batches (default 1)");
  c->add_option("--out-dir", classify.out_dir, "Output directory");

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "Task scores, HHI, winsorization and instrument construction on a CSV");
  m->add_option("op", metrics.op, "task-scores | hhi | winsorize | loo | lag")
      ->required()
      ->check(CLI::IsMember({"task-scores", "hhi", "winsorize", "loo", "lag"}));
  m->add_option("--input", metrics.input, "Input CSV")->required();
  m->add_option("--config", metrics.config, "JSON config with a metrics section");
  m->add_option("--column", metrics.column, "Value column (winsorize, loo, lag)");
  m->add_option("--group", metrics.group, "Grouping columns for loo (default city year)");
  m->add_option("--unit", metrics.unit, "Unit id column (default firm)");
  m->add_option("--period", metrics.period, "Period column for lag (default year)");
  m->add_option("--lag", metrics.lag, "Lag in periods (default 1)")->check(CLI::PositiveNumber);
  m->add_option("--lower", metrics.lower, "Lower winsorization percentile (default 0.01)");
  m->add_option("--upper", metrics.upper, "Upper winsorization percentile (default 0.99)");
  m->add_option("--output", metrics.output, "Output file name inside the output directory");
  m->add_option("--out-dir", metrics.out_dir, "Output directory");

  auto* panel = app.add_subcommand("panel", "Synthetic panel generation and estimation");
  panel->require_subcommand(1);
  GenerateArgs gen;
  auto* g = panel->add_subcommand("generate", "Write panel.csv and manifest.json");
  g->add_option("--config", gen.config, "JSON config with synth (and optional economy) sections");
  g->add_option("--manifest", gen.manifest, "Regenerate from a manifest.json");
  g->add_option("--seed", gen.seed, "Seed (overrides config and TASKMARKET_SEED)");
  g->add_option("--out-dir", gen.out_dir, "Output directory");
  EstimateArgs est;
  auto* e = panel->add_subcommand("estimate", "Estimate the configured specifications and write results.csv");
  e->add_option("--config", est.config, "JSON config with an estimation section")->required();
  e->add_option("--panel", est.panel, "Panel CSV (default: estimation.panel or <out-dir>/panel.csv)");
  e->add_option("--out-dir", est.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) return cmd_sweep(sweep);
    if (p->parsed()) return cmd_verify_prop1(prop1);
    if (c->parsed()) return cmd_classify(classify);
    if (m->parsed()) return cmd_metrics(metrics);
    if (g->parsed()) return cmd_panel_generate(gen);
    if (e->parsed()) return cmd_panel_estimate(est);
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
