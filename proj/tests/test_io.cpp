#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "taskmarket/io/config.hpp"
#include "taskmarket/io/csv.hpp"
#include "taskmarket/io/reports.hpp"
#include "taskmarket/io/svg.hpp"
#include "taskmarket/rng.hpp"

using namespace taskmarket;
using namespace taskmarket::io;

namespace {

template <class F>
std::string config_error(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "<no error>";
}

Json economy_json() {
  return parse_json(R"({
    "occupations": [{"kind": "prof", "lambda": {"manual": 1, "abstract": 1}, "wage": 1}],
    "digital": {"kappa_bar": 1, "theta": 4, "gamma": 2, "rental": 2}
  })",
                    "test");
}

}  // namespace

TEST(Csv, ParsesQuotingAndLineEnds) {
  const auto t = parse_csv("a,b,c\r\n1,\"x,y\",\"say \"\"hi\"\"\"\n2,\"two\nlines\",\r\n");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x,y");
  EXPECT_EQ(t.rows[0][2], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "two\nlines");
  EXPECT_EQ(t.rows[1][2], "");
  EXPECT_EQ(t.column_index("c"), 2u);
  EXPECT_THROW(t.column_index("d"), UnknownColumnError);
  EXPECT_TRUE(parse_csv("").header.empty());
  EXPECT_EQ(parse_csv("a,b").rows.size(), 0u);
}

TEST(Csv, Errors) {
  EXPECT_THROW(parse_csv("a,b\n1\n"), CsvError);
  EXPECT_THROW(parse_csv("a\n\"open\n"), CsvError);
  EXPECT_THROW(parse_csv("a\nx\"y\n"), CsvError);
  EXPECT_THROW(parse_csv("a\n\"x\"y\n"), CsvError);
  EXPECT_THROW(parse_number("1.5x", "ctx"), CsvError);
  EXPECT_TRUE(std::isnan(parse_number("", "ctx")));
}

TEST(Csv, WriterRoundTrip) {
  Rng rng(8);
  const std::string alphabet = "ab,\"\n\r x";
  std::vector<std::vector<std::string>> rows;
  for (int r = 0; r < 200; ++r) {
    std::vector<std::string> row;
    for (int c = 0; c < 3; ++c) {
      std::string f;
      const auto len = rng.below(6);
      for (std::uint64_t i = 0; i < len; ++i) f += alphabet[rng.below(alphabet.size())];
      row.push_back(f);
    }
    rows.push_back(row);
  }
  CsvWriter w;
  w.row({"h1", "h2", "h3"});
  for (const auto& r : rows) w.row(r);
  const auto t = parse_csv(w.str());
  EXPECT_EQ(t.rows, rows);
  EXPECT_EQ(quote_field("plain"), "plain");
  EXPECT_EQ(quote_field("a\"b"), "\"a\"\"b\"");
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(2015), "2015");
  EXPECT_EQ(format_number(std::nan("")), "");
  EXPECT_EQ(format_number(1e-20), "1e-20");
}

TEST(Csv, PanelRoundTripPreservesMissing) {
  PanelDataset p;
  p.add_column("firm", {1, 2, 3});
  p.add_column("x", {0.25, std::nan(""), -3.5});
  const auto text = panel_to_csv(p);
  EXPECT_EQ(text, "firm,x\r\n1,0.25\r\n2,\r\n3,-3.5\r\n");
  const auto q = panel_from_csv(parse_csv(text));
  EXPECT_EQ(q.names(), p.names());
  EXPECT_TRUE(std::isnan(q.column("x")[1]));
  EXPECT_EQ(q.column("x")[2], -3.5);
}

TEST(Csv, AtomicWriteReplacesTarget) {
  const auto dir = std::filesystem::temp_directory_path() / "taskmarket_io_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "nested" / "out.txt";
  write_file_atomic(path, "first");
  write_file_atomic(path, "second");
  EXPECT_EQ(read_file(path), "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(path.parent_path())) ++entries;
  EXPECT_EQ(entries, 1u);
  std::filesystem::remove_all(dir);
}

TEST(Config, EconomyRoundTrip) {
  const auto econ = read_economy(economy_json(), "economy");
  EXPECT_EQ(econ.occupations.size(), 1u);
  EXPECT_EQ(econ.occupations[0].lambda_r, 0.0);
  const auto again = read_economy(economy_to_json(econ), "economy");
  EXPECT_EQ(economy_to_json(again).dump(), economy_to_json(econ).dump());
}

TEST(Config, UnknownKeyNamesItsPath) {
  auto j = economy_json();
  j["occupations"][0]["lambda"]["cognitive"] = 1;
  EXPECT_EQ(config_error([&] { read_economy(j, "economy"); }), "economy.occupations[0].lambda.cognitive: unknown key");
  auto k = economy_json();
  k["extra"] = true;
  EXPECT_EQ(config_error([&] { read_economy(k, "economy"); }), "economy.extra: unknown key");
  const auto top = parse_json(R"({"economyy": {}})", "t");
  EXPECT_EQ(config_error([&] { read_run_config(top, "."); }), "economyy: unknown key");
}

TEST(Config, MissingAndMistypedFields) {
  auto j = economy_json();
  j["occupations"][0].erase("wage");
  EXPECT_EQ(config_error([&] { read_economy(j, "economy"); }), "economy.occupations[0].wage: required field missing");
  j = economy_json();
  j["digital"]["gamma"] = "two";
  EXPECT_EQ(config_error([&] { read_economy(j, "economy"); }), "economy.digital.gamma: expected a number");
  j = economy_json();
  j["occupations"][0]["kind"] = "clerk";
  EXPECT_NE(config_error([&] { read_economy(j, "economy"); }).find("unknown occupation"), std::string::npos);
  EXPECT_NE(config_error([] { parse_json("{", "broken.json"); }).find("broken.json: invalid JSON"), std::string::npos);
}

TEST(Config, SweepVariants) {
  const auto list = read_sweep(parse_json(R"({"theta": [1, 2, 3]})", "t"), "sweep");
  EXPECT_EQ(list.thetas, (std::vector<double>{1, 2, 3}));
  const auto range = read_sweep(parse_json(R"({"theta_min": 0, "theta_max": 1, "theta_count": 5})", "t"), "sweep");
  EXPECT_EQ(range.thetas, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  EXPECT_EQ(config_error([] { read_sweep(parse_json(R"({"theta": []})", "t"), "sweep"); }),
            "sweep.theta: theta list is empty");
  EXPECT_NE(config_error([] { read_sweep(parse_json(R"({"theta": [2, 1]})", "t"), "sweep"); }).find("sweep.theta[1]"),
            std::string::npos);
  EXPECT_NE(config_error([] { read_sweep(parse_json(R"({"theta": [-1]})", "t"), "sweep"); }).find("sweep.theta[0]"),
            std::string::npos);
  EXPECT_NE(config_error([] { read_sweep(parse_json(R"({})", "t"), "sweep"); }), "<no error>");
  EXPECT_NE(config_error([] { read_sweep(parse_json(R"({"theta": [1], "regularity": "loose"})", "t"), "sweep"); })
                .find("sweep.regularity"),
            std::string::npos);
}

TEST(Config, Prop1AndMetrics) {
  const auto p = read_prop1(parse_json(R"({"draws": 10, "seed": 3, "threads": 2})", "t"), "prop1");
  EXPECT_EQ(p.draws, 10u);
  EXPECT_EQ(*p.seed, 3u);
  EXPECT_EQ(p.options.threads, 2u);
  EXPECT_EQ(config_error([] { read_prop1(parse_json(R"({"draws": -1})", "t"), "prop1"); }),
            "prop1.draws: expected a nonnegative integer");

  const auto m = read_metrics(parse_json(R"({"loadings": {"aux": {"manual": 0.5}}, "winsor": {"lower": 0.05}})", "t"),
                              "metrics");
  EXPECT_EQ(m.loadings[OccupationKind::Aux].manual, 0.5);
  EXPECT_EQ(m.loadings[OccupationKind::Aux].routine, 1.0);
  EXPECT_EQ(m.winsor_lower, 0.05);
  EXPECT_NE(config_error([] { read_metrics(parse_json(R"({"winsor": {"lower": 0.9, "upper": 0.1}})", "t"), "metrics"); }),
            "<no error>");
}

TEST(Config, EstimationSpecs) {
  const auto j = parse_json(R"({"panel": "p.csv", "specs": [
      {"name": "a", "outcome": "y", "regressors": ["x"], "fe": ["firm"], "cluster": "firm"},
      {"name": "b", "outcome": "y", "regressors": ["x", "w"], "cluster": ["firm", "year"],
       "iv": {"endogenous": "x", "instruments": ["z"]}}]})",
                            "t");
  const auto cfg = read_estimation(j, "estimation", "/base");
  EXPECT_EQ(*cfg.panel, std::filesystem::path("/base/p.csv"));
  ASSERT_EQ(cfg.specs.size(), 2u);
  EXPECT_EQ(cfg.specs[0].cluster, std::vector<std::string>{"firm"});
  EXPECT_EQ(cfg.specs[1].cluster.size(), 2u);
  EXPECT_EQ(cfg.specs[1].iv->instruments, std::vector<std::string>{"z"});
  EXPECT_EQ(config_error([] { read_estimation(parse_json(R"({"specs": []})", "t"), "estimation", "."); }),
            "estimation.specs: expected a non-empty array");
  EXPECT_EQ(config_error([] {
              read_estimation(parse_json(R"({"specs": [{"name": "a", "outcome": "y"}]})", "t"), "estimation", ".");
            }),
            "estimation.specs[0].regressors: required field missing");
}

TEST(Config, SynthRoundTripAndManifestChecks) {
  SynthConfig cfg;
  cfg.n_firms = 17;
  cfg.theta.endogenous_loading = 0.25;
  cfg.share_mode = ShareMode::Linearized;
  cfg.seed = 99;
  const auto back = read_synth(synth_to_json(cfg), "synth");
  EXPECT_EQ(synth_to_json(back).dump(), synth_to_json(cfg).dump());

  const auto econ = default_economy();
  auto m = manifest_to_json(cfg, econ, compute_truth(cfg, econ), 10);
  EXPECT_EQ(m["generator"], "taskmarket-synthgen/1");
  EXPECT_EQ(m["rng"], "mt19937_64+u53+box_muller");
  m["seed"] = 100;
  EXPECT_EQ(config_error([&] { read_manifest(m, "manifest"); }), "manifest.seed: disagrees with synth.seed");
  m["seed"] = 99;
  m["generator"] = "other/2";
  EXPECT_NE(config_error([&] { read_manifest(m, "manifest"); }).find("manifest.generator"), std::string::npos);
}

TEST(Config, SamplesLoad) {
  const std::filesystem::path dir = TASKMARKET_SAMPLES_DIR;
  for (const char* name : {"constant_lambda.json", "five_occupations.json", "panel.json", "cutoff_sweep.json"}) {
    EXPECT_NO_THROW(load_run_config(dir / name)) << name;
  }
  const auto panel = load_run_config(dir / "panel.json");
  ASSERT_TRUE(panel.estimation.has_value());
  EXPECT_EQ(panel.estimation->specs.size(), 7u);
}

TEST(Svg, DeterministicAndTimestampFree) {
  LineChart c{"t <1>", "x", "y", {}};
  c.series.push_back({"a", {{0.0, 1.0}, {1.0, std::nullopt}, {2.0, 3.0}}});
  c.series.push_back({"b", {{0.0, 0.5}, {2.0, 0.5}}});
  const auto a = render_svg({c, c});
  EXPECT_EQ(a, render_svg({c, c}));
  EXPECT_EQ(a.rfind("<?xml", 0), 0u);
  EXPECT_NE(a.find("t &lt;1&gt;"), std::string::npos);
  for (const char* banned : {"date", "Date", "time", "Time", "created"}) {
    EXPECT_EQ(a.find(banned), std::string::npos) << banned;
  }
  EXPECT_EQ(a.substr(a.size() - 7), "</svg>\n");
}

TEST(Reports, SweepCsvLeavesAbsentCutoffsEmpty) {
  EconomyConfig econ;
  econ.occupations = {{OccupationKind::Prof, 1.0, 0.0, 1.0, 1.0}};
  econ.digital = {1.0, 4.0, 2.0, 2.0};
  SweepOptions opt;
  opt.cutoff.regularity = RegularityCheck::NonDecreasing;
  const auto table = sweep_theta(econ, {0.0, 4.0}, opt);
  const auto csv = sweep_csv(table);
  const auto t = parse_csv(csv);
  EXPECT_EQ(t.header, (std::vector<std::string>{"theta", "cutoff_prof", "mass_prof", "mass_digital", "share_prof"}));
  EXPECT_EQ(t.rows[0][1], "");
  EXPECT_EQ(t.rows[1][1].substr(0, 3), "0.5");
  EXPECT_EQ(sweep_svg(table), sweep_svg(table));
}
