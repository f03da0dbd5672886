#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "labelnoise/cli.hpp"
#include "labelnoise/config.hpp"
#include "labelnoise/csv.hpp"
#include "labelnoise/ingest.hpp"
#include "labelnoise/plot.hpp"
#include "labelnoise/sweep.hpp"

using namespace labelnoise;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("labelnoise-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 9999;
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "labelnoise");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

const char* kSmallSweep =
    "[experiment]\n"
    "id = small\n"
    "seed = 3\n"
    "n_train = 300\n"
    "n_test = 500\n"
    "seeds = 2\n"
    "[distribution]\n"
    "kind = mixture\n"
    "classes = 4\n"
    "[estimator]\n"
    "family = knn\n"
    "[channel]\n"
    "kind = symmetric\n"
    "alphas = [0, 0.3, 0.9]\n";

}  // namespace

TEST(Config, ParsesAllSections) {
  const auto cfg = parse(
      "# comment\n"
      "[experiment]\n"
      "id = sweep1\n"
      "seed = 18446744073709551615\n"
      "n_train = 2000\n"
      "n_test = 300\n"
      "seeds = 3\n"
      "jobs = 2\n"
      "mitigation = backward\n"
      "[distribution]\n"
      "kind = mixture\n"
      "classes = 3\n"
      "dim = 4\n"
      "radius = 2.5\n"
      "variance = 0.5\n"
      "priors = [0.2, 0.3, 0.5]\n"
      "[estimator]\n"
      "family = mlp\n"
      "hidden = [8, 4]\n"
      "learning_rate = 0.05\n"
      "batch_size = 32\n"
      "epochs = 2\n"
      "momentum = 0.9\n"
      "init_scale = 0.1\n"
      "[channel]\n"
      "kind = shift  # trailing comment\n"
      "alphas = [0, 0.2, 0.3, 0.45, 0.55, 0.6, 0.8]\n"
      "[consistency]\n"
      "n_grid = [100, 200]\n");
  const auto& s = cfg.spec;
  EXPECT_EQ(s.experiment_id, "sweep1");
  EXPECT_EQ(s.master_seed, 18446744073709551615ULL);
  EXPECT_EQ(s.n_train, 2000u);
  EXPECT_EQ(s.n_test, 300u);
  EXPECT_EQ(s.seeds, 3u);
  EXPECT_EQ(s.jobs, 2u);
  EXPECT_EQ(s.mitigation, Mitigation::Backward);
  const auto& g = std::get<GaussianMixtureDistribution>(s.source);
  EXPECT_EQ(g.classes(), 3u);
  EXPECT_EQ(g.dim(), 4u);
  EXPECT_DOUBLE_EQ(g.components()[2].prior, 0.5);
  EXPECT_EQ(s.estimator.family, EstimatorFamily::Mlp);
  EXPECT_EQ(s.estimator.mlp.hidden, (std::vector<std::size_t>{8, 4}));
  EXPECT_DOUBLE_EQ(*s.estimator.mlp.init_scale, 0.1);
  EXPECT_EQ(s.channel.kind, ChannelKind::Shift);
  EXPECT_EQ(s.channel.alphas.size(), 7u);
  EXPECT_EQ(s.n_grid, (std::vector<std::size_t>{100, 200}));
}

TEST(Config, Defaults) {
  const auto cfg = parse("[channel]\nalphas = [0.1]\n");
  EXPECT_EQ(cfg.spec.n_train, 1000u);
  EXPECT_EQ(cfg.spec.n_test, 10000u);
  EXPECT_EQ(cfg.spec.seeds, 5u);
  EXPECT_EQ(cfg.spec.estimator.family, EstimatorFamily::Knn);
  EXPECT_FALSE(cfg.spec.estimator.k_neighbors.has_value());
  EXPECT_EQ(std::get<GaussianMixtureDistribution>(cfg.spec.source).classes(), 10u);
  EXPECT_TRUE(cfg.output.empty());
}

TEST(Config, PaperSymmetricGridAcceptedVerbatim) {
  const auto cfg = parse(
      "[channel]\nalphas = [0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, "
      "0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1]\n");
  EXPECT_EQ(cfg.spec.channel.alphas.size(), 21u);
  EXPECT_EQ(cfg.spec.channel.alphas.back(), 1.0);
}

TEST(Config, LineNumberedErrors) {
  EXPECT_EQ(parse_error_line("[channel]\nalphas = [0.1]\nalphas = [0.2]\n"), 3u);
  EXPECT_EQ(parse_error_line("[channel]\nalphas = [0.1]\nbogus = 1\n"), 3u);
  EXPECT_EQ(parse_error_line("[nope]\n"), 1u);
  EXPECT_EQ(parse_error_line("[experiment]\nn_train = -5\n[channel]\nalphas = [0.1]\n"), 2u);
  EXPECT_EQ(parse_error_line("[channel]\nalphas = [0.1, 1.5]\n"), 2u);
  EXPECT_EQ(parse_error_line("[channel]\nalphas = 0.1\n"), 2u);
  EXPECT_EQ(parse_error_line("[channel]\nkind = symmetric\nalphas = [0.1]\nbeta = 0.2\n"), 4u);
  EXPECT_EQ(parse_error_line("[estimator]\nfamily = svm\n[channel]\nalphas = [0.1]\n"), 2u);
  EXPECT_EQ(parse_error_line("[experiment]\nmitigation = magic\n[channel]\nalphas = [0.1]\n"), 2u);
  EXPECT_EQ(parse_error_line("x = 1\n"), 1u);
  EXPECT_EQ(parse_error_line("[distribution]\nkind = mixture\n"), 0u);  // alphas missing
  EXPECT_EQ(parse_error_line("[distribution]\nkind = discrete\npath = /nonexistent/d.txt\n"
                             "[channel]\nalphas = [0.1]\n"),
            3u);
}

TEST(Config, ErrorMessagesNameTheField) {
  try {
    parse("[experiment]\nseeds = zero\n[channel]\nalphas = [0.1]\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("experiment.seeds"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Config, DiscreteAndDatasetSourcesRelativeToConfig) {
  TempDir dir;
  std::ostringstream dist;
  write_distribution(dist, random_discrete(3, 8, 1));
  write_file(dir / "d.txt", dist.str());
  write_file(dir / "data.txt", "4 2 1\n0.1 | 1\n0.2 | 2\n0.3 | 1\n0.4 | 2\n");
  write_file(dir / "a.cfg", "[distribution]\nkind = discrete\npath = d.txt\n[channel]\nalphas = [0.1]\n");
  write_file(dir / "b.cfg", "[distribution]\nkind = dataset\npath = data.txt\n[channel]\nalphas = [0.1]\n");
  EXPECT_EQ(std::get<DiscreteJointDistribution>(load_config(dir / "a.cfg").spec.source).classes(), 3u);
  EXPECT_EQ(std::get<Dataset>(load_config(dir / "b.cfg").spec.source).size(), 4u);
}

TEST(Config, ShippedConfigsParse) {
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(LABELNOISE_CONFIG_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 5u);
}

TEST(Csv, SplitAndEscape) {
  EXPECT_EQ(split_csv_line("a,\"b,c\",d", 1), (std::vector<std::string>{"a", "b,c", "d"}));
  EXPECT_EQ(split_csv_line("\"x\"\"y\",,", 1), (std::vector<std::string>{"x\"y", "", ""}));
  EXPECT_EQ(csv_escape("knn(k=3)"), "knn(k=3)");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  std::istringstream dup("a,b,a\n1,2,3\n");
  EXPECT_THROW(read_csv(dup), ValidationError);
  std::istringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(read_csv(ragged), ParseError);
}

TEST(Sweep, CsvSchemaExact) {
  std::ostringstream out;
  write_csv_header(out);
  EXPECT_EQ(out.str(),
            "experiment_id,seed,K,d,noise_kind,alpha,beta,n_train,estimator,mitigation,risk,risk_se,"
            "bayes_risk,excess_risk,l1_posterior_error,l2_posterior_error\n");
}

TEST(Sweep, RowCountOrderAndInvariants) {
  const auto spec = parse(kSmallSweep).spec;
  const auto rows = sweep_noise(spec);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const auto& r = rows[c];
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.alpha, spec.channel.alphas[c / 2]);
    EXPECT_EQ(*r.seed, derive_seed(3, c));
    EXPECT_GE(r.risk, 0.0);
    EXPECT_LE(r.risk, 1.0);
    EXPECT_NEAR(*r.excess_risk, r.risk - *r.bayes_risk, 1e-12);
    EXPECT_GE(*r.l1_posterior_error, 0.0);
    EXPECT_GE(*r.l2_posterior_error, 0.0);
    EXPECT_EQ(r.k, 4u);
    EXPECT_EQ(r.noise_kind, "symmetric");
  }
  EXPECT_NE(*rows[0].bayes_risk, *rows[1].bayes_risk);
}

TEST(Sweep, IndependentOfJobCount) {
  auto spec = parse(kSmallSweep).spec;
  std::ostringstream a, b;
  write_reports_csv(a, sweep_noise(spec));
  spec.jobs = 3;
  write_reports_csv(b, sweep_noise(spec));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Sweep, DiscreteSourceIsExact) {
  ExperimentSpec spec;
  spec.source = random_discrete(3, 20, 4);
  spec.estimator.family = EstimatorFamily::Oracle;
  spec.channel.alphas = {0.0, 0.5};
  spec.seeds = 1;
  const auto rows = sweep_noise(spec);
  const auto& d = std::get<DiscreteJointDistribution>(spec.source);
  for (const auto& r : rows) {
    EXPECT_EQ(r.risk_se, 0.0);
    EXPECT_EQ(*r.bayes_risk, bayes_risk_exact(d));
    EXPECT_NEAR(*r.excess_risk, 0.0, 1e-15);
    EXPECT_EQ(*r.l1_posterior_error, 0.0);
  }
}

TEST(Sweep, ShiftGridAndAsymmetricRows) {
  auto spec = parse(kSmallSweep).spec;
  spec.channel.kind = ChannelKind::Shift;
  spec.channel.alphas = {0, 0.2, 0.3, 0.45, 0.55, 0.6, 0.8};
  spec.seeds = 1;
  spec.n_test = 200;
  EXPECT_EQ(sweep_noise(spec).size(), 7u);

  ExperimentSpec bin;
  bin.source = circle_mixture(2);
  bin.channel = {ChannelKind::Asymmetric, {0.1}, 0.3};
  bin.seeds = 1;
  bin.n_train = 200;
  bin.n_test = 200;
  std::ostringstream out;
  write_reports_csv(out, sweep_noise(bin));
  EXPECT_NE(out.str().find(",asymmetric,0.1,0.3,"), std::string::npos) << out.str();
}

TEST(Sweep, FailedCellsMarkedAndOthersKept) {
  auto spec = parse(kSmallSweep).spec;
  spec.mitigation = Mitigation::KnownSymmetric;
  const auto rows = sweep_noise(spec);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_TRUE(rows[0].ok());
  EXPECT_TRUE(rows[3].ok());
  EXPECT_FALSE(rows[4].ok());  // 0.9 >= 3/4
  EXPECT_FALSE(rows[5].ok());
  std::ostringstream out;
  write_reports_csv(out, rows);
  std::istringstream in(out.str());
  const auto table = read_csv(in);
  EXPECT_EQ(table.rows[4][*table.column("risk")], "FAILED");
  EXPECT_EQ(table.rows[4][*table.column("alpha")], "0.9");
}

TEST(Sweep, DatasetSourceHasNoOracleColumns) {
  Rng rng(1);
  ExperimentSpec spec;
  spec.source = circle_mixture(3).sample(400, rng);
  spec.channel.alphas = {0.2};
  spec.seeds = 2;
  spec.n_train = 300;
  std::ostringstream out;
  write_reports_csv(out, sweep_noise(spec));
  std::istringstream in(out.str());
  const auto table = read_csv(in);
  ASSERT_EQ(table.rows.size(), 2u);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row[*table.column("bayes_risk")], "NA");
    EXPECT_EQ(row[*table.column("excess_risk")], "NA");
    EXPECT_EQ(row[*table.column("l1_posterior_error")], "NA");
    EXPECT_NE(row[*table.column("risk")], "NA");
  }
  spec.n_train = 400;
  EXPECT_FALSE(sweep_noise(spec)[0].ok());
}

TEST(Consistency, OracleSubjectHasZeroError) {
  auto spec = parse(kSmallSweep).spec;
  spec.estimator.family = EstimatorFamily::Oracle;
  spec.channel.alphas = {0.3};
  spec.n_grid = {100, 1000};
  for (const auto& r : consistency_trend(spec)) EXPECT_EQ(*r.l1_posterior_error, 0.0);
}

TEST(Consistency, KnnErrorShrinksAndAveragesLineUp) {
  auto spec = parse(kSmallSweep).spec;
  spec.channel.alphas = {0.3};
  spec.n_grid = {100, 3000};
  spec.seeds = 3;
  const auto cells = consistency_trend(spec);
  ASSERT_EQ(cells.size(), 6u);
  const auto means = average_over_seeds(cells, 3);
  ASSERT_EQ(means.size(), 2u);
  EXPECT_FALSE(means[0].seed.has_value());
  EXPECT_EQ(means[1].n_train, 3000u);
  EXPECT_NEAR(*means[0].l1_posterior_error,
              (*cells[0].l1_posterior_error + *cells[1].l1_posterior_error + *cells[2].l1_posterior_error) / 3,
              1e-12);
  EXPECT_LT(*means[1].l1_posterior_error, *means[0].l1_posterior_error);
}

TEST(Consistency, GridValidation) {
  auto spec = parse(kSmallSweep).spec;
  spec.n_grid = {100, 200};
  EXPECT_THROW(consistency_trend(spec), ValidationError);  // three alphas
  spec.channel.alphas = {0.3};
  spec.n_grid = {200, 100};
  EXPECT_THROW(consistency_trend(spec), ValidationError);
  spec.n_grid = {};
  EXPECT_THROW(consistency_trend(spec), ValidationError);
}

TEST(Plot, ReferenceLinesAndSeries) {
  auto spec = parse(kSmallSweep).spec;
  spec.source = circle_mixture(10);
  spec.seeds = 1;
  spec.n_test = 200;
  std::ostringstream csv;
  write_reports_csv(csv, sweep_noise(spec));
  const std::string svg = plot_csv(csv.str());
  EXPECT_NE(svg.find("(K-1)/K = 0.9000"), std::string::npos);
  EXPECT_NE(svg.find("1/(4(K-1)) = 0.0278"), std::string::npos);
  EXPECT_NE(svg.find("knn(k=sqrt-n) / symmetric / none"), std::string::npos);
  EXPECT_NE(svg.find("source-csv-fnv1a64: " + to_hex(fnv1a(csv.str()))), std::string::npos);
  EXPECT_EQ(svg, plot_csv(csv.str()));
}

TEST(Plot, AveragesSeedsAndSkipsFailures) {
  const std::string header =
      "experiment_id,seed,K,d,noise_kind,alpha,beta,n_train,estimator,mitigation,risk,risk_se,"
      "bayes_risk,excess_risk,l1_posterior_error,l2_posterior_error\n";
  std::istringstream in(header +
                        "e,1,3,2,symmetric,0,NA,10,knn,none,0.2,0,NA,NA,NA,NA\n"
                        "e,2,3,2,symmetric,0,NA,10,knn,none,0.4,0,NA,NA,NA,NA\n"
                        "e,mean,3,2,symmetric,0,NA,10,knn,none,0.9,0,NA,NA,NA,NA\n"
                        "e,3,3,2,symmetric,0.5,NA,10,knn,none,FAILED,NA,NA,NA,NA,NA\n");
  const auto data = collect_plot_data(read_csv(in));
  EXPECT_EQ(data.k, 3u);
  ASSERT_EQ(data.series.size(), 1u);
  ASSERT_EQ(data.series[0].points.size(), 1u);
  EXPECT_NEAR(data.series[0].points[0].second, 0.7, 1e-15);
}

TEST(Plot, SchemaDiagnostics) {
  try {
    plot_csv("experiment_id,seed,alpha\ne,1,0\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("risk"), std::string::npos);
  }
  EXPECT_THROW(plot_csv(""), ValidationError);
}

TEST(Ingest, ValidCsv) {
  std::string text = "x1,x2,label\n";
  for (int i = 0; i < 100; ++i) text += std::to_string(i) + "," + std::to_string(i * 0.5) + "," + std::to_string(1 + i % 2) + "\n";
  std::istringstream in(text);
  const auto d = ingest_csv(in, "label");
  EXPECT_EQ(d.size(), 100u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.classes(), 2u);
  EXPECT_EQ(d.labels()[1], 1u);
}

TEST(Ingest, Errors) {
  auto message = [](const std::string& text, const std::string& col = "label") -> std::string {
    std::istringstream in(text);
    try {
      ingest_csv(in, col);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message("x,label\n0,1\n1,3\n").find("labels must be contiguous 1..K"), std::string::npos);
  EXPECT_NE(message("x,label\n0,1\nfoo,2\n").find("column 'x'"), std::string::npos);
  EXPECT_NE(message("x,label\n0,1\n1,2.5\n").find("integer"), std::string::npos);
  EXPECT_NE(message("x,x,label\n0,0,1\n").find("x"), std::string::npos);
  EXPECT_NE(message("x,y\n0,1\n").find("label"), std::string::npos);
  EXPECT_NE(message("x,label\n0,1\n1,1\n").find("2 classes"), std::string::npos);
}

TEST(Cli, VerifyExitCodesAndDeterminism) {
  std::string a, b, err;
  EXPECT_EQ(cli({"verify", "--k", "3", "--trials", "20", "--seed", "7"}, &a), 0);
  EXPECT_EQ(cli({"verify", "--k", "3", "--trials", "20", "--seed", "7"}, &b), 0);
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["symmetric_agreement"]["disagreement_count"], 0);
  EXPECT_EQ(cli({"verify", "--k", "1"}, nullptr, &err), 2);
  EXPECT_EQ(cli({}, nullptr, &err), 2);
  EXPECT_EQ(cli({"frobnicate"}, nullptr, &err), 2);
}

TEST(Cli, SweepPlotRoundTrip) {
  TempDir dir;
  write_file(dir / "s.cfg", kSmallSweep);
  const auto csv = dir / "out.csv";
  EXPECT_EQ(cli({"sweep", "--config", (dir / "s.cfg").string(), "--out", csv.string(), "--jobs", "2"}), 0);
  const std::string first = read_file(csv);
  EXPECT_EQ(cli({"sweep", "--config", (dir / "s.cfg").string(), "--out", csv.string()}), 0);
  EXPECT_EQ(read_file(csv), first);
  std::istringstream in(first);
  EXPECT_EQ(read_csv(in).rows.size(), 6u);

  EXPECT_EQ(cli({"sweep", "--config", (dir / "s.cfg").string(), "--out", csv.string(), "--seed", "4"}), 0);
  EXPECT_NE(read_file(csv), first);

  const auto svg = dir / "out.svg";
  EXPECT_EQ(cli({"plot", csv.string(), "--out", svg.string()}), 0);
  const std::string svg1 = read_file(svg);
  EXPECT_EQ(cli({"plot", csv.string(), "--out", svg.string()}), 0);
  EXPECT_EQ(read_file(svg), svg1);
}

TEST(Cli, MitigationOverrideAndFailureExit) {
  TempDir dir;
  write_file(dir / "s.cfg", kSmallSweep);
  std::string out, err;
  EXPECT_EQ(cli({"sweep", "--config", (dir / "s.cfg").string(), "--mitigation", "known-symmetric"}, &out, &err), 1);
  EXPECT_NE(out.find("FAILED"), std::string::npos);
  EXPECT_NE(err.find("cell failed"), std::string::npos);
  EXPECT_EQ(cli({"sweep", "--config", (dir / "s.cfg").string(), "--mitigation", "bogus"}, &out, &err), 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
  TempDir dir;
  write_file(dir / "bad.cfg", "[channel]\nalphas = [2]\n");
  std::string err;
  EXPECT_EQ(cli({"sweep", "--config", (dir / "bad.cfg").string()}, nullptr, &err), 2);
  EXPECT_NE(err.find("line 2"), std::string::npos) << err;
  EXPECT_EQ(cli({"sweep", "--config", (dir / "missing.cfg").string()}, nullptr, &err), 2);
  write_file(dir / "s.cfg", kSmallSweep);
  EXPECT_EQ(cli({"consistency", "--config", (dir / "s.cfg").string()}, nullptr, &err), 2);
  EXPECT_NE(err.find("n_grid"), std::string::npos) << err;
}

TEST(Cli, ConsistencyWritesSeedAndMeanRows) {
  TempDir dir;
  write_file(dir / "c.cfg", std::string(kSmallSweep).replace(std::string(kSmallSweep).find("[0, 0.3, 0.9]"), 13, "[0.3]") +
                                "[consistency]\nn_grid = [100, 400]\n");
  std::string out;
  EXPECT_EQ(cli({"consistency", "--config", (dir / "c.cfg").string()}, &out), 0);
  std::istringstream in(out);
  const auto table = read_csv(in);
  ASSERT_EQ(table.rows.size(), 6u);
  EXPECT_EQ(table.rows[2][1], "mean");
  EXPECT_EQ(table.rows[5][1], "mean");
  EXPECT_EQ(table.rows[5][*table.column("n_train")], "400");
}

TEST(Cli, PlotEmptyCsvWritesNothing) {
  TempDir dir;
  write_file(dir / "empty.csv", "");
  const auto svg = dir / "x.svg";
  std::string err;
  EXPECT_EQ(cli({"plot", (dir / "empty.csv").string(), "--out", svg.string()}, nullptr, &err), 2);
  EXPECT_FALSE(fs::exists(svg));
  write_file(dir / "header.csv",
             "experiment_id,seed,K,d,noise_kind,alpha,beta,n_train,estimator,mitigation,risk,risk_se,"
             "bayes_risk,excess_risk,l1_posterior_error,l2_posterior_error\n");
  EXPECT_EQ(cli({"plot", (dir / "header.csv").string(), "--out", svg.string()}, nullptr, &err), 2);
  EXPECT_FALSE(fs::exists(svg));
}

TEST(Cli, IngestThenSweep) {
  TempDir dir;
  Rng rng(2);
  const auto data = circle_mixture(3).sample(300, rng);
  std::string text = "a,b,cls\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    text += format_number(data.row(i)[0]) + "," + format_number(data.row(i)[1]) + "," +
            std::to_string(data.labels()[i] + 1) + "\n";
  }
  write_file(dir / "in.csv", text);
  const auto ds = dir / "data.txt";
  EXPECT_EQ(cli({"ingest", (dir / "in.csv").string(), "--label-column", "cls", "--out", ds.string()}), 0);
  std::ifstream f(ds);
  const auto back = read_dataset(f);
  EXPECT_EQ(back.size(), 300u);
  EXPECT_EQ(back.labels(), data.labels());

  write_file(dir / "s.cfg",
             "[experiment]\nn_train = 200\nn_test = 100\nseeds = 1\n[distribution]\nkind = dataset\n"
             "path = data.txt\n[channel]\nalphas = [0.1]\n");
  std::string out;
  EXPECT_EQ(cli({"sweep", "--config", (dir / "s.cfg").string()}, &out), 0);
  EXPECT_NE(out.find(",NA,NA,NA,NA\n"), std::string::npos) << out;

  write_file(dir / "gap.csv", "x,label\n0,1\n1,3\n");
  std::string err;
  EXPECT_EQ(cli({"ingest", (dir / "gap.csv").string(), "--out", (dir / "g.txt").string()}, nullptr, &err), 2);
  EXPECT_NE(err.find("labels must be contiguous 1..K"), std::string::npos);
}
