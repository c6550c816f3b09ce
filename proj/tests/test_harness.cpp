#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinncert/harness.hpp"

using namespace pinncert;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path fresh_dir(const char* stem) {
  fs::path d = fs::temp_directory_path() / stem;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ExperimentConfig tiny_heat() {
  ExperimentConfig cfg;
  cfg.problem = ProblemId::heat;
  cfg.width = 4;
  cfg.depth = 2;
  cfg.epochs = 4;
  cfg.checkpoint_stride = 2;
  cfg.samples = {64, 16, 16, 16, 16};
  cfg.eval_factor = 2;
  cfg.sup_factor = 4;
  return cfg;
}

}  // namespace

TEST_CASE("config text round-trips through the parser") {
  ExperimentConfig cfg = tiny_heat();
  cfg.seed = 7;
  cfg.run_name = "case_a";
  ExperimentConfig back = parse_config_text(config_to_text(cfg));
  CHECK(back.problem == cfg.problem);
  CHECK(back.seed == 7);
  CHECK(back.width == 4);
  CHECK(back.epochs == 4);
  CHECK(back.samples[0] == 64);
  CHECK(back.run_name == "case_a");
  CHECK(config_to_text(back) == config_to_text(cfg));
}

TEST_CASE("unknown keys are all listed in one error") {
  try {
    parse_config_text("problem = heat\nwobble = 1\nM_eq = 64\nfrobnicate = 2\n");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unknown keys") != std::string::npos);
    CHECK(msg.find("wobble") != std::string::npos);
    CHECK(msg.find("frobnicate") != std::string::npos);
  }
}

TEST_CASE("duplicate and malformed lines are rejected with context") {
  CHECK_THROWS_WITH(parse_config_text("p = 2\np = 3\n"), doctest::Contains("duplicate key 'p'"));
  CHECK_THROWS_WITH(parse_config_text("problem heat\n"), doctest::Contains("line 1"));
  CHECK_THROWS_WITH(parse_config_text("epochs = ten\n"), doctest::Contains("epochs"));
  CHECK_NOTHROW(parse_config_text("# comment\n\nproblem = heat\n"));
}

TEST_CASE("the two norm exponents must agree") {
  CHECK_THROWS_WITH(parse_config_text("p = 2\nq = 3\n"), doctest::Contains("q must equal p"));
  ExperimentConfig cfg = parse_config_text("p = 2\nq = 2\n");
  CHECK(cfg.q == 2.0);
  ExperimentConfig dflt = parse_config_text("p = 2\n");
  CHECK(dflt.q == 2.0);
}

TEST_CASE("dimension-aware sample counts") {
  Box cube{3, {0, 0, 0}, {1, 1, 1}};
  std::array<int, 3> c = counts_for_box(4096, cube, "M_eq", ProblemId::maxwell);
  CHECK(c[0] == 16);
  CHECK(c[1] == 16);
  CHECK(c[2] == 16);
  CHECK_THROWS_WITH(counts_for_box(4095, cube, "M_eq", ProblemId::maxwell),
                    doctest::Contains("M_eq"));

  Box sq{2, {0, 1, 0}, {1, 2, 0}};
  std::array<int, 3> c2 = counts_for_box(4096, sq, "M_eq", ProblemId::heat);
  CHECK(c2[0] == 64);
  CHECK(c2[1] == 64);

  Box psq{2, {-1, -1, 0}, {1, 1, 0}};
  CHECK_THROWS_WITH(counts_for_box(81, psq, "M_eq", ProblemId::poisson),
                    doctest::Contains("even counts"));
  CHECK_NOTHROW(counts_for_box(64, psq, "M_eq", ProblemId::poisson));
}

TEST_CASE("csv header and row formatting") {
  CHECK(std::string(kCsvHeader) ==
        "epoch,ET_eq,ET_in,ET_in_t,ET_bn,ET_bn_t,E_true,E_exact,E_training,E_asymp,ratio");
  CsvRow row;
  row.epoch = 50;
  row.Et = {1.0, 0.5, std::nan(""), 0.25, std::nan("")};
  row.E_true = 0.125;
  row.E_exact = 2.0;
  row.E_training = 3.0;
  row.E_asymp = 4.0;
  row.ratio = 0.4375;
  const std::string line = csv_line(row);
  CHECK(line.substr(0, 3) == "50,");
  CHECK(line.find(",,") != std::string::npos);
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  CHECK(cells.size() == 11);
}

TEST_CASE("metrics csv round-trips including absent families") {
  fs::path dir = fresh_dir("pinncert_csv_rt");
  fs::path csv = dir / "metrics.csv";
  {
    std::ofstream f(csv);
    f << kCsvHeader << "\n";
    CsvRow row;
    row.epoch = 2;
    row.Et = {0.5, 0.25, std::nan(""), 0.125, std::nan("")};
    row.E_true = 1;
    row.E_exact = 2;
    row.E_training = 3;
    row.E_asymp = 4;
    row.ratio = 0.5;
    f << csv_line(row) << "\n";
  }
  auto rows = read_metrics_csv(csv.string());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].epoch == 2);
  CHECK(rows[0].Et[0] == 0.5);
  CHECK(std::isnan(rows[0].Et[2]));
  CHECK(std::isnan(rows[0].Et[4]));
  CHECK(rows[0].E_asymp == 4.0);

  {
    std::ofstream f(csv);
    f << "epoch,bogus\n1,2\n";
  }
  CHECK_THROWS_AS(read_metrics_csv(csv.string()), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("plots are written for synthetic, constant, and zero-valued series") {
  fs::path dir = fresh_dir("pinncert_plots");
  fs::path csv = dir / "metrics.csv";
  {
    std::ofstream f(csv);
    f << kCsvHeader << "\n";
    for (int i = 1; i <= 10; ++i) {
      CsvRow row;
      row.epoch = i * 10;
      row.Et = {1.0 / i, 0.5 / i, std::nan(""), i == 3 ? 0.0 : 0.25 / i, std::nan("")};
      row.E_true = 0.01 * i;
      row.E_exact = 1.0;  // constant column
      row.E_training = 2.0 / i;
      row.E_asymp = 3.0 / i;
      row.ratio = 1.0;  // constant column
      f << csv_line(row) << "\n";
    }
  }
  write_plots(csv.string(), dir.string());
  CHECK(fs::exists(dir / "curves.svg"));
  CHECK(fs::exists(dir / "ratio.svg"));
  CHECK(fs::file_size(dir / "curves.svg") > 500);
  CHECK(fs::file_size(dir / "ratio.svg") > 500);
  const std::string svg = slurp(dir / "curves.svg");
  CHECK(svg.find("ET_eq") != std::string::npos);
  CHECK(svg.find("E_asymp") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("inf") == std::string::npos);

  const fs::path fresh = dir / "sub" / "plots";
  write_plots(csv.string(), fresh.string());
  CHECK(fs::exists(fresh / "curves.svg"));
  CHECK(fs::exists(fresh / "ratio.svg"));
  fs::remove_all(dir);
}

TEST_CASE("environment override wins over flag and config") {
  ExperimentConfig cfg;
  cfg.output_dir = "from_config";
  CHECK(resolve_output_dir(cfg, "") == "from_config");
  CHECK(resolve_output_dir(cfg, "from_flag") == "from_flag");
  setenv("PINNCERT_OUT_DIR", "from_env", 1);
  CHECK(resolve_output_dir(cfg, "from_flag") == "from_env");
  unsetenv("PINNCERT_OUT_DIR");
  CHECK(resolve_output_dir(cfg, "from_flag") == "from_flag");
}

TEST_CASE("a tiny run produces checkpoints, metrics, plots, and a clean replay") {
  fs::path dir = fresh_dir("pinncert_tiny_run");
  ExperimentConfig cfg = tiny_heat();
  RunResult res = run_experiment(cfg, dir.string(), true);

  fs::path run_dir = res.run_dir;
  CHECK(run_dir.string().find(dir.string()) == 0);
  CHECK(fs::exists(run_dir / "config.txt"));
  CHECK(fs::exists(run_dir / "metrics.csv"));
  CHECK(fs::exists(run_dir / "curves.svg"));
  CHECK(fs::exists(run_dir / "ratio.svg"));
  CHECK(fs::exists(run_dir / "ckpt_000002.pnck"));
  CHECK(fs::exists(run_dir / "ckpt_000004.pnck"));

  REQUIRE(res.rows.size() == 2);
  CHECK(res.rows[0].epoch == 2);
  CHECK(res.rows[1].epoch == 4);
  CHECK(res.loss_history.size() == 4);
  for (const CsvRow& row : res.rows) {
    CHECK(row.E_true > 0);
    CHECK(row.E_exact >= row.E_true);
    CHECK(row.E_training >= 0);
    CHECK(row.E_asymp > 0);
    CHECK(std::isnan(row.Et[2]));
    CHECK(std::isnan(row.Et[4]));
  }

  auto parsed = read_metrics_csv((run_dir / "metrics.csv").string());
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].epoch == 4);

  CHECK(replay_run(run_dir.string(), true) == 0);
  CHECK(slurp(run_dir / "metrics_replay.csv") == slurp(run_dir / "metrics.csv"));

  // A corrupted metrics file must make the replay fail.
  {
    std::ofstream f(run_dir / "metrics.csv", std::ios::app);
    f << "999";
  }
  CHECK(replay_run(run_dir.string(), true) != 0);
  fs::remove_all(dir);
}

TEST_CASE("identical configs give byte-identical metrics in separate directories") {
  fs::path da = fresh_dir("pinncert_det_a");
  fs::path db = fresh_dir("pinncert_det_b");
  ExperimentConfig cfg = tiny_heat();
  cfg.epochs = 2;
  RunResult ra = run_experiment(cfg, da.string(), true);
  RunResult rb = run_experiment(cfg, db.string(), true);
  CHECK(slurp(fs::path(ra.run_dir) / "metrics.csv") ==
        slurp(fs::path(rb.run_dir) / "metrics.csv"));
  fs::remove_all(da);
  fs::remove_all(db);
}

TEST_CASE("the environment override redirects a real run") {
  fs::path dir = fresh_dir("pinncert_env_run");
  setenv("PINNCERT_OUT_DIR", dir.c_str(), 1);
  ExperimentConfig cfg = tiny_heat();
  cfg.epochs = 2;
  cfg.run_name = "env_case";
  RunResult res = run_experiment(cfg, "ignored_flag_dir", true);
  unsetenv("PINNCERT_OUT_DIR");
  CHECK(fs::path(res.run_dir) == dir / "env_case");
  CHECK(fs::exists(dir / "env_case" / "metrics.csv"));
  fs::remove_all(dir);
}

TEST_CASE("two hundred epochs of training keep finding better losses") {
  fs::path dir = fresh_dir("pinncert_smoke");
  ExperimentConfig cfg;
  cfg.problem = ProblemId::heat;
  cfg.width = 8;
  cfg.depth = 2;
  cfg.epochs = 200;
  cfg.checkpoint_stride = 200;
  cfg.samples = {256, 64, 64, 64, 64};
  RunResult res = run_experiment(cfg, dir.string(), true);
  REQUIRE(res.loss_history.size() == 200);
  for (double v : res.loss_history) CHECK(std::isfinite(v));

  double best = res.loss_history[0];
  for (std::size_t w = 0; w < 4; ++w) {
    double window_best = best;
    for (std::size_t i = 50 * w; i < 50 * (w + 1); ++i)
      window_best = std::min(window_best, res.loss_history[i]);
    CHECK_MESSAGE((window_best < best || w == 0), "window ", w, " stalled");
    best = std::min(best, window_best);
  }
  CHECK(res.loss_history.back() < res.loss_history.front());
  fs::remove_all(dir);
}

TEST_CASE("constants table lists the toolbox values") {
  std::ostringstream os;
  write_constants_csv(os);
  const std::string text = os.str();
  CHECK(text.find("name,value") == 0);
  CHECK(text.find("poincare_p2") != std::string::npos);
  CHECK(text.find("bramble_hilbert") != std::string::npos);
  CHECK(text.find("tanh_width1") != std::string::npos);
  CHECK(text.find("aux_gradient") != std::string::npos);

  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  bool found = false;
  while (std::getline(ss, line)) {
    if (line.rfind("poincare_p2,", 0) == 0) {
      const double v = std::stod(line.substr(line.find(',') + 1));
      CHECK(v == doctest::Approx(1.0 / 3.14159265358979323846).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
}
