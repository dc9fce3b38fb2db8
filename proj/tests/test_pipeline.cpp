#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "esnode/error.hpp"
#include "esnode/pipeline.hpp"

using namespace esnode;
namespace fs = std::filesystem;

namespace {

Trajectory traj(const Matrix& states, double tau) {
  Trajectory t;
  t.tau = tau;
  t.states = states;
  return t;
}

RunConfig harmonic_config() {
  return parse_config(R"({"problem": "harmonic", "reservoir": {"activation": "logistic"}, "autonomous_steps": 100})");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("esnode_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("evaluate") {
  Matrix a(3, 2);
  a << 0, 1, 2, 3, 4, 5;
  const Metrics same = evaluate(traj(a, 0.1), traj(a, 0.1));
  CHECK(same.max_abs_all == 0.0);
  CHECK(same.rmse[1] == 0.0);

  Matrix b = a;
  b.col(1).array() += 0.25;
  const Metrics off = evaluate(traj(b, 0.1), traj(a, 0.1));
  CHECK(off.max_abs[0] == 0.0);
  CHECK(off.max_abs[1] == doctest::Approx(0.25));
  CHECK(off.rmse[1] == doctest::Approx(0.25));

  // Differences (1, 0), (-2, 0), (2, 0): max 2, rmse sqrt(9/3).
  Matrix c = a;
  c(0, 0) += 1;
  c(1, 0) -= 2;
  c(2, 0) += 2;
  const Metrics hand = evaluate(traj(c, 0.1), traj(a, 0.1));
  CHECK(hand.max_abs[0] == doctest::Approx(2.0));
  CHECK(hand.rmse[0] == doctest::Approx(std::sqrt(3.0)));
  CHECK(hand.rmse_all == doctest::Approx(std::sqrt(9.0 / 6.0)));

  try {
    evaluate(traj(a.topRows(2), 0.1), traj(a, 0.1));
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  CHECK_THROWS_AS(evaluate(traj(a, 0.2), traj(a, 0.1)), Error);
}

TEST_CASE("config parsing and overrides") {
  const RunConfig d = parse_config("{}");
  CHECK(d.problem == "harmonic");
  CHECK(d.initial_state() == Vector::Unit(2, 0));
  CHECK(d.stage1.rel_loss_tol == 1e-5);

  const RunConfig o = parse_config(R"({"problem": "lorenz", "tau": 0.03})",
                                   {"stage1.max_iters=1", "reservoir.activation=tanh", "y0=[0.5, 1, 2]"});
  CHECK(o.stage1.max_iters == 1);
  CHECK(o.reservoir.activation == Activation::Tanh);
  CHECK(o.initial_state()(2) == 2.0);
  CHECK(parse_config(R"({"problem": "lorenz"})").initial_state() == Vector::Ones(3));

  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;  // sentinel: nothing thrown
  };
  CHECK(code_of([] { parse_config(R"({"probelm": "vdp"})"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config("{not json"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config("{}", {"stage3.lambda=1"}); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config("{}", {"tau"}); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config(R"({"tau": "fast"})"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config(R"({"y0": [1, 2, 3]})"); }) == ErrorCode::Config);
  CHECK(code_of([] { parse_config(R"({"n_washout": -1})"); }) == ErrorCode::Config);
  CHECK(code_of([] { load_config("/nonexistent/cfg.json"); }) == ErrorCode::Config);

  // The JSON echo parses back to the same config.
  const RunConfig back = parse_config(config_to_json(o));
  CHECK(config_to_json(back) == config_to_json(o));
}

TEST_CASE("generate with a zero readout stays put") {
  TrainedModel m;
  ReservoirParams p;
  p.n_neurons = 10;
  p.connectivity = 0.3;
  m.reservoir = build(p, 2);
  m.w_stage2 = Matrix::Zero(2, 10);
  m.washout_inputs = traj(Matrix::Random(5, 2), 0.1);
  m.kept = traj(Matrix::Zero(3, 2), 0.1);
  Vector y(2);
  y << 0.3, -0.7;
  const Trajectory g = generate(m, y, 20);
  CHECK(g.size() == 21);
  for (int k = 0; k <= 20; ++k) CHECK(g.state(k) == y);
}

TEST_CASE("harmonic end to end") {
  const RunConfig cfg = harmonic_config();
  const TrainOutput run = train(cfg);
  const RunReport& r = run.report;
  const TrainedModel& m = run.model;

  CHECK(m.trial.size() == 651);
  CHECK(m.kept.size() == 501);
  CHECK(m.ybar.size() == 501);
  CHECK(m.y_final.size() == 501);
  CHECK(m.y_final.tau == m.ybar.tau);
  CHECK(r.reference_kind == "analytic");
  CHECK(r.reference.state(0) == m.kept.state(0));
  CHECK(m.ybar.state(0) == m.kept.state(0));

  // The second pass must not wreck the first.
  CHECK(r.metrics.max_abs_all <= 3.0 * r.stage1_metrics.max_abs_all);
  CHECK(r.metrics.max_abs_all < 2e-2);
  CHECK(r.trial_metrics.max_abs_all > r.metrics.max_abs_all);
  CHECK(r.stage1.converged);
  CHECK(r.stage2.converged);

  // One autonomous step from the anchor reproduces the teacher-forced output.
  const Trajectory one = generate(m, m.ybar.state(0), 1);
  CHECK(one.state(1) == m.y_final.state(1));

  // 100 closed-loop steps stay within 10x of the teacher-forced envelope.
  REQUIRE(r.autonomous);
  const Trajectory ref = reference_for(harmonic(), m.kept.state(0), m.kept.t0, cfg.tau, 100, 1);
  Matrix forced = m.y_final.states.topRows(101);
  const double envelope = (forced - ref.states).cwiseAbs().maxCoeff();
  CHECK((r.autonomous->states - ref.states).cwiseAbs().maxCoeff() <= 10.0 * envelope);
  REQUIRE(r.autonomous_metrics);
}

TEST_CASE("identical configs give identical reports") {
  RunConfig cfg = harmonic_config();
  cfg.n_points = 200;
  cfg.reservoir.n_neurons = 80;
  const std::string a = report_json(train(cfg).report);
  const std::string b = report_json(train(cfg).report);
  CHECK(a == b);
  cfg.reservoir.seed = 2;
  CHECK(report_json(train(cfg).report) != a);
}

TEST_CASE("non-harmonic runs evaluate against RK4") {
  RunConfig cfg = parse_config(R"({"problem": "vdp", "tau": 0.1, "n_points": 60, "n_washout": 40,
                                   "reservoir": {"n_neurons": 40, "activation": "logistic"},
                                   "reference_refine": 10})");
  const TrainOutput run = train(cfg);
  CHECK(run.report.reference_kind == "rk4");
  const Trajectory oracle = rk4_refined(van_der_pol(), run.model.kept.state(0), 0.1, 60, 10);
  CHECK(run.report.reference.states == oracle.states);
}

TEST_CASE("trial divergence is reported with its phase") {
  RunConfig cfg = parse_config(R"({"problem": "lorenz", "tau": 0.5, "n_points": 100})");
  try {
    train(cfg);
    FAIL("expected TrialDiverged");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TrialDiverged);
    CHECK(std::string(e.what()).rfind("[trial]", 0) == 0);
  }
}

TEST_CASE("gradcheck on the benchmark configs") {
  for (const char* p : {"harmonic", "vdp", "lorenz"}) {
    CAPTURE(p);
    RunConfig cfg = parse_config(std::string(R"({"reservoir": {"activation": "logistic", "n_neurons": 300}, "problem": ")") + p + "\"}");
    if (std::string(p) == "lorenz") {
      cfg.tau = 0.03;
      cfg.refine_factor = 20;
    }
    const GradcheckResult g = gradcheck(cfg);
    CHECK(g.neurons == 20);
    CHECK(g.steps == 10);
    CHECK(g.passed());
  }
}

TEST_CASE("artifacts and the report table") {
  RunConfig cfg = harmonic_config();
  cfg.n_points = 100;
  cfg.reservoir.n_neurons = 60;
  const TrainOutput run = train(cfg);
  const fs::path dir = scratch("artifacts");
  write_artifacts(dir.string(), run);
  for (const char* f : {"trial.csv", "ybar_stage1.csv", "y_stage2.csv", "reference.csv", "residuals_stage1.csv",
                        "residuals_stage2.csv", "convergence_stage1.log", "convergence_stage2.log", "report.json",
                        "timing.json", "y_autonomous.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  for (const auto& entry : fs::directory_iterator(dir)) CHECK(entry.path().extension() != ".tmp");

  const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(rep["prng.name"] == "mt19937_64");
  CHECK(rep["seed"] == 1);
  CHECK(rep["config.problem"] == "harmonic");
  CHECK(rep["metrics.max_abs"].size() == 2);
  CHECK(rep["stage2.final_loss"].get<double>() == doctest::Approx(run.report.residuals2.loss_total));
  CHECK(!rep.contains("timing.total"));
  CHECK(nlohmann::json::parse(slurp(dir / "timing.json")).contains("timing.total"));

  std::istringstream log(slurp(dir / "convergence_stage1.log"));
  int lines = 0;
  for (std::string l; std::getline(log, l);) ++lines;
  CHECK(lines == static_cast<int>(run.report.stage1.history.size()));

  const std::string table = format_report(dir.string());
  CHECK(table.find("harmonic") != std::string::npos);
  CHECK(table.find("missing") == std::string::npos);

  fs::remove(dir / "timing.json");
  fs::remove(dir / "convergence_stage2.log");
  const std::string partial = format_report(dir.string());
  CHECK(partial.find("missing") != std::string::npos);

  const fs::path empty = scratch("empty");
  fs::create_directories(empty);
  CHECK_THROWS_AS(format_report(empty.string()), Error);
  fs::remove_all(dir);
  fs::remove_all(empty);
}
