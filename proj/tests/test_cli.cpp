#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sapopt/io.hpp"
#include "support.hpp"

using namespace sapopt;
using namespace sapopt::testing;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() / ("sapopt_cli_" + std::to_string(::getpid()) + "_"
                                        + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const
  {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  std::string write_problem(const std::string& name, const SapProblem& p) const
  {
    return write(name, dump(problem_to_json(p)));
  }

  /// Runs the CLI; stdout and stderr land in out and err.
  int run(const std::string& args)
  {
    const std::string cmd = std::string(SAPOPT_CLI) + " " + args + " > " + path("stdout") + " 2> " + path("stderr");
    const int status = std::system(cmd.c_str());
    out = read(path("stdout"));
    err = read(path("stderr"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string read(const std::string& p)
  {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string out, err;

private:
  fs::path dir_;
};

SapProblem two_targets()
{
  return new_problem(Matrix::Ones(1, 2), Vector::Constant(1, 2.0), {Pwq::quadratic(1, -2, 1), Pwq::quadratic(1, -6, 9)});
}

SapProblem card_problem()
{
  return new_problem(Matrix::Ones(1, 3), Vector::Constant(1, 1.0),
                     {Pwq::quadratic(1, -1.2, 0.36) + card_cost(0.05, -2, 2),
                      Pwq::quadratic(1, -0.6, 0.09) + card_cost(0.05, -2, 2),
                      Pwq::quadratic(2, -0.2, 0.005) + card_cost(0.05, -2, 2)});
}

}  // namespace

TEST_F(Cli, SolveConvex)
{
  const std::string file = write_problem("p.json", two_targets());
  ASSERT_EQ(run("solve " + file), 0) << err;
  const Json j = parse_json(out);
  EXPECT_EQ(j["status"], "converged");
  EXPECT_NEAR(j["o_best"].get<double>(), 2.0, 1e-3);
  EXPECT_LE(j["gap"].get<double>(), 1e-4);
  EXPECT_EQ(j["options"]["check_every"], 10);
  EXPECT_EQ(j["options"]["patience"], 50);
}

TEST_F(Cli, SolveWritesOutFileAndTelemetry)
{
  const std::string file = write_problem("p.json", two_targets());
  ASSERT_EQ(run("solve " + file + " --out " + path("r.json") + " --telemetry " + path("t.jsonl")), 0) << err;
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(parse_json(read(path("r.json")))["status"], "converged");
  std::ifstream tel(path("t.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(tel, line)) {
    const Json rec = parse_json(line);
    EXPECT_TRUE(rec.contains("iter") && rec.contains("o") && rec.contains("r") && rec.contains("o_best"));
    EXPECT_EQ(rec["iter"].get<long>() % 10, 0);
    ++lines;
  }
  EXPECT_GT(lines, 0);
}

TEST_F(Cli, ZerosInitHasNoBound)
{
  const std::string file = write_problem("p.json", card_problem());
  EXPECT_EQ(run("solve " + file + " --init zeros"), 0) << err;
  const Json j = parse_json(out);
  EXPECT_TRUE(j["d_star"].is_null());
  EXPECT_TRUE(j["gap"].is_null());
}

TEST_F(Cli, ExitCodes)
{
  const std::string bad = write("bad.json", "{\n \"A\": [[1, 1]],\n \"b\": [1,\n}");
  EXPECT_EQ(run("solve " + bad), 1);
  EXPECT_NE(err.find("line"), std::string::npos) << err;

  const std::string missing = write("missing.json", R"({"A": [[1]], "b": [1]})");
  EXPECT_EQ(run("solve " + missing), 1);
  EXPECT_NE(err.find("functions"), std::string::npos) << err;

  EXPECT_EQ(run("solve " + path("nope.json")), 1);
  EXPECT_EQ(run("solve"), 1);

  const std::string convex = write_problem("p.json", two_targets());
  EXPECT_EQ(run("solve " + convex + " --init zeros --max-iter 30"), 2);

  const std::string infeasible = write_problem(
      "inf.json", new_problem(Matrix::Ones(1, 2), Vector::Constant(1, 5.0), {Pwq::indicator(0, 1), Pwq::indicator(0, 1)}));
  EXPECT_EQ(run("solve " + infeasible + " --init zeros --max-iter 200"), 3);
  EXPECT_EQ(parse_json(out)["status"], "no_feasible_candidate");
}

TEST_F(Cli, RelaxReportsBoundAndDumpsEnvelopes)
{
  const std::string file = write_problem("p.json", card_problem());
  ASSERT_EQ(run("solve " + file), 0) << err;
  const double o_best = parse_json(out)["o_best"].get<double>();
  ASSERT_EQ(run("relax " + file + " --dump-envelopes " + path("env.json")), 0) << err;
  const Json j = parse_json(out);
  EXPECT_EQ(j["d_star"], j["o_best"]);
  EXPECT_LE(j["d_star"].get<double>(), o_best + 1e-9);
  const Json env = parse_json(read(path("env.json")));
  ASSERT_EQ(env.size(), 3u);
  EXPECT_EQ(pwq_from_json(env[0]), envelope(card_problem().f(0)));

  const std::string convex = write_problem("c.json", two_targets());
  ASSERT_EQ(run("relax " + convex), 0);
  const double relaxed = parse_json(out)["o_best"].get<double>();
  ASSERT_EQ(run("solve " + convex), 0);
  EXPECT_NEAR(relaxed, parse_json(out)["o_best"].get<double>(), 1e-6);
}

TEST_F(Cli, Oracle)
{
  const std::string file = write_problem("p.json", card_problem());
  ASSERT_EQ(run("oracle " + file + " --grid-step 1e-3"), 0) << err;
  Json j = parse_json(out);
  EXPECT_EQ(j["method"], "exhaustive");
  EXPECT_NEAR(j["o_best"].get<double>(), 0.11, 1e-9);

  const std::string convex = write_problem("c.json", two_targets());
  ASSERT_EQ(run("oracle " + convex), 0) << err;
  const double ref = parse_json(out)["o_best"].get<double>();
  ASSERT_EQ(run("solve " + convex), 0);
  EXPECT_NEAR(parse_json(out)["o_best"].get<double>(), ref, 1e-3);

  // Ten free coordinates and three rows: neither method applies.
  Rng rng(60);
  const std::string big = write_problem("big.json", random_card_instance(rng, 13, 3));
  EXPECT_EQ(run("oracle " + big), 4);
  EXPECT_FALSE(err.empty());

  // Ten free coordinates and one row go to the value-function method.
  const std::string wide = write_problem("wide.json", random_card_instance(rng, 11, 1, true));
  EXPECT_EQ(run("oracle " + wide + " --grid-step 0.05"), 0) << err;
  EXPECT_EQ(parse_json(out)["method"], "value_function");
  EXPECT_EQ(run("oracle " + wide + " --grid-step 1e-4 --budget 1000000"), 4);
}

TEST_F(Cli, GenIsDeterministic)
{
  ASSERT_EQ(run("gen --seed 5 --assets 20 --factors 3 --lots 2 --out " + path("a.json")), 0) << err;
  ASSERT_EQ(run("gen --seed 5 --assets 20 --factors 3 --lots 2"), 0) << err;
  EXPECT_EQ(out, read(path("a.json")));
  const Json j = parse_json(out);
  EXPECT_EQ(j["format"], "portfolio");
  EXPECT_EQ(j["gamma"]["risk"], 100);
  EXPECT_EQ(j["assets"][0]["trade_cost"], 3e-5);
  ASSERT_EQ(run("gen --seed 6 --assets 20 --factors 3 --lots 2"), 0);
  EXPECT_NE(out, read(path("a.json")));
}

TEST_F(Cli, SolvePortfolioFile)
{
  ASSERT_EQ(run("gen --seed 2 --assets 60 --factors 5 --out " + path("pf.json")), 0) << err;
  ASSERT_EQ(run("solve " + path("pf.json")), 0) << err;
  const Json j = parse_json(out);
  EXPECT_EQ(j["x_best"].size(), 66u);
  EXPECT_GE(j["gap"].get<double>(), -1e-6);
}

TEST_F(Cli, ScalingModesAgreeOnConvexProblems)
{
  Rng rng(61);
  for (int t = 0; t < 5; ++t) {
    const ConvexInstance c = random_convex_instance(rng, 12, 4);
    const std::string file = write_problem("p" + std::to_string(t) + ".json", c.problem());
    const std::string tight = " --eps-obj 1e-9 --patience 200";
    ASSERT_EQ(run("solve " + file + " --scaling none" + tight), 0) << err;
    const double plain = parse_json(out)["o_best"].get<double>();
    ASSERT_EQ(run("solve " + file + " --scaling auto" + tight), 0) << err;
    const double scaled = parse_json(out)["o_best"].get<double>();
    EXPECT_NEAR(plain, scaled, 1e-5 * (1 + std::abs(plain)));
  }
}

TEST_F(Cli, BenchSmokeRun)
{
  ASSERT_EQ(run("bench --seeds 3 --assets 40 --factors 4"), 0) << err;
  EXPECT_NE(out.find("runtime_ms mean"), std::string::npos);
  std::istringstream lines(out);
  std::string line;
  std::getline(lines, line);  // header
  for (int s = 0; s < 3; ++s) {
    ASSERT_TRUE(std::getline(lines, line));
    std::istringstream row(line);
    int seed;
    double ms, o_best, d_star, gap_bp;
    row >> seed >> ms >> o_best >> d_star >> gap_bp;
    EXPECT_EQ(seed, s);
    EXPECT_NEAR(gap_bp, (o_best - d_star) * 1e4, 1e-3 + 1e-5 * std::abs(gap_bp));
    EXPECT_GE(gap_bp, -1e-2);
  }
}
