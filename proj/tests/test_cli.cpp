#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pphi2/app/run.hpp"

namespace fs = std::filesystem;
using namespace pphi2;
using namespace pphi2::app;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("pphi2_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::string kConfigs = PPHI2_CONFIG_DIR;
const std::string kCli = PPHI2_CLI_PATH;

}  // namespace

TEST(Config, RoundTrip) {
  const auto c = RunConfig::parse(
      "# comment\n[potential]\nfamily = Gaussian\nparams = -1, 0.8\nm_inf = 1.5\n"
      "; other comment\n[polynomial]\ndegree = 4\na4 = 0.1\n[coupling]\ng = exp(-x^2/2)\n[output]\ndir = out\n");
  EXPECT_EQ(RunConfig::parse(c.serialize()), c);
  EXPECT_EQ(c.text("potential", "family"), "Gaussian");
  EXPECT_EQ(c.numbers("potential", "params"), (std::vector<double>{-1, 0.8}));
  EXPECT_DOUBLE_EQ(c.number("grids", "x_step"), 0.05);
  EXPECT_EQ(c.text("polynomial", "a0"), "0");
}

TEST(Config, RoundTripAllFiles) {
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    const auto c = RunConfig::load(e.path().string());
    EXPECT_EQ(RunConfig::parse(c.serialize()), c) << e.path();
  }
}

TEST(Config, RejectsUnknownKeysAndSections) {
  auto field_of = [](const std::string& text) {
    try {
      RunConfig::parse(text);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::validation);
      return e.field();
    }
    return std::string("no error");
  };
  EXPECT_EQ(field_of("[potential]\nfamilly = Zero\n"), "potential.familly");
  EXPECT_EQ(field_of("[nonsense]\nx = 1\n"), "nonsense");
}

TEST(Config, OverridesAndHash) {
  auto c = RunConfig::load(kConfigs + "/free.ini");
  const auto h0 = sha256_hex(c.effective_text());
  auto moved = c;
  moved.set("output", "dir", "/elsewhere");
  EXPECT_EQ(sha256_hex(moved.effective_text()), h0);
  auto d = c;
  d.apply_override("cutoffs.n_max=5");
  EXPECT_EQ(d.integer("cutoffs", "n_max"), 5);
  EXPECT_NE(sha256_hex(d.effective_text()), h0);
  // an explicit default hashes like an omitted one
  auto e = c;
  e.set("grids", "x_step", "0.05");
  EXPECT_EQ(sha256_hex(e.effective_text()), h0);
  EXPECT_THROW(c.apply_override("cutoffs.n_max"), Error);
  EXPECT_THROW(c.apply_override("bogus.key=1"), Error);
}

TEST(Csv, QuotingAndPrecision) {
  CsvWriter w({"name", "value", "n"});
  w.row({std::string("a,b"), 0.1, 7LL});
  w.row({std::string("say \"hi\""), 1.0 / 3.0, -2LL});
  w.row({std::string("line\nbreak"), 1e300, 0LL});
  EXPECT_EQ(w.str(),
            "name,value,n\r\n"
            "\"a,b\",0.10000000000000001,7\r\n"
            "\"say \"\"hi\"\"\",0.33333333333333331,-2\r\n"
            "\"line\nbreak\",1.0000000000000001e+300,0\r\n");
  EXPECT_EQ(std::stod(CsvWriter::format(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_THROW(w.row({1.0}), Error);
}

TEST(Run, SquareWellScatterIsUnitary) {
  const auto root = scratch("sw");
  auto ctx = make_context(RunConfig::load(kConfigs + "/square_well.ini"), {}, root.string());
  const auto s = run(ctx, "scatter");
  EXPECT_TRUE(s["pass"].get<bool>());
  EXPECT_LT(s["max_unitarity_defect"].get<double>(), 1e-6);
  const auto manifest = nlohmann::json::parse(slurp(ctx.dir / "manifest-scatter.json"));
  EXPECT_EQ(manifest["config_hash"], ctx.hash);
  EXPECT_EQ(manifest["seed"].get<std::uint64_t>(), ctx.seed);
  EXPECT_TRUE(fs::exists(ctx.dir / "scatter.csv"));
}

TEST(Run, InvalidMassIsValidationError) {
  const auto root = scratch("bad");
  auto ctx = make_context(RunConfig::load(kConfigs + "/invalid_mass.ini"), {}, root.string());
  try {
    run(ctx, "scatter");
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e), 2);
    EXPECT_EQ(e.field(), "potential.m_inf");
    EXPECT_EQ(error_record(e)["error"]["field"], "potential.m_inf");
  }
}

TEST(Cli, ExitCodesAndJsonErrors) {
  const auto root = scratch("cli");
  const auto err = root / "stderr.txt";
  auto status = [&](const std::string& args) {
    const std::string cmd = "\"" + kCli + "\" " + args + " --out \"" + root.string() + "\" >/dev/null 2>\"" + err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("--json-errors scatter \"" + kConfigs + "/invalid_mass.ini\""), 2);
  const auto j = nlohmann::json::parse(slurp(err));
  EXPECT_EQ(j["error"]["field"], "potential.m_inf");
  EXPECT_EQ(j["error"]["kind"], "validation");

  EXPECT_EQ(status("scatter \"" + kConfigs + "/square_well.ini\""), 0);
  EXPECT_EQ(status("--set potential.m_inf=-2 scatter \"" + kConfigs + "/square_well.ini\""), 2);
  EXPECT_EQ(status("scatter /nonexistent/config.ini"), 2);
  EXPECT_EQ(status("no-such-command x.ini"), 2);
}
