#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "patchgauss_cli/cli.hpp"

using namespace patchgauss;
using namespace patchgauss::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("patchgauss_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  const auto b = read_file(p);
  return {b.begin(), b.end()};
}

}  // namespace

TEST(RunConfig, ParsesAndOverrides) {
  auto c = RunConfig::parse("# comment\nseed = 7\nsigma-max=0.5\n\nkind=patch_gaussian\n");
  EXPECT_EQ(c.uint("seed", 0), 7u);
  EXPECT_DOUBLE_EQ(c.number("sigma_max", 0), 0.5);
  c.set("seed", "9");
  EXPECT_EQ(c.uint("seed", 0), 9u);
  EXPECT_EQ(c.augment_spec(3).kind, AugmentKind::patch_gaussian);
  EXPECT_THROW(RunConfig::parse("novalue\n"), Error);
  EXPECT_THROW(c.number("kind", 0), Error);
}

TEST(ParseZ, AcceptsFractionAndPercent) {
  EXPECT_DOUBLE_EQ(parse_z("0.965"), 0.965);
  EXPECT_DOUBLE_EQ(parse_z("96.5%"), 0.965);
  EXPECT_DOUBLE_EQ(parse_z("76.0%"), 0.76);
  EXPECT_THROW(parse_z("96.5"), Error);
  EXPECT_THROW(parse_z("x"), Error);
}

TEST(ErrorMapCsv, RoundTrips) {
  const ErrorMap m = {{{"gaussian_noise", 1}, 0.25}, {{"pixelate", 3}, 0.5}};
  EXPECT_EQ(parse_error_map(format_error_map(m)), m);
  EXPECT_THROW(parse_error_map("a,1\n"), Error);
  EXPECT_THROW(parse_error_map("a,1,0.1\na,1,0.2\n"), Error);
}

TEST(Cli, MceOfBaselineAgainstItselfIsOne) {
  TempDir dir;
  write_text_atomic(dir / "err.csv", "kind,severity,error\ngaussian_noise,1,0.3\ncontrast,2,0.4\n");
  const auto r = run({"mce", "--input", (dir / "err.csv").string(), "--baseline", (dir / "err.csv").string(),
                      "--output", (dir / "report.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("mCE 1.000\n"), std::string::npos) << r.out;
  const auto json = slurp(dir / "report.json");
  EXPECT_LT(json.find("\"ce\""), json.find("\"mce\""));
}

TEST(Cli, MceExcludeNoiseOnNoiseOnlyMapFails) {
  TempDir dir;
  write_text_atomic(dir / "err.csv", "gaussian_noise,1,0.3\nshot_noise,1,0.2\n");
  const auto r = run({"mce", "--input", (dir / "err.csv").string(), "--baseline", (dir / "err.csv").string(),
                      "--exclude-noise", "--output", (dir / "report.json").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "report.json"));
}

TEST(Cli, SelectAppliesThreshold) {
  TempDir dir;
  // b and c meet 96.5%; c is more robust. a is the most robust overall.
  write_text_atomic(dir / "cands.csv",
                    "label,clean_acc,acc_0.1,acc_0.2,acc_0.3,acc_0.5,acc_0.8,acc_1.0\n"
                    "a,0.95,0.95,0.95,0.95,0.95,0.95,0.95\n"
                    "b,0.97,0.80,0.70,0.60,0.50,0.40,0.30\n"
                    "c,0.966,0.90,0.85,0.80,0.70,0.60,0.50\n");
  auto r = run({"select", "--input", (dir / "cands.csv").string(), "--z", "96.5%"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "c\n");
  r = run({"select", "--input", (dir / "cands.csv").string(), "--z", "0.99"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, 2), "b ");
}

TEST(Cli, AugmentIsDeterministic) {
  TempDir dir;
  ASSERT_EQ(run({"synth", "--output", (dir / "data").string(), "--seed", "3", "--n", "6"}).code, 0);
  const std::vector<std::string> base = {"augment", "--input", (dir / "data").string(), "--seed", "11",
                                         "--kind", "patch_gaussian", "--patch-size", "8", "--sigma-max", "0.5"};
  auto a = base;
  a.insert(a.end(), {"--output", (dir / "a").string()});
  auto b = base;
  b.insert(b.end(), {"--output", (dir / "b").string(), "--threads", "3"});
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  for (int i = 0; i < 6; ++i) {
    const std::string name = "00000" + std::to_string(i) + ".imgt";
    EXPECT_EQ(read_file(dir / "a" / name), read_file(dir / "b" / name));
  }
  EXPECT_EQ(read_file(dir / "a" / "labels.txt"), read_file(dir / "b" / "labels.txt"));
}

TEST(Cli, ConfigFileWithOverride) {
  TempDir dir;
  write_text_atomic(dir / "run.cfg", "seed=3\nn=4\noutput=" + (dir / "x").string() + "\n");
  ASSERT_EQ(run({"synth", "--config", (dir / "run.cfg").string(), "--n", "8"}).code, 0);
  EXPECT_EQ(read_dataset_dir(dir / "x").size(), 8u);
}

TEST(Cli, TrainPredictEvalPipeline) {
  TempDir dir;
  ASSERT_EQ(run({"synth", "--output", (dir / "train").string(), "--seed", "1", "--n", "40"}).code, 0);
  auto r = run({"train", "--input", (dir / "train").string(), "--output", (dir / "m.toym").string(), "--epochs",
                "3", "--filters", "8", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"predict", "--model", (dir / "m.toym").string(), "--input", (dir / "train").string(), "--output",
           (dir / "pred.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"eval", "--input", (dir / "train").string(), "--predictions", (dir / "pred.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"clean_accuracy\""), std::string::npos);
  EXPECT_NE(r.out.find("\"relative_robustness\": null"), std::string::npos);
}

TEST(Cli, FourierAndHighpassWriteOutputs) {
  TempDir dir;
  ASSERT_EQ(run({"synth", "--output", (dir / "d").string(), "--seed", "1", "--n", "4"}).code, 0);
  ASSERT_EQ(run({"train", "--input", (dir / "d").string(), "--output", (dir / "m.toym").string(), "--epochs", "1",
                 "--filters", "4"})
                .code,
            0);
  auto r = run({"fourier", "--model", (dir / "m.toym").string(), "--input", (dir / "d").string(), "--output",
                (dir / "h.csv").string(), "--ppm", (dir / "h.ppm").string(), "--max-freq", "2", "--probe",
                "first_layer", "--norm", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(dir / "h.csv");
  EXPECT_EQ(csv.rfind("# probe=first_layer", 0), 0u);
  EXPECT_EQ(slurp(dir / "h.ppm").rfind("P6", 0), 0u);
  r = run({"highpass", "--input", (dir / "d").string(), "--output", (dir / "hp").string(), "--radius", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_dataset_dir(dir / "hp").images, read_dataset_dir(dir / "d").images);
}

TEST(Cli, CorruptSuiteLayout) {
  TempDir dir;
  ASSERT_EQ(run({"synth", "--output", (dir / "d").string(), "--n", "2"}).code, 0);
  ASSERT_EQ(run({"corrupt", "--input", (dir / "d").string(), "--output", (dir / "c").string()}).code, 0);
  for (double s : kEvalSigmas) EXPECT_TRUE(fs::exists(dir / "c" / ("sigma_" + format_number(s)) / "labels.txt"));
  ASSERT_EQ(run({"corrupt", "--input", (dir / "d").string(), "--output", (dir / "p").string(), "--corruption",
                 "pixelate"})
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir / "p" / "pixelate_5" / "labels.txt"));
}

TEST(Cli, ErrorsAreOneLineAndNonzero) {
  const auto r = run({"augment", "--input", "/nonexistent/path", "--output", "/tmp/never"});
  EXPECT_NE(r.code, 0);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  EXPECT_NE(run({"bogus"}).code, 0);
  EXPECT_NE(run({"select", "--input", "/nonexistent", "--z", "0.9"}).code, 0);
}
