#include <gtest/gtest.h>

#include <cstdlib>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "fedzip/cli.hpp"
#include "fedzip/flsim.hpp"
#include "test_util.hpp"

using namespace fedzip;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// Noisy model-like weights written as a checkpoint.
std::string write_sample(std::uint64_t seed) {
  auto path = testkit::temp_path("cli") + ".fszt";
  save_checkpoint(testkit::sample_state(seed, 128), path);
  return path;
}

}  // namespace

TEST(Cli, NoArgumentsPrintsUsage) {
  auto r = run({});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownSubcommandAndBadFlagAreUsageErrors) {
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"fl-run", "--rounds", "abc"}).code, kExitUsage);
  EXPECT_EQ(run({"compress", "only-one-arg"}).code, kExitUsage);
}

TEST(Cli, MissingInputNamesFile) {
  auto r = run({"compress", "/nonexistent/missing.fszt", "out.fszu"});
  EXPECT_EQ(r.code, kExitData);
  auto j = nlohmann::json::parse(lines(r.err).front());
  EXPECT_EQ(j["error"], "IoError");
  EXPECT_NE(j["message"].get<std::string>().find("missing.fszt"), std::string::npos);
}

TEST(Cli, CompressDecompressAnalyze) {
  auto in = write_sample(1);
  auto packed = testkit::temp_path("cli") + ".fszu";
  auto restored = testkit::temp_path("cli") + ".fszt";
  auto r = run({"compress", in, packed, "--codec", "pq", "--rel-eb", "1e-2", "--threshold", "1024"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto summary = nlohmann::json::parse(r.out);
  EXPECT_GT(summary["ratio"].get<double>(), 1.0);
  ASSERT_EQ(run({"decompress", packed, restored}).code, 0);

  auto a = load_checkpoint(in), b = load_checkpoint(restored);
  EXPECT_TRUE(identical(a.at("fc1.bias"), b.at("fc1.bias")));
  EXPECT_TRUE(identical(a.at("bn.num_batches_tracked"), b.at("bn.num_batches_tracked")));

  auto dist = run({"analyze-error", in, restored, "--bins", "21", "--rel-eb", "1e-2"});
  ASSERT_EQ(dist.code, 0) << dist.err;
  auto l = lines(dist.out);
  ASSERT_EQ(l.size(), 1u + 21u + 1u);
  EXPECT_EQ(l[0], "bin_left,bin_right,count");
  auto trailer = nlohmann::json::parse(l.back());
  EXPECT_GT(trailer["b"].get<double>(), 0.0);
  EXPECT_LE(trailer["max_abs_error"].get<double>(), trailer["eps_abs"].get<double>());

  auto one = run({"analyze-error", in, restored, "--entry", "fc2.weight", "--bins", "5"});
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_EQ(nlohmann::json::parse(lines(one.out).back())["samples"].get<std::size_t>(), 20u * 128u);

  for (const auto& p : {in, packed, restored}) std::filesystem::remove(p);
}

TEST(Cli, CorruptUpdateIsDataError) {
  auto in = write_sample(2);
  auto packed = testkit::temp_path("cli") + ".fszu";
  ASSERT_EQ(run({"compress", in, packed}).code, 0);
  auto bytes = read_file(packed);
  bytes[bytes.size() / 2] ^= 0xFF;
  write_file(packed, bytes);
  auto r = run({"decompress", packed, packed + ".out"});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_TRUE(nlohmann::json::accept(lines(r.err).front()));
  std::filesystem::remove(in);
  std::filesystem::remove(packed);
}

TEST(Cli, BenchNetCurve) {
  auto r = run({"bench-net", "--size-mb", "100", "--ratio", "10", "--tc", "0.5", "--td", "0.5", "--bw-range",
                "1e6:1e10", "--points", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto l = lines(r.out);
  ASSERT_EQ(l.size(), 6u);
  EXPECT_EQ(l[0], "bandwidth,time_uncompressed,time_compressed,worthwhile");
  EXPECT_EQ(l[1].back(), '1');   // 1 Mbps: compression pays
  EXPECT_EQ(l[5].back(), '0');   // 10 Gbps: it does not
  EXPECT_EQ(run({"bench-net", "--bw-range", "5"}).code, kExitData);
}

TEST(Cli, FlRunWritesReportAndModel) {
  auto report = testkit::temp_path("cli") + ".csv";
  auto model = testkit::temp_path("cli") + ".fszt";
  auto r = run({"fl-run", "--clients", "2", "--rounds", "2", "--codec", "cbt", "--rel-eb", "1e-2", "--out", report,
                "--save-model", model, "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(std::string(reinterpret_cast<const char*>(read_file(report).data()), read_file(report).size())).size(),
            1u + 2u * 2u);
  auto m = load_checkpoint(model);
  EXPECT_EQ(m.size(), 4u);
  std::filesystem::remove(report);
  std::filesystem::remove(model);
}

TEST(Cli, FlRunJsonLines) {
  auto r = run({"fl-run", "--clients", "1", "--rounds", "1", "--codec", "none", "--format", "jsonl"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(lines(r.out).front());
  EXPECT_EQ(j["codec"], "none");
  EXPECT_EQ(j["ratio"].get<double>(), 1.0);
}

TEST(Cli, SweepSelectsEpsilon) {
  auto r = run({"sweep", "--rounds", "3", "--eps", "1e-1,1e-2,1e-3", "--slack", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out).size(), 4u);
  auto sel = nlohmann::json::parse(lines(r.err).front());
  EXPECT_TRUE(sel.contains("selected_epsilon"));
  EXPECT_EQ(run({"sweep", "--eps", "1e-1,abc"}).code, kExitData);
}

TEST(Cli, SelectCodecOverGrid) {
  auto in = write_sample(3);
  auto r = run({"select", in, "--codecs", "pq,cbt", "--eps", "1e-1,1e-2", "--bw", "1e6", "--reps", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out).size(), 1u + 4u);
  auto sel = nlohmann::json::parse(lines(r.err).front());
  EXPECT_TRUE(sel["codec"] == "predict_quantize" || sel["codec"] == "const_block_truncate");
  EXPECT_FALSE(sel["pareto_front"].empty());
  std::filesystem::remove(in);
}

TEST(Cli, BenchReport) {
  auto in = write_sample(4);
  auto r = run({"bench", in, "--reps", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto l = lines(r.out);
  EXPECT_EQ(l.size(), 1u + 5u + 1u);
  std::filesystem::remove(in);
}

TEST(Cli, BinaryExitCodes) {
  auto status = [](const std::string& cmd) {
    int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(FEDZIP_BIN), 1);
  EXPECT_EQ(status(std::string(FEDZIP_BIN) + " compress /nonexistent/missing.fszt out"), 2);
  EXPECT_EQ(status(std::string(FEDZIP_BIN) + " --help"), 0);
}
