#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "gcfed/runner.hpp"

using namespace gcfed;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + GCFED_CLI_PATH + std::string(" ") + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("gcfed_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
                std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& body) {
        const fs::path p = dir_ / "exp.conf";
        std::ofstream(p) << body;
        return p;
    }

    // The single run directory under `root`.
    static fs::path only_run(const fs::path& root) {
        std::vector<fs::path> dirs;
        for (const auto& e : fs::directory_iterator(root)) dirs.push_back(e.path());
        EXPECT_EQ(dirs.size(), 1u);
        return dirs.empty() ? fs::path{} : dirs.front();
    }

    fs::path dir_;
};

const char* kSmall =
    "clients = 6\nparticipants = 2\nrounds = 4\nlocal_epochs = 1\nbatch_size = 10\nalpha = 0.5\n"
    "synthetic.num_classes = 3\nsynthetic.input_dim = 6\nsynthetic.samples_per_class = 20\narch.hidden = 6\n";

}  // namespace

TEST(Summary, Statistics) {
    std::vector<RoundRecord> recs(3);
    recs[0].accuracy = 0;
    recs[1].accuracy = 10;
    recs[2].accuracy = 0;
    const auto s = summarize(recs, 10);
    EXPECT_DOUBLE_EQ(*s.mean_diff, 0.0);
    EXPECT_DOUBLE_EQ(*s.std_diff, 10.0);
    EXPECT_DOUBLE_EQ(*s.min_diff, -10.0);
    EXPECT_DOUBLE_EQ(*s.peak_smoothed_accuracy, 5.0);
    EXPECT_DOUBLE_EQ(*s.final_smoothed_accuracy, 10.0 / 3.0);
    const auto empty = summarize(std::span<const RoundRecord>(recs.data(), 1));
    EXPECT_FALSE(empty.mean_diff.has_value());
    const auto j = nlohmann::json::parse(summary_json(empty));
    EXPECT_EQ(j.size(), 5u);
    EXPECT_TRUE(j["final_smoothed_accuracy"].is_null());
}

TEST(RoundsCsv, Format) {
    RoundRecord r;
    r.round = 3;
    r.accuracy = 12.5;
    r.update_norm = 0.25;
    EXPECT_EQ(rounds_csv_row(r), "3,12.5,0.25,,0");
    r.discrepancy = 0.5;
    r.failed = true;
    EXPECT_EQ(rounds_csv_row(r), "3,12.5,0.25,0.5,1");
    EXPECT_EQ(rounds_csv({}), std::string(kRoundsCsvHeader) + "\r\n");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(Grid, Parse) {
    const auto g = parse_grid("gc.lambda=0,0.25,0.5");
    EXPECT_EQ(g.key, "gc.lambda");
    EXPECT_EQ(g.values, (std::vector<std::string>{"0", "0.25", "0.5"}));
    EXPECT_THROW(parse_grid("gc.lambda"), ConfigError);
    EXPECT_THROW(parse_grid("k=1,,2"), ConfigError);
}

TEST(OutputRoot, Precedence) {
    ::setenv("GCFED_OUT", "/tmp/from_env", 1);
    EXPECT_EQ(output_root(std::string("/tmp/cli")), fs::path("/tmp/cli"));
    EXPECT_EQ(output_root(std::nullopt), fs::path("/tmp/from_env"));
    ::unsetenv("GCFED_OUT");
    EXPECT_EQ(output_root(std::nullopt), fs::path("runs"));
}

TEST_F(CliTest, SimulateZeroRounds) {
    const auto cfg = write_config(std::string(kSmall) + "rounds = 0\n");
    const auto r = run_cli("simulate --config " + cfg.string() + " --out " + (dir_ / "out").string());
    ASSERT_EQ(r.code, 0) << r.out;
    const fs::path run = only_run(dir_ / "out");
    EXPECT_EQ(slurp(run / "rounds.csv"), std::string(kRoundsCsvHeader) + "\r\n");
    EXPECT_EQ(slurp(run / "rounds.jsonl"), "");
    const auto summary = nlohmann::json::parse(slurp(run / "summary.json"));
    EXPECT_TRUE(summary["mean_diff"].is_null());
    EXPECT_TRUE(fs::exists(run / "config.resolved"));
    EXPECT_TRUE(fs::exists(run / "run.log"));
}

TEST_F(CliTest, SimulateWritesOutputsAndResolvedConfigReplays) {
    const auto cfg = write_config(std::string(kSmall) + "strategy = gcfed\nmeasure.discrepancy_every = 2\n"
                                                        "measure.cka_every = 2\n");
    const auto r = run_cli("simulate --config " + cfg.string() + " --out " + (dir_ / "a").string());
    ASSERT_EQ(r.code, 0) << r.out;
    const fs::path run = only_run(dir_ / "a");
    const std::string csv = slurp(run / "rounds.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    std::ifstream jl(run / "rounds.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(jl, line); ++lines) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j["selected"].size(), 2u);
        EXPECT_EQ(j["cka"].size(), j["t"].get<int>() % 2 == 0 ? 2u : 0u);
    }
    EXPECT_EQ(lines, 4u);
    EXPECT_NE(slurp(run / "config.resolved").find("gc.lambda = 0.5"), std::string::npos);

    const auto again = run_cli("simulate --config " + (run / "config.resolved").string() + " --out " +
                               (dir_ / "b").string());
    ASSERT_EQ(again.code, 0) << again.out;
    EXPECT_EQ(slurp(only_run(dir_ / "b") / "rounds.csv"), csv);
}

TEST_F(CliTest, WorkerCountKeepsCsvIdentical) {
    const auto cfg = write_config(std::string(kSmall) + "strategy = globalgc\nmeasure.discrepancy_every = 1\n");
    ASSERT_EQ(run_cli("simulate --config " + cfg.string() + " --workers 1 --out " + (dir_ / "w1").string()).code, 0);
    ASSERT_EQ(run_cli("simulate --config " + cfg.string() + " --workers 3 --out " + (dir_ / "w3").string()).code, 0);
    EXPECT_EQ(slurp(only_run(dir_ / "w1") / "rounds.csv"), slurp(only_run(dir_ / "w3") / "rounds.csv"));
}

TEST_F(CliTest, EnvironmentOutputRoot) {
    const auto cfg = write_config(std::string(kSmall) + "rounds = 1\n");
    const auto r = run_cli("simulate --config " + cfg.string(), "GCFED_OUT=" + (dir_ / "env").string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(only_run(dir_ / "env") / "rounds.csv"));
}

TEST_F(CliTest, SweepLambdaGrid) {
    const auto cfg = write_config(std::string(kSmall) + "strategy = gcfed\nrounds = 2\n");
    const auto r = run_cli("sweep --config " + cfg.string() + " --grid gc.lambda=0,0.25,0.5,0.75,1 --seeds 1 --out " +
                           (dir_ / "sw").string());
    ASSERT_EQ(r.code, 0) << r.out;
    const fs::path sweep = only_run(dir_ / "sw");
    std::size_t runs = 0;
    for (const auto& e : fs::recursive_directory_iterator(sweep)) runs += e.path().filename() == "rounds.csv";
    EXPECT_EQ(runs, 5u);
    const std::string merged = slurp(sweep / "comparison.csv");
    EXPECT_EQ(std::count(merged.begin(), merged.end(), '\n'), 6);
}

TEST_F(CliTest, TheoryCheckPasses) {
    const auto r = run_cli("theory-check --trials 10000");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("gap_before"), std::string::npos) << r.out;
}

TEST_F(CliTest, PartitionStats) {
    const auto cfg = write_config(kSmall);
    const auto r = run_cli("partition-stats --config " + cfg.string());
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("client,size,class_entropy,classes"), std::string::npos);
    EXPECT_NE(r.out.find("# clients=6"), std::string::npos) << r.out;
}

TEST_F(CliTest, ErrorsExitNonzero) {
    const auto bad = write_config("clients = 2\nparticipants = 3\n");
    const auto r = run_cli("simulate --config " + bad.string() + " --out " + (dir_ / "x").string());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.out.find("simulate: config error"), std::string::npos) << r.out;
    EXPECT_NE(run_cli("simulate --config " + (dir_ / "missing.conf").string()).code, 0);
    EXPECT_NE(run_cli("frobnicate").code, 0);

    const auto abort_cfg = write_config(std::string(kSmall) + "lr = 1e300\nfail_policy = abort\n");
    EXPECT_EQ(run_cli("simulate --config " + abort_cfg.string() + " --out " + (dir_ / "y").string()).code, 3);
    const auto cont_cfg = write_config(std::string(kSmall) + "lr = 1e300\n");
    EXPECT_EQ(run_cli("simulate --config " + cont_cfg.string() + " --out " + (dir_ / "z").string()).code, 0);
}
