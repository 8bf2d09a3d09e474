#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "selfheal_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(SELFHEAL_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_file(const std::string& name, const std::string& text) {
    fs::create_directories(kRoot);
    const fs::path p = kRoot / name;
    std::ofstream(p) << text;
    return p;
}

// Coarse and short so every command finishes in well under a second.
const char* kSmall = R"({"n_div": 8, "dt": 20000, "t_max": 4e5, "record_every": 1,
                          "sweep": {"values": [0, 30, 90], "sigmas": [0.01, 0.02], "gammas": [0.01, 0.03]}})";

std::string toy_dataset(std::uint64_t seed, bool one_class) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> s(0.005, 0.03), early(0.0, 1e5), late(2e6, 3e6);
    std::ostringstream os;
    os << "sigma,gamma,t,H\n";
    os.precision(17);
    for (int i = 0; i < 200; ++i) {
        const int h = one_class ? 1 : i % 2;
        os << s(rng) << ',' << s(rng) << ',' << (h ? late(rng) : early(rng)) << ',' << h << '\n';
    }
    return os.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        fs::remove_all(kRoot);
        small_ = write_file("small.json", kSmall).string();
    }
    void TearDown() override { fs::remove_all(kRoot); }

    std::string out(const std::string& name) const { return (kRoot / name).string(); }

    std::string small_;
};

}  // namespace

TEST_F(Cli, SimulateWritesTraceAndManifest) {
    ASSERT_EQ(run("simulate --config " + small_ + " --out " + out("sim")), 0);
    const std::string trace = slurp(kRoot / "sim" / "trace.csv");
    EXPECT_EQ(trace.rfind("t,healing", 0), 0u);
    const auto manifest = nlohmann::json::parse(slurp(kRoot / "sim" / "manifest.json"));
    EXPECT_EQ(manifest["command"], "simulate");
    bool listed = false;
    for (const auto& f : manifest["files"]) listed |= f["path"] == "trace.csv";
    EXPECT_TRUE(listed);
}

TEST_F(Cli, CmmTraceCarriesGateColumns) {
    ASSERT_EQ(run("simulate --model cmm --config " + small_ + " --out " + out("cmm")), 0);
    const std::string trace = slurp(kRoot / "cmm" / "trace.csv");
    const std::string header = trace.substr(0, trace.find('\n'));
    EXPECT_NE(header.find("gate"), std::string::npos);
    const std::string row = trace.substr(header.size() + 1, trace.find('\n', header.size() + 1) - header.size() - 1);
    EXPECT_EQ(row.find("nan"), std::string::npos);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
    EXPECT_EQ(run("simulate --config " + out("absent.json") + " --out " + out("x")), 2);
    EXPECT_EQ(run("simulate --config " + write_file("typo.json", R"({"ndiv": 8})").string() + " --out " + out("x")), 2);
    EXPECT_EQ(run("simulate --config " + write_file("neg.json", R"({"dt": -1})").string() + " --out " + out("x")), 2);
    EXPECT_EQ(run("simulate --bogus-flag"), 2);
    EXPECT_EQ(run("sweep diagonal --config " + small_), 2);
}

TEST_F(Cli, NumericalFailureExitsThree) {
    const auto cfg = write_file("blowup.json", R"({"n_div": 8, "law": {"alpha": 1e308, "gamma": 0}})");
    EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + out("blow")), 3);
}

TEST_F(Cli, AngleSweepIsIdenticalAcrossWorkerCounts) {
    ASSERT_EQ(run("sweep angle --workers 1 --config " + small_ + " --out " + out("a1")), 0);
    ASSERT_EQ(run("sweep angle --workers 3 --config " + small_ + " --out " + out("a3")), 0);
    const std::string a = slurp(kRoot / "a1" / "angle_sweep.csv");
    EXPECT_EQ(a, slurp(kRoot / "a3" / "angle_sweep.csv"));
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 4);
}

TEST_F(Cli, WidthSweepHonoursDCracked) {
    const auto cfg = write_file("width.json", R"({"n_div": 8, "dt": 20000, "t_max": 4e5, "sweep": {"values": [0.01, 0.02]}})");
    ASSERT_EQ(run("sweep width --d-cracked 1e-9 --config " + cfg.string() + " --out " + out("w")), 0);
    const auto manifest = nlohmann::json::parse(slurp(kRoot / "w" / "manifest.json"));
    EXPECT_DOUBLE_EQ(manifest["config"]["d_cracked_override"].get<double>(), 1e-9);
    const std::string csv = slurp(kRoot / "w" / "width_sweep.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(Cli, SurfaceSweepWritesGrid) {
    ASSERT_EQ(run("sweep surface --config " + small_ + " --out " + out("s")), 0);
    const std::string csv = slurp(kRoot / "s" / "surface.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST_F(Cli, DatasetTrainEvalPipeline) {
    const auto cfg = write_file("ds.json", R"({"dataset": {
        "sigma": {"lower": 0.01, "upper": 0.03, "step": 0.01},
        "gamma": {"lower": 0.01, "upper": 0.03, "step": 0.01},
        "t": {"lower": 1e5, "upper": 2e6, "step": 1e5},
        "base": {"n_div": 8, "dt": 20000}}})");
    ASSERT_EQ(run("dataset --config " + cfg.string() + " --out " + out("ds")), 0);
    const std::string ds = slurp(kRoot / "ds" / "dataset.csv");
    EXPECT_EQ(std::count(ds.begin(), ds.end(), '\n'), 1 + 3 * 3 * 20);

    ASSERT_EQ(run("dataset --workers 2 --config " + cfg.string() + " --out " + out("ds2")), 0);
    EXPECT_EQ(ds, slurp(kRoot / "ds2" / "dataset.csv"));
}

TEST_F(Cli, TrainWritesFiveModelsAndEvalScoresToyPerfectly) {
    const auto data = write_file("toy.csv", toy_dataset(3, false));
    ASSERT_EQ(run("train --data " + data.string() + " --out " + out("m")), 0);
    for (const char* name : {"knn", "gnb", "logreg", "linsvm", "mlp"})
        EXPECT_TRUE(fs::exists(kRoot / "m" / (std::string("model_") + name + ".txt"))) << name;
    const auto manifest = nlohmann::json::parse(slurp(kRoot / "m" / "manifest.json"));
    EXPECT_EQ(manifest["files"].size(), 6u);
    EXPECT_EQ(manifest["seed"], 42);

    ASSERT_EQ(run("eval --split all --data " + data.string() + " --model-dir " + out("m") + " --out " + out("e")), 0);
    std::istringstream metrics(slurp(kRoot / "e" / "metrics.csv"));
    std::string line;
    std::getline(metrics, line);
    EXPECT_EQ(line, "model,accuracy,precision,recall,f1");
    int rows = 0;
    while (std::getline(metrics, line)) {
        ++rows;
        EXPECT_EQ(line.substr(line.find(',')), ",1.000000,1.000000,1.000000,1.000000") << line;
    }
    EXPECT_EQ(rows, 5);
}

TEST_F(Cli, TrainingIsByteReproducible) {
    const auto data = write_file("toy.csv", toy_dataset(4, false));
    ASSERT_EQ(run("train --seed 7 --models mlp,linsvm --data " + data.string() + " --out " + out("r1")), 0);
    ASSERT_EQ(run("train --seed 7 --models mlp,linsvm --data " + data.string() + " --out " + out("r2")), 0);
    EXPECT_EQ(slurp(kRoot / "r1" / "model_mlp.txt"), slurp(kRoot / "r2" / "model_mlp.txt"));
    EXPECT_EQ(slurp(kRoot / "r1" / "validation_metrics.csv"), slurp(kRoot / "r2" / "validation_metrics.csv"));
    const auto m1 = nlohmann::json::parse(slurp(kRoot / "r1" / "manifest.json"));
    const auto m2 = nlohmann::json::parse(slurp(kRoot / "r2" / "manifest.json"));
    EXPECT_EQ(m1["files"], m2["files"]);
}

TEST_F(Cli, DataErrorsExitFour) {
    const auto single = write_file("single.csv", toy_dataset(5, true));
    EXPECT_EQ(run("train --models gnb --data " + single.string() + " --out " + out("d1")), 4);

    const auto data = write_file("toy.csv", toy_dataset(6, false));
    ASSERT_EQ(run("train --models knn --data " + data.string() + " --out " + out("d2")), 0);
    std::string model = slurp(kRoot / "d2" / "model_knn.txt");
    model.resize(model.size() / 2);
    std::ofstream(kRoot / "d2" / "model_knn.txt") << model;
    EXPECT_EQ(run("eval --models knn --data " + data.string() + " --model-dir " + out("d2") + " --out " + out("d3")), 4);

    const auto bad = write_file("bad.csv", "x,y\n1,2\n");
    EXPECT_EQ(run("train --data " + bad.string() + " --out " + out("d4")), 4);
}
