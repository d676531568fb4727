#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mtgcn/data.hpp"
#include "mtgcn/format.hpp"
#include "mtgcn/report.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string output; // stdout and stderr interleaved
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("mtgcn_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    CliRun run(const std::string& args) const {
        const std::string log = path("cli.log");
        const std::string cmd = std::string("\"") + MTGCN_CLI_PATH + "\" " + args + " > \"" + log + "\" 2>&1";
        const int status = std::system(cmd.c_str());
        CliRun r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.output = slurp(log);
        return r;
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    std::string gen(const std::string& name, const std::string& flags) const {
        const auto out = path(name);
        const auto r = run("gen-synth " + flags + " --out \"" + out + "\"");
        EXPECT_EQ(r.code, 0) << r.output;
        return out;
    }

    fs::path dir_;
};

std::vector<std::vector<double>> read_csv(const std::string& p) {
    std::ifstream in(p);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        rows.emplace_back();
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            rows.back().push_back(*mtgcn::parse_double(cell));
    }
    return rows;
}

const char* kSmallData = "--nodes 16 --slots 7 --pattern mixed --density 0.3 --noise 0.02 --seed 3";

} // namespace

TEST_F(CliTest, GenSynthIsParseableAndByteIdentical) {
    const auto a = gen("a.tsv", "--nodes 64 --slots 8 --pattern periodic --density 0.1 --seed 7");
    const auto b = gen("b.tsv", "--nodes 64 --slots 8 --pattern periodic --density 0.1 --seed 7");
    EXPECT_EQ(slurp(a), slurp(b));
    const auto ds = mtgcn::parse_dataset(a);
    EXPECT_EQ(ds.n_nodes, 64u);
    EXPECT_EQ(ds.n_slots, 8u);
    EXPECT_FALSE(ds.observations.empty());
}

TEST_F(CliTest, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run("gen-synth --slots 0 --out \"" + path("x.tsv") + "\"").code, 2);
    EXPECT_EQ(run("gen-synth --density 0 --out \"" + path("x.tsv") + "\"").code, 2);
    EXPECT_EQ(run("gen-synth --density abc --out \"" + path("x.tsv") + "\"").code, 2);
    EXPECT_EQ(run("gen-synth").code, 2);
    EXPECT_EQ(run("train").code, 2);
    EXPECT_EQ(run("no-such-command").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("transform-matrix --kind wavelet --size 4 --out \"" + path("m.csv") + "\"").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, TrainWritesReportAndReproducesBytes) {
    const auto data = gen("d.tsv", kSmallData);
    const std::string flags = "train --data \"" + data + "\" --transform ensemble --seed 7 --dim 6 --epochs 25";
    const auto r1 = run(flags + " --checkpoint \"" + path("c.ckpt") + "\" --report \"" + path("r1.txt") + "\"");
    ASSERT_EQ(r1.code, 0) << r1.output;
    EXPECT_NE(r1.output.find("haar: padding 7 slots to 8"), std::string::npos) << r1.output;
    const auto r2 = run(flags + " --checkpoint \"" + path("c.ckpt") + "\" --report \"" + path("r1b.txt") + "\"");
    ASSERT_EQ(r2.code, 0) << r2.output;

    const auto report = slurp(path("r1.txt"));
    // --report is not echoed into the report, so the two files must match byte for byte
    EXPECT_EQ(report, slurp(path("r1b.txt")));
    std::istringstream in(report);
    const auto m = mtgcn::read_report_metrics(in);
    ASSERT_EQ(m.size(), 3u);
    for (const auto& [split, v] : m) {
        EXPECT_TRUE(std::isfinite(v.mae) && std::isfinite(v.rmse)) << split;
        EXPECT_GT(v.count, 0u);
    }
    EXPECT_NE(report.find("transform=ensemble"), std::string::npos);
    EXPECT_NE(report.find("seed=7"), std::string::npos);
}

TEST_F(CliTest, HaarWithoutPaddingWhenSlotsArePowerOfTwo) {
    const auto data = gen("d8.tsv", "--nodes 12 --slots 8 --density 0.3 --seed 2");
    const auto r = run("train --data \"" + data + "\" --transform haar --dim 4 --epochs 5 --checkpoint \"" +
                       path("c.ckpt") + "\" --report \"" + path("r.txt") + "\"");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_EQ(r.output.find("padding"), std::string::npos);
}

TEST_F(CliTest, EvalReproducesTrainMetricsExactly) {
    const auto data = gen("d.tsv", kSmallData);
    const auto ck = path("c.ckpt");
    ASSERT_EQ(run("train --data \"" + data + "\" --transform dct --seed 4 --dim 5 --epochs 20 --checkpoint \"" + ck +
                  "\" --report \"" + path("train.txt") + "\"")
                  .code,
              0);
    const auto r = run("eval --data \"" + data + "\" --checkpoint \"" + ck + "\" --kappa 5 --report \"" +
                       path("eval.txt") + "\"");
    ASSERT_EQ(r.code, 0) << r.output;
    std::istringstream a(slurp(path("train.txt"))), b(slurp(path("eval.txt")));
    const auto mt = mtgcn::read_report_metrics(a), me = mtgcn::read_report_metrics(b);
    ASSERT_EQ(mt.size(), 3u);
    ASSERT_EQ(me.size(), 3u);
    for (const auto& [split, v] : mt) {
        EXPECT_EQ(me.at(split).mae, v.mae) << split;
        EXPECT_EQ(me.at(split).rmse, v.rmse) << split;
        EXPECT_EQ(me.at(split).count, v.count) << split;
    }
}

TEST_F(CliTest, EvalRejectsMismatchedDataset) {
    const auto data = gen("d.tsv", kSmallData);
    const auto other = gen("o.tsv", "--nodes 20 --slots 7 --density 0.3 --seed 3");
    const auto ck = path("c.ckpt");
    ASSERT_EQ(run("train --data \"" + data + "\" --transform identity --dim 3 --epochs 3 --checkpoint \"" + ck +
                  "\" --report \"" + path("r.txt") + "\"")
                  .code,
              0);
    const auto r = run("eval --data \"" + other + "\" --checkpoint \"" + ck + "\"");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("expects 16 nodes, dataset has 20"), std::string::npos) << r.output;
}

TEST_F(CliTest, TrainRejectsMalformedDataWithExitOne) {
    const auto bad = path("bad.tsv");
    std::ofstream(bad) << "1\t0\t1\t0.5\n1\t0\t1\t0.6\n";
    const auto r = run("train --data \"" + bad + "\" --checkpoint \"" + path("c") + "\" --report \"" +
                       path("r") + "\"");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("line 2"), std::string::npos) << r.output;
}

TEST_F(CliTest, TransformMatrixHaarRows) {
    const auto out = path("haar.csv");
    ASSERT_EQ(run("transform-matrix --kind haar --size 4 --out \"" + out + "\"").code, 0);
    const auto rows = read_csv(out);
    const double s = 1.0 / std::sqrt(2.0);
    const std::vector<std::vector<double>> ref{
        {0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, -0.5, -0.5}, {s, -s, 0, 0}, {0, 0, s, -s}};
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t u = 0; u < 4; ++u) {
        ASSERT_EQ(rows[u].size(), 4u);
        for (std::size_t v = 0; v < 4; ++v)
            EXPECT_NEAR(rows[u][v], ref[u][v], 1e-15);
    }
}

TEST_F(CliTest, TransformMatrixDftWritesRealAndImaginaryParts) {
    ASSERT_EQ(run("transform-matrix --kind dft --size 2 --out \"" + path("dft.csv") + "\"").code, 0);
    const auto re = read_csv(path("dft_real.csv")), im = read_csv(path("dft_imag.csv"));
    const double s = 1.0 / std::sqrt(2.0);
    ASSERT_EQ(re.size(), 2u);
    ASSERT_EQ(im.size(), 2u);
    EXPECT_NEAR(re[0][0], s, 1e-15);
    EXPECT_NEAR(re[0][1], s, 1e-15);
    EXPECT_NEAR(re[1][0], s, 1e-15);
    EXPECT_NEAR(re[1][1], -s, 1e-15);
    for (const auto& row : im)
        for (double v : row)
            EXPECT_EQ(v, 0.0);
}

TEST_F(CliTest, TransformMatrixHaarRejectsSizeThree) {
    const auto r = run("transform-matrix --kind haar --size 3 --out \"" + path("h.csv") + "\"");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("size must be a power of two"), std::string::npos) << r.output;
}

TEST_F(CliTest, GradCheckPasses) {
    auto r = run("grad-check");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("PASS max relative error"), std::string::npos) << r.output;
    r = run("grad-check --transform ensemble");
    EXPECT_EQ(r.code, 0) << r.output;
    r = run("grad-check --transform haar --slots 3");
    EXPECT_EQ(r.code, 0) << r.output;
}

TEST_F(CliTest, AblationTableIsCompleteAndDeterministic) {
    const auto data = gen("d.tsv", kSmallData);
    const std::string flags = "ablation --data \"" + data + "\" --seeds 2 --dim 4 --epochs 8";
    ASSERT_EQ(run(flags + " --out \"" + path("a1.csv") + "\"").code, 0);
    ASSERT_EQ(run(flags + " --out \"" + path("a2.csv") + "\"").code, 0);
    const auto table = slurp(path("a1.csv"));
    EXPECT_EQ(table, slurp(path("a2.csv")));
    std::istringstream in(table);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        lines.push_back(line);
    ASSERT_EQ(lines.size(), 7u); // seeds comment, header, 5 schemes
    EXPECT_EQ(lines[0], "# seeds=1,2");
    EXPECT_EQ(lines[1].rfind("scheme,mae_mean,mae_std,rmse_mean,rmse_std,", 0), 0u);
    const char* schemes[] = {"identity", "dft", "dct", "haar", "ensemble"};
    for (int k = 0; k < 5; ++k) {
        EXPECT_EQ(lines[2 + k].rfind(std::string(schemes[k]) + ",", 0), 0u) << lines[2 + k];
        std::stringstream ss(lines[2 + k]);
        std::string cell;
        std::getline(ss, cell, ',');
        int cells = 0;
        while (std::getline(ss, cell, ',')) {
            const auto v = mtgcn::parse_double(cell);
            ASSERT_TRUE(v.has_value()) << cell;
            EXPECT_TRUE(std::isfinite(*v));
            ++cells;
        }
        EXPECT_EQ(cells, 6);
    }
    EXPECT_EQ(lines[2].substr(lines[2].size() - 4), ",0,0");
}
