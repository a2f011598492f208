#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <potentia/scenario.hpp>

namespace fs = std::filesystem;
using namespace potentia;

namespace {

struct Result {
    int code = -1;
    std::string out;  // stdout and stderr together
};

Result cli(const std::string& args) {
    const std::string cmd = std::string(POTENTIA_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t c = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++c;
    return c;
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / ("potentia_cli_" + std::to_string(getpid()) + "_" + info->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string write(const std::string& name, const std::string& text) {
        const auto p = dir / name;
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    }
    std::string write_json(const std::string& name, const Json& j) { return write(name, j.dump(2)); }
};

}  // namespace

TEST_F(Cli, ListPrintsEveryBuiltinOnce) {
    const auto r = cli("list");
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream in(r.out);
    std::set<std::string> ids;
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        ids.insert(line.substr(0, line.find('\t')));
    }
    EXPECT_EQ(lines, 10u);
    EXPECT_EQ(ids.size(), 10u);
    for (const char* id : {"cramer_lundberg_exp", "cramer_lundberg_pareto", "expkill_indicator_ball",
                           "expkill_indicator_quadrant", "twod_product", "twod_comonotone", "quadrant_ruin_2d",
                           "prop_reinsurance", "consumption_utility", "kernel_decay_probe"})
        EXPECT_TRUE(ids.count(id)) << id;
}

TEST_F(Cli, UnknownKeyIsAConfigError) {
    Json j = *builtin_config("cramer_lundberg_exp");
    j["model"]["foo"] = 1;
    const auto r = cli("run " + write_json("bad.json", j) + " --output " + (dir / "o").string());
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("model.foo"), std::string::npos) << r.out;
}

TEST_F(Cli, WrongTypeNamesTheKey) {
    Json j = *builtin_config("cramer_lundberg_exp");
    j["mc"]["n_paths"] = "many";
    const auto r = cli("run " + write_json("bad.json", j));
    EXPECT_EQ(r.code, 2) << r.out;
    EXPECT_NE(r.out.find("mc.n_paths"), std::string::npos) << r.out;
}

TEST_F(Cli, SyntaxErrorsAndMissingTargetsAreConfigErrors) {
    EXPECT_EQ(cli("run " + write("broken.json", "{\"id\": ")).code, 2);
    EXPECT_EQ(cli("run no_such_scenario").code, 2);
    EXPECT_EQ(cli("run").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
}

TEST_F(Cli, ToleranceFailureExitsOne) {
    Json j = *builtin_config("cramer_lundberg_exp");
    j["mc"]["n_paths"] = 0;
    j["tolerances"]["solver_exact_abs"] = 1e-14;
    const auto r = cli("run " + write_json("tight.json", j) + " --output " + (dir / "o").string());
    EXPECT_EQ(r.code, 1) << r.out;
    EXPECT_NE(r.out.find("solver_vs_exact"), std::string::npos) << r.out;
}

TEST_F(Cli, ShortHorizonIsANumericalValidityFailure) {
    Json j = *builtin_config("cramer_lundberg_exp");
    j["mc"]["n_paths"] = 2000;
    j["mc"]["horizon"] = 1.0;
    const auto r = cli("run " + write_json("short.json", j) + " --output " + (dir / "o").string());
    EXPECT_EQ(r.code, 3) << r.out;
    EXPECT_NE(r.out.find("bias_proxy"), std::string::npos) << r.out;
}

TEST_F(Cli, RunIsByteIdenticalAcrossThreadCounts) {
    const std::string base = "run cramer_lundberg_exp --n-paths 4000 --seed 99 --output ";
    const auto a = cli(base + (dir / "a").string() + " --threads 1");
    const auto b = cli(base + (dir / "b").string() + " --threads 3");
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_EQ(b.code, 0) << b.out;
    const std::string ca = slurp(dir / "a" / "cramer_lundberg_exp.csv");
    ASSERT_FALSE(ca.empty());
    EXPECT_EQ(ca, slurp(dir / "b" / "cramer_lundberg_exp.csv"));
    EXPECT_EQ(ca.rfind("# potentia-csv v1\n", 0), 0u);
    EXPECT_NE(ca.find("\"seed\":99"), std::string::npos);
}

TEST_F(Cli, PlotDrawsOneMarkerPerPoint) {
    const std::string header = "label,x,point,prediction,solver,solver_pk,mc,mc_se,mc_alt,mc_alt_se,exact,"
                               "ratio_solver,ratio_mc,bias_proxy,value,limit,pass,reason\n";
    const std::string csv = "# potentia-csv v1\n" + header +
                            "tail,10,10,nan,nan,nan,nan,nan,nan,nan,nan,1.2,nan,0,nan,nan,1,\n"
                            "tail,100,100,nan,nan,nan,nan,nan,nan,nan,nan,1.05,nan,0,nan,nan,1,\n";
    const auto path = write("two.csv", csv);
    const auto r1 = cli("plot " + path + " --output " + (dir / "p1").string());
    const auto r2 = cli("plot " + path + " --output " + (dir / "p2").string());
    ASSERT_EQ(r1.code, 0) << r1.out;
    ASSERT_EQ(r2.code, 0) << r2.out;
    const auto svg = slurp(dir / "p1" / "two__tail__ratio_solver.svg");
    EXPECT_EQ(count(svg, "class=\"marker\""), 2u);
    EXPECT_EQ(svg, slurp(dir / "p2" / "two__tail__ratio_solver.svg"));
    EXPECT_EQ(std::distance(fs::directory_iterator(dir / "p1"), fs::directory_iterator{}), 1);
}

TEST_F(Cli, PlotOfAnEmptyReportWarnsAndWritesNothing) {
    const auto path = write("empty.csv", "# potentia-csv v1\nlabel,x,ratio_solver\n");
    const auto r = cli("plot " + path + " --output " + (dir / "p").string());
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("warning"), std::string::npos) << r.out;
    EXPECT_FALSE(fs::exists(dir / "p") && !fs::is_empty(dir / "p"));
}

TEST_F(Cli, PlotRejectsForeignCsv) {
    const auto r = cli("plot " + write("foreign.csv", "a,b\n1,2\n"));
    EXPECT_EQ(r.code, 2) << r.out;
}
