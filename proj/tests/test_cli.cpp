#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "unmixer/unmixer.hpp"

using namespace unmixer;
namespace fs = std::filesystem;

namespace {

const fs::path work = fs::temp_directory_path() / "unmixer_cli_test";

struct CliResult {
    int code;
    std::string err;
};

CliResult run(const std::string& args)
{
    const fs::path err = work / "stderr.txt";
    const std::string cmd = std::string(UNMIXER_CLI) + " " + args + " 2> " + err.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, io::read_text(err)};
}

std::string config(const std::string& name)
{
    return std::string(UNMIXER_CONFIG_DIR) + "/" + name;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        fs::remove_all(work);
        fs::create_directories(work);
        ASSERT_EQ(run("synth -c " + config("default.json") + " -o " + (work / "data").string()).code, 0);
    }
};

} // namespace

TEST_F(Cli, SynthWritesDefaultShapes)
{
    const Matrix m = io::read_matrix_csv(work / "data" / "M.csv");
    EXPECT_EQ(m.rows(), 1000);
    EXPECT_EQ(m.cols(), 200);
    EXPECT_GE(m.minCoeff(), 0.0);
    const Matrix wh = io::read_matrix_csv(work / "data" / "W.csv") * io::read_matrix_csv(work / "data" / "H.csv");
    EXPECT_LE((m - wh).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(fs::exists(work / "data" / "P.csv"));
    EXPECT_TRUE(fs::exists(work / "data" / "manifest.json"));
}

TEST_F(Cli, SynthIsByteIdenticalAcrossRuns)
{
    ASSERT_EQ(run("synth -c " + config("default.json") + " -o " + (work / "again").string()).code, 0);
    for (const char* f : {"M.csv", "W.csv", "H.csv", "P.csv", "manifest.json"}) {
        EXPECT_EQ(io::read_text(work / "data" / f), io::read_text(work / "again" / f)) << f;
    }
}

TEST_F(Cli, ShippedConfigsAreValid)
{
    for (const char* name : {"interference.json", "noisy.json", "markov.json"}) {
        EXPECT_EQ(run("synth -c " + config(name) + " -o " + (work / name).string()).code, 0) << name;
    }
}

TEST_F(Cli, FactorizeAndEvaluate)
{
    const fs::path rec = work / "rec";
    const CliResult f = run("factorize -i " + (work / "data" / "M.csv").string() + " -r 5 --preset paper-4.2 -o "
                      + rec.string());
    ASSERT_EQ(f.code, 0) << f.err;
    for (const char* name : {"W_rec.csv", "H_rec.csv", "P_rec.csv", "A_opt.csv", "diagnostics.json"}) {
        EXPECT_TRUE(fs::exists(rec / name)) << name;
    }
    const io::json diag = io::read_json(rec / "diagnostics.json");
    EXPECT_EQ(diag["weights"]["beta"], -1.0);
    EXPECT_TRUE(diag["penalties"].contains("p5"));

    const fs::path report = work / "eval" / "report.json";
    const CliResult e = run("evaluate -r " + rec.string() + " -t " + (work / "data").string() + " -o " + report.string());
    ASSERT_EQ(e.code, 0) << e.err;
    const io::json rep = io::read_json(report);
    EXPECT_EQ(rep["permutation"].size(), 5u);
    EXPECT_LE(rep["residual"].get<double>(), 1e-6);
    const std::string spectra = io::read_text(work / "eval" / "spectra_overlay.csv");
    EXPECT_EQ(spectra.substr(0, spectra.find('\n')), "wavenumber,series,value");
    EXPECT_EQ(spectra.substr(spectra.find('\n') + 1, 29), "1.0000000000000000e+02,true_0");
    const std::string kin = io::read_text(work / "eval" / "kinetics_overlay.csv");
    EXPECT_EQ(kin.substr(0, kin.find('\n')), "time,series,value");
}

TEST_F(Cli, EvaluateTruthAgainstItself)
{
    const fs::path self = work / "self";
    fs::create_directories(self);
    fs::copy_file(work / "data" / "W.csv", self / "W_rec.csv");
    fs::copy_file(work / "data" / "H.csv", self / "H_rec.csv");
    fs::copy_file(work / "data" / "P.csv", self / "P_rec.csv");
    ASSERT_EQ(run("evaluate -r " + self.string() + " -t " + (work / "data").string() + " -o "
                  + (self / "report.json").string()).code, 0);
    const io::json rep = io::read_json(self / "report.json");
    for (const auto& c : rep["correlations"]) {
        EXPECT_DOUBLE_EQ(c.get<double>(), 1.0);
    }
    EXPECT_EQ(rep["permutation"], io::json({0, 1, 2, 3, 4}));
}

TEST_F(Cli, ExitCodes)
{
    const std::string m = (work / "data" / "M.csv").string();
    // rank beyond the data
    CliResult r = run("factorize -i " + m + " -r 7 -o " + (work / "r7").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("achievable rank"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("\"error\":\"data\""), std::string::npos) << r.err;

    EXPECT_EQ(run("factorize -i " + m + " -r 5 --preset nope -o " + (work / "x").string()).code, 2);
    EXPECT_EQ(run("factorize -i " + m + " -r 0 -o " + (work / "x").string()).code, 2);
    EXPECT_EQ(run("factorize -r 5").code, 2);
    EXPECT_EQ(run("bogus").code, 2);

    io::atomic_write(work / "broken.csv", "index,c0\n0,1\n1,oops\n");
    r = run("factorize -i " + (work / "broken.csv").string() + " -r 1 -o " + (work / "x").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("broken.csv:3"), std::string::npos) << r.err;

    io::atomic_write(work / "bad.json", R"({"schema_version": 1, "kinetics": {"model": "rate"}})");
    r = run("synth -c " + (work / "bad.json").string() + " -o " + (work / "x").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("kinetics.rate_matrix"), std::string::npos) << r.err;
}

TEST_F(Cli, EvaluateShapeMismatch)
{
    const fs::path bad = work / "badrec";
    fs::create_directories(bad);
    io::write_matrix_csv(bad / "W_rec.csv", Matrix::Ones(1000, 4));
    io::write_matrix_csv(bad / "H_rec.csv", Matrix::Ones(4, 200));
    io::write_matrix_csv(bad / "P_rec.csv", Matrix::Identity(4, 4));
    const CliResult r = run("evaluate -r " + bad.string() + " -t " + (work / "data").string() + " -o "
                      + (bad / "r.json").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("W_rec.csv is 1000x4"), std::string::npos) << r.err;
}
