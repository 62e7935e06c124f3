// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gpfn/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gpfn_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

constexpr const char* kSmallRun = R"(
[run]
seed = 4
[data]
kind = two_gaussians
n_train = 256
n_eval = 200
[model]
hidden = 16, 16
time_embed = 4
[train]
epochs = 2
batch = 64
T = 50
[sample]
n_samples = 200
[eval]
div_pairs = 50
)";

gpfn::RunConfig small_run(const fs::path& out, const std::string& extra = "") {
    return gpfn::resolve(gpfn::Config::parse(std::string(kSmallRun) + extra, "small.ini"), std::nullopt, out);
}

// ---------------------------------------------------------------- config

TEST(Config, ErrorsCarryLineNumbers) {
    try {
        gpfn::Config::parse("[train]\nepochs = 3\nnot a pair\n", "run.ini");
        FAIL() << "expected a parse error";
    } catch (const gpfn::ConfigParseError& e) {
        EXPECT_NE(std::string(e.what()).find("run.ini:3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(gpfn::Config::parse("[train]\nepochs = 3\nepochs = 4\n"), gpfn::ConfigParseError);
    EXPECT_THROW(gpfn::Config::parse("epochs = 3\n"), gpfn::ConfigParseError);
    EXPECT_THROW(gpfn::Config::parse("[train\n"), gpfn::ConfigParseError);
}

TEST(Config, BadFieldValuesNameTheField) {
    try {
        gpfn::resolve(gpfn::Config::parse("[train]\n\nepochs = many\n", "run.ini"));
        FAIL() << "expected a field error";
    } catch (const gpfn::ConfigParseError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("train.epochs"), std::string::npos) << msg;
        EXPECT_NE(msg.find(":3"), std::string::npos) << msg;
    }
    EXPECT_THROW(gpfn::resolve(gpfn::Config::parse("[train]\nregime = ddpm\n")), gpfn::InvalidArgument);
    EXPECT_THROW(gpfn::resolve(gpfn::Config::parse("[data]\nkind = moons\n")), gpfn::InvalidArgument);
}

TEST(Config, SeedOverrideChangesHash) {
    const auto a = gpfn::resolve(gpfn::Config::parse(kSmallRun));
    const auto b = gpfn::resolve(gpfn::Config::parse(kSmallRun), 9);
    EXPECT_EQ(a.seed, 4u);
    EXPECT_EQ(b.seed, 9u);
    EXPECT_NE(a.config_hash, b.config_hash);
    EXPECT_NE(gpfn::derive_seed(4, "train"), gpfn::derive_seed(4, "init"));
}

// ---------------------------------------------------------------- train

TEST(CmdTrain, WritesReloadableCheckpointAndLossCurve) {
    const auto dir = scratch_dir("train");
    std::ostringstream log;
    const auto summary = gpfn::cmd_train(small_run(dir), log);
    const auto ckpt = gpfn::read_checkpoint(summary.checkpoint);
    EXPECT_EQ(ckpt.regime, gpfn::Regime::Gpfn);
    EXPECT_EQ(ckpt.steps, 50u);
    EXPECT_EQ(ckpt.train_steps, 8u);
    EXPECT_EQ(ckpt.widths, (std::vector<int>{6, 16, 16, 2}));
    const std::string csv = slurp(summary.loss_csv);
    EXPECT_EQ(csv.rfind("# gpfn format=1 seed=4", 0), 0u) << csv;
    EXPECT_NE(csv.find("epoch,mean_loss\n0,"), std::string::npos);
    EXPECT_NE(log.str().find("trained gpfn"), std::string::npos);
}

TEST(CmdTrain, SameSeedGivesIdenticalBytes) {
    const auto a = scratch_dir("train_a"), b = scratch_dir("train_b");
    std::ostringstream log;
    gpfn::cmd_train(small_run(a), log);
    gpfn::cmd_train(small_run(b), log);
    EXPECT_EQ(slurp(a / "gpfn.ckpt"), slurp(b / "gpfn.ckpt"));
}

TEST(CmdTrain, BaselineRegimeIsTagged) {
    const auto dir = scratch_dir("train_bfn");
    std::ostringstream log;
    const auto summary = gpfn::cmd_train(small_run(dir, "[train]\nregime = bfn\n"), log);
    EXPECT_EQ(summary.checkpoint.filename(), "bfn.ckpt");
    EXPECT_EQ(gpfn::read_checkpoint(summary.checkpoint).regime, gpfn::Regime::BfnBaseline);
}

// ---------------------------------------------------------------- sample

TEST(CmdSample, ShapeDeterminismAndRegimeCheck) {
    const auto dir = scratch_dir("sample");
    std::ostringstream log;
    gpfn::cmd_train(small_run(dir), log);

    auto rc = small_run(dir);
    rc.nfe = 5;
    rc.n_samples = 2000;
    const auto first = gpfn::cmd_sample(rc, log);
    const auto file = gpfn::read_samples(first.samples);
    EXPECT_EQ(file.samples.size(), 2000);
    EXPECT_EQ(file.samples.dim(), 2);
    EXPECT_EQ(file.seed, 4u);
    EXPECT_FALSE(first.grid.has_value());

    const std::string bytes = slurp(first.samples);
    gpfn::cmd_sample(rc, log);
    EXPECT_EQ(slurp(first.samples), bytes);

    rc.sampler = gpfn::SamplerKind::BfnDet;
    rc.checkpoint = dir / "gpfn.ckpt";
    EXPECT_THROW(gpfn::cmd_sample(rc, log), gpfn::ConfigurationError);
}

// ---------------------------------------------------------------- eval

TEST(Evaluate, RealAgainstItself) {
    const auto rc = small_run(scratch_dir("eval_self"));
    const auto data = gpfn::load_data(rc);
    const auto extractor = gpfn::train_extractor(rc, data.train);
    const auto r = gpfn::evaluate(rc, extractor, data.eval.samples, data.eval.samples, 0, "real", 1);
    EXPECT_EQ(r.swd, 0.0);
    EXPECT_LT(std::abs(r.afid), 1e-6);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.coverage, 1.0);
}

TEST(Evaluate, DisjointSetsHaveNoOverlap) {
    const auto rc = small_run(scratch_dir("eval_far"));
    const auto data = gpfn::load_data(rc);
    const auto extractor = gpfn::train_extractor(rc, data.train);
    gpfn::SampleSet far = data.eval.samples;
    far.data.array() += 50.0;
    const auto r = gpfn::evaluate(rc, extractor, data.eval.samples, far, 0, "far", 1);
    EXPECT_GT(r.swd, 100.0);
    EXPECT_EQ(r.precision, 0.0);
    EXPECT_EQ(r.recall, 0.0);
    EXPECT_EQ(r.coverage, 0.0);
}

TEST(CmdEval, AppendsRowsUnderOneHeader) {
    const auto dir = scratch_dir("eval_csv");
    std::ostringstream log;
    auto rc = small_run(dir);
    gpfn::cmd_train(rc, log);
    rc.nfe = 3;
    rc.samples = gpfn::cmd_sample(rc, log).samples;
    gpfn::cmd_eval(rc, log);
    gpfn::cmd_eval(rc, log);
    const std::string csv = slurp(dir / "metrics.csv");
    std::istringstream lines(csv);
    std::string line;
    std::vector<std::string> all;
    while (std::getline(lines, line)) all.push_back(line);
    ASSERT_EQ(all.size(), 4u) << csv;
    EXPECT_EQ(all[1], gpfn::metrics::kCsvHeader);
    EXPECT_EQ(all[2], all[3]);
    EXPECT_EQ(all[2].rfind("3,gpfn_det,", 0), 0u);
}

// ---------------------------------------------------------------- sweep

std::string sweep_section() { return "[sweep]\nnfe = 2, 4\nsamplers = gpfn_det, gpfn_stoch\n"; }

TEST(CmdSweep, WritesEveryCellAndResumes) {
    const auto dir = scratch_dir("sweep");
    std::ostringstream log;
    const auto rc = small_run(dir, sweep_section());
    gpfn::cmd_train(rc, log);
    const auto first = gpfn::cmd_sweep(rc, log);
    EXPECT_TRUE(first.failures.empty());
    EXPECT_EQ(first.computed, 4);
    const std::string csv = slurp(first.csv);

    const auto again = gpfn::cmd_sweep(rc, log);
    EXPECT_EQ(again.reused, 4);
    EXPECT_EQ(again.computed, 0);
    EXPECT_EQ(slurp(again.csv), csv);

    auto forced = rc;
    forced.force = true;
    const auto recomputed = gpfn::cmd_sweep(forced, log);
    EXPECT_EQ(recomputed.computed, 4);
    EXPECT_EQ(slurp(recomputed.csv), csv);
}

TEST(CmdSweep, SingleCell) {
    const auto dir = scratch_dir("sweep_one");
    std::ostringstream log;
    const auto rc = small_run(dir, "[sweep]\nnfe = 3\nsamplers = gpfn_stoch\n");
    gpfn::cmd_train(rc, log);
    const auto s = gpfn::cmd_sweep(rc, log);
    ASSERT_EQ(s.rows.size(), 1u);
    EXPECT_EQ(s.rows[0].nfe, 3);
    EXPECT_EQ(s.rows[0].sampler, "gpfn_stoch");
}

TEST(CmdSweep, MissingCheckpointIsReportedPerCell) {
    const auto dir = scratch_dir("sweep_missing");
    std::ostringstream log;
    const auto rc = small_run(dir, "[sweep]\nnfe = 2\nsamplers = gpfn_det, bfn_stoch\n");
    gpfn::cmd_train(rc, log);
    const auto s = gpfn::cmd_sweep(rc, log);
    EXPECT_EQ(s.rows.size(), 1u);
    ASSERT_EQ(s.failures.size(), 1u);
    EXPECT_EQ(s.failures[0].rfind("bfn_stoch_nfe2", 0), 0u);
}

// ---------------------------------------------------------------- binary

int run_cli(const std::string& args) {
    const int status = std::system((std::string(GPFN_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
}

TEST(Binary, ExitCodes) {
    const auto dir = scratch_dir("binary");
    {
        std::ofstream(dir / "run.ini") << kSmallRun << "[sweep]\nnfe = 2\nsamplers = gpfn_det, bfn_det\n";
    }
    const std::string common = "--config " + (dir / "run.ini").string() + " --out " + (dir / "out").string();
    EXPECT_EQ(run_cli("train " + common + " --set train.epochs=1"), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "gpfn.ckpt"));
    EXPECT_EQ(run_cli("sample " + common + " --sampler gpfn_det --nfe 2"), 0);
    EXPECT_TRUE(fs::exists(dir / "out" / "samples_gpfn_det_nfe2.gpfs"));
    EXPECT_EQ(run_cli("sample " + common + " --sampler bfn_det --nfe 2 --checkpoint " +
                      (dir / "out" / "gpfn.ckpt").string()),
              1);
    EXPECT_EQ(run_cli("sweep " + common), 2);
    EXPECT_EQ(run_cli("train " + common + " --set train.epochs"), 1);
    EXPECT_EQ(run_cli("train --config " + (dir / "absent.ini").string()), 1);
    EXPECT_NE(run_cli("frobnicate"), 0);
}

}  // namespace
