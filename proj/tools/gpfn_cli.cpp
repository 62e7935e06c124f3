// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train | sample | eval | sweep.
// Exit codes: 0 success, 1 error, 2 sweep finished with failed cells.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gpfn/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool force = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "Run configuration file (INI-style key = value)");
    cmd->add_option("--seed", opts.seed, "Master seed (overrides run.seed)");
    cmd->add_option("--out", opts.out, "Output directory (overrides run.out)");
    cmd->add_flag("--force", opts.force, "Recompute outputs that already exist");
    cmd->add_option("--set", opts.overrides, "Override a field, e.g. --set train.epochs=5")->allow_extra_args(false);
}

gpfn::RunConfig load(const CommonOptions& opts) {
    gpfn::Config cfg = opts.config.empty() ? gpfn::Config::parse("", "<defaults>") : gpfn::Config::load(opts.config);
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || kv.find('.') > eq) {
            throw gpfn::ConfigParseError("--set expects section.key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    std::optional<std::filesystem::path> out;
    if (opts.out) out = *opts.out;
    return gpfn::resolve(std::move(cfg), opts.seed, out, opts.force);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"General proximal flow networks: train, sample, evaluate and sweep"};
    app.require_subcommand(1);

    CommonOptions train_opts, sample_opts, eval_opts, sweep_opts;
    auto* train = app.add_subcommand("train", "Train a predictor and write a checkpoint plus loss curve");
    add_common(train, train_opts);

    auto* sample = app.add_subcommand("sample", "Generate samples from a checkpoint");
    add_common(sample, sample_opts);
    std::optional<std::string> sampler, checkpoint;
    std::optional<int> nfe;
    sample->add_option("--sampler", sampler, "gpfn_det | gpfn_stoch | bfn_stoch | bfn_det");
    sample->add_option("--nfe", nfe, "Number of predictor evaluations");
    sample->add_option("--checkpoint", checkpoint, "Checkpoint path (default <out>/<regime>.ckpt)");

    auto* eval = app.add_subcommand("eval", "Evaluate a sample file against held-out real data");
    add_common(eval, eval_opts);
    std::optional<std::string> samples_path;
    eval->add_option("--samples", samples_path, "Sample file written by `sample`");

    auto* sweep = app.add_subcommand("sweep", "Evaluate every sampler x NFE cell into sweep.csv");
    add_common(sweep, sweep_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            gpfn::cmd_train(load(train_opts));
        } else if (sample->parsed()) {
            if (sampler) sample_opts.overrides.push_back("sample.sampler=" + *sampler);
            if (nfe) sample_opts.overrides.push_back("sample.nfe=" + std::to_string(*nfe));
            if (checkpoint) sample_opts.overrides.push_back("sample.checkpoint=" + *checkpoint);
            gpfn::cmd_sample(load(sample_opts));
        } else if (eval->parsed()) {
            if (samples_path) eval_opts.overrides.push_back("eval.samples=" + *samples_path);
            gpfn::cmd_eval(load(eval_opts));
        } else if (sweep->parsed()) {
            const auto summary = gpfn::cmd_sweep(load(sweep_opts));
            if (!summary.failures.empty()) {
                for (const auto& f : summary.failures) std::cerr << "failed cell " << f << '\n';
                return 2;
            }
        }
    } catch (const gpfn::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
