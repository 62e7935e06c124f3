// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gpfn/checkpoint.hpp"
#include "gpfn/config.hpp"
#include "gpfn/dataset.hpp"
#include "gpfn/feature_extractor.hpp"
#include "gpfn/metrics.hpp"
#include "gpfn/samplers.hpp"
#include "gpfn/trainer.hpp"

namespace gpfn {

inline constexpr std::uint32_t kOutputFormatVersion = 1;

/// Everything a CLI run needs, resolved from a Config plus overrides.
struct RunConfig {
    // [data]
    std::string data_kind = "eight_mode_ring";
    Eigen::Index n_train = 4096;
    Eigen::Index n_eval = 2000;
    std::uint64_t data_seed = 1;
    std::filesystem::path idx_images, idx_labels, idx_eval_images, idx_eval_labels;
    int downsample = 1;

    // [model]
    std::vector<int> hidden{128, 128};
    int time_embed = 16;

    // [train]
    TrainConfig train;

    // [sample]
    SamplerKind sampler = SamplerKind::GpfnDet;
    int nfe = 20;
    Eigen::Index n_samples = 2000;
    std::filesystem::path checkpoint;

    // [eval]
    std::filesystem::path samples;
    int swd_projections = 128;
    int pr_k = 3;
    int dc_k = 5;
    int div_pairs = 500;
    ExtractorConfig extractor;

    // [sweep]
    std::vector<int> nfe_list{5, 10, 20, 40, 100};
    std::vector<SamplerKind> samplers{SamplerKind::GpfnStoch, SamplerKind::GpfnDet, SamplerKind::BfnStoch,
                                      SamplerKind::BfnDet};
    std::filesystem::path gpfn_checkpoint, bfn_checkpoint;

    std::uint64_t seed = 0;
    std::filesystem::path out = "out";
    bool force = false;
    std::uint64_t config_hash = 0;

    bool is_image() const { return data_kind == "idx"; }
};

/// Independent, reproducible seed for a named sub-task.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    std::uint64_t z = master ^ io::fnv1a64(tag);
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline RunConfig resolve(Config cfg, std::optional<std::uint64_t> seed = {},
                         std::optional<std::filesystem::path> out = {}, bool force = false) {
    if (seed) cfg.set("run.seed", std::to_string(*seed));
    RunConfig rc;
    rc.seed = cfg.get_int<std::uint64_t>("run.seed", 0);
    rc.out = out ? *out : std::filesystem::path(cfg.get_string("run.out", "out"));
    rc.force = force;

    rc.data_kind = cfg.get_string("data.kind", rc.data_kind);
    rc.n_train = cfg.get_int<Eigen::Index>("data.n_train", rc.n_train);
    rc.n_eval = cfg.get_int<Eigen::Index>("data.n_eval", rc.n_eval);
    rc.data_seed = cfg.get_int<std::uint64_t>("data.seed", rc.data_seed);
    rc.idx_images = cfg.get_string("data.idx_images", "");
    rc.idx_labels = cfg.get_string("data.idx_labels", "");
    rc.idx_eval_images = cfg.get_string("data.idx_eval_images", "");
    rc.idx_eval_labels = cfg.get_string("data.idx_eval_labels", "");
    rc.downsample = cfg.get_int<int>("data.downsample", rc.is_image() ? 4 : 1);
    if (rc.data_kind != "idx") parse_synthetic(rc.data_kind);

    rc.hidden = cfg.get_int_list("model.hidden", rc.hidden);
    rc.time_embed = cfg.get_int<int>("model.time_embed", rc.time_embed);

    TrainConfig& t = rc.train;
    t.regime = parse_regime(cfg.get_string("train.regime", "gpfn"));
    t.steps = cfg.get_int<int>("train.T", t.steps);
    t.shift = cfg.get_double("train.shift", t.shift);
    t.sigma1 = cfg.get_double("train.sigma1", t.sigma1);
    t.epochs = cfg.get_int<int>("train.epochs", rc.is_image() ? 20 : 30);
    t.batch_size = cfg.get_int<int>("train.batch", t.batch_size);
    t.cosine_annealing = cfg.get_bool("train.cosine_annealing", t.cosine_annealing);
    t.optimizer.learning_rate = cfg.get_double("train.lr", t.optimizer.learning_rate);
    t.optimizer.weight_decay = cfg.get_double("train.weight_decay", t.optimizer.weight_decay);
    t.optimizer.ema_decay = cfg.get_double("train.ema_decay", t.optimizer.ema_decay);
    t.optimizer.clip_norm = cfg.get_double("train.clip", t.optimizer.clip_norm);
    t.seed = derive_seed(rc.seed, "train");
    validate(t);

    rc.sampler = parse_sampler(cfg.get_string("sample.sampler", "gpfn_det"));
    rc.nfe = cfg.get_int<int>("sample.nfe", rc.nfe);
    rc.n_samples = cfg.get_int<Eigen::Index>("sample.n_samples", rc.n_samples);
    rc.checkpoint = cfg.get_string("sample.checkpoint", "");

    rc.samples = cfg.get_string("eval.samples", "");
    rc.swd_projections = cfg.get_int<int>("eval.swd_projections", rc.swd_projections);
    rc.pr_k = cfg.get_int<int>("eval.pr_k", rc.pr_k);
    rc.dc_k = cfg.get_int<int>("eval.dc_k", rc.dc_k);
    rc.div_pairs = cfg.get_int<int>("eval.div_pairs", rc.div_pairs);
    rc.extractor.hidden_width = cfg.get_int<int>("eval.extractor_hidden", rc.is_image() ? 128 : 64);
    rc.extractor.feature_width = cfg.get_int<int>("eval.feature_width", rc.is_image() ? 256 : 32);
    rc.extractor.epochs = cfg.get_int<int>("eval.extractor_epochs", rc.is_image() ? 10 : 40);
    rc.extractor.min_accuracy = cfg.get_double("eval.min_accuracy", rc.extractor.min_accuracy);
    rc.extractor.seed = derive_seed(rc.seed, "extractor");

    rc.nfe_list = cfg.get_int_list("sweep.nfe", rc.nfe_list);
    if (cfg.has("sweep.samplers")) {
        rc.samplers.clear();
        for (const auto& s : cfg.get_list("sweep.samplers", {})) rc.samplers.push_back(parse_sampler(s));
    }
    rc.gpfn_checkpoint = cfg.get_string("sweep.gpfn_checkpoint", "");
    rc.bfn_checkpoint = cfg.get_string("sweep.bfn_checkpoint", "");
    detail::require(!rc.nfe_list.empty(), "sweep.nfe must not be empty");
    for (int n : rc.nfe_list) detail::require(n >= 1, "sweep.nfe entries must be >= 1");

    rc.config_hash = io::fnv1a64(cfg.canonical());
    return rc;
}

/// Provenance line written at the top of every text artifact.
inline std::string provenance_line(const RunConfig& rc) {
    std::ostringstream out;
    out << "# gpfn format=" << kOutputFormatVersion << " seed=" << rc.seed << " config_hash=" << std::hex
        << std::setw(16) << std::setfill('0') << rc.config_hash;
    return out.str();
}

struct DataSplit {
    Dataset train;
    Dataset eval;
};

inline DataSplit load_data(const RunConfig& rc) {
    if (rc.is_image()) {
        detail::require(!rc.idx_images.empty(), "data.idx_images is required for kind = idx");
        std::optional<std::filesystem::path> labels;
        if (!rc.idx_labels.empty()) labels = rc.idx_labels;
        const Dataset all = read_idx(rc.idx_images, labels, rc.downsample);
        if (!rc.idx_eval_images.empty()) {
            std::optional<std::filesystem::path> eval_labels;
            if (!rc.idx_eval_labels.empty()) eval_labels = rc.idx_eval_labels;
            const Dataset ev = read_idx(rc.idx_eval_images, eval_labels, rc.downsample);
            return {all.slice(0, std::min(rc.n_train, all.samples.size())),
                    ev.slice(0, std::min(rc.n_eval, ev.samples.size()))};
        }
        detail::require(all.samples.size() >= rc.n_train + rc.n_eval, "IDX file has fewer images than n_train + n_eval");
        return {all.slice(0, rc.n_train), all.slice(rc.n_train, rc.n_train + rc.n_eval)};
    }
    const Dataset all = gen_synthetic(parse_synthetic(rc.data_kind), rc.n_train + rc.n_eval, rc.data_seed);
    return {all.slice(0, rc.n_train), all.slice(rc.n_train, rc.n_train + rc.n_eval)};
}

inline std::filesystem::path default_checkpoint(const RunConfig& rc, Regime regime) {
    return rc.out / (std::string(to_string(regime)) + ".ckpt");
}

struct TrainSummary {
    std::filesystem::path checkpoint;
    std::filesystem::path loss_csv;
    std::vector<double> epoch_loss;
    std::uint64_t steps = 0;
};

/// Trains the configured regime and writes <out>/<regime>.ckpt and <out>/<regime>_loss.csv.
inline TrainSummary cmd_train(const RunConfig& rc, std::ostream& log = std::cout) {
    const DataSplit data = load_data(rc);
    const int d = static_cast<int>(data.train.samples.dim());
    std::mt19937_64 init_rng(derive_seed(rc.seed, "init"));
    Mlp<float> net = Mlp<float>::predictor(d, rc.hidden, rc.time_embed);
    net.initialize(init_rng);

    const TrainResult<float> result = train(rc.train, data.train.samples.data, std::move(net));

    Checkpoint ckpt;
    ckpt.regime = rc.train.regime;
    ckpt.steps = static_cast<std::uint32_t>(rc.train.steps);
    ckpt.shift = rc.train.shift;
    ckpt.sigma1 = rc.train.sigma1;
    ckpt.embed_dim = static_cast<std::uint32_t>(rc.time_embed);
    ckpt.widths = result.net.widths();
    ckpt.image = data.train.samples.image;
    ckpt.train_steps = result.steps;
    ckpt.seed = rc.seed;
    ckpt.config_hash = rc.config_hash;
    ckpt.params = result.net.parameters();
    ckpt.ema = result.ema.parameters();

    TrainSummary summary;
    summary.checkpoint = default_checkpoint(rc, rc.train.regime);
    summary.loss_csv = rc.out / (std::string(to_string(rc.train.regime)) + "_loss.csv");
    write_checkpoint(summary.checkpoint, ckpt);

    std::ostringstream csv;
    csv.precision(9);
    csv << provenance_line(rc) << "\nepoch,mean_loss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) csv << e << ',' << result.epoch_loss[e] << '\n';
    io::write_file_atomic(summary.loss_csv, csv.str());

    summary.epoch_loss = result.epoch_loss;
    summary.steps = result.steps;
    log << "trained " << to_string(rc.train.regime) << ": " << result.steps << " steps, final epoch loss "
        << (result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()) << " -> " << summary.checkpoint.string()
        << '\n';
    return summary;
}

/// Samples with the EMA weights of a checkpoint.
inline SampleSet sample_from_checkpoint(const Checkpoint& ckpt, SamplerKind kind, int nfe, Eigen::Index n,
                                        std::uint64_t seed) {
    const Mlp<float> net = ckpt.ema_net();
    GenerateOptions opt;
    opt.kind = kind;
    opt.nfe = nfe;
    opt.n_samples = n;
    opt.dim = net.data_dim();
    opt.shift = ckpt.shift;
    opt.sigma1 = ckpt.sigma1;
    opt.seed = seed;
    SampleSet out;
    out.data = generate(opt, ckpt.regime, as_predictor(net));
    out.image = ckpt.image;
    return out;
}

inline std::string cell_name(SamplerKind kind, int nfe) {
    return std::string(to_string(kind)) + "_nfe" + std::to_string(nfe);
}

struct SampleSummary {
    std::filesystem::path samples;
    std::optional<std::filesystem::path> grid;
};

/// Writes <out>/samples_<sampler>_nfe<k>.gpfs (+ .pgm 8x8 grid for image data).
inline SampleSummary cmd_sample(const RunConfig& rc, std::ostream& log = std::cout) {
    const std::filesystem::path ckpt_path =
        rc.checkpoint.empty() ? default_checkpoint(rc, required_regime(rc.sampler)) : rc.checkpoint;
    const Checkpoint ckpt = read_checkpoint(ckpt_path);
    const std::uint64_t seed = derive_seed(rc.seed, "sample/" + cell_name(rc.sampler, rc.nfe));
    SampleFile file{sample_from_checkpoint(ckpt, rc.sampler, rc.nfe, rc.n_samples, seed), rc.seed, rc.config_hash};

    SampleSummary summary;
    summary.samples = rc.out / ("samples_" + cell_name(rc.sampler, rc.nfe) + ".gpfs");
    write_samples(summary.samples, file);
    if (file.samples.image && file.samples.size() >= 64) {
        summary.grid = rc.out / ("samples_" + cell_name(rc.sampler, rc.nfe) + ".pgm");
        write_sample_grid(file.samples, *summary.grid, 8, 8);
    }
    log << "sampled " << file.samples.size() << " x " << file.samples.dim() << " with " << to_string(rc.sampler)
        << " at NFE " << rc.nfe << " -> " << summary.samples.string() << '\n';
    return summary;
}

/// Feature classifier trained on the labelled training split.
inline FeatureExtractor train_extractor(const RunConfig& rc, const Dataset& train_split) {
    return train_feature_extractor(train_split.samples, rc.extractor);
}

/// Full metric row for `gen` against `real`.
inline metrics::MetricsReport evaluate(const RunConfig& rc, const FeatureExtractor& extractor, const SampleSet& real,
                                       const SampleSet& gen, int nfe, std::string sampler,
                                       std::uint64_t seed) {
    detail::require(real.dim() == gen.dim(), "evaluate: real and generated dimensions differ");
    metrics::MetricsReport r;
    r.nfe = nfe;
    r.sampler = std::move(sampler);
    r.swd = metrics::swd(real.data, gen.data, rc.swd_projections, derive_seed(seed, "swd"));
    const Eigen::MatrixXd real_f = extractor.features(real.data);
    const Eigen::MatrixXd gen_f = extractor.features(gen.data);
    r.afid = metrics::frechet_distance(real_f, gen_f);
    r.is_score = metrics::is_score(extractor.probabilities(gen.data));
    const auto pr = metrics::precision_recall(real_f, gen_f, rc.pr_k);
    r.precision = pr.precision;
    r.recall = pr.recall;
    const auto dc = metrics::density_coverage(real_f, gen_f, rc.dc_k);
    r.density = dc.density;
    r.coverage = dc.coverage;
    SampleSet g = gen;
    g.image = real.image;
    r.diversity = metrics::diversity(g, rc.div_pairs, derive_seed(seed, "div"));
    return r;
}

/// Appends one row to <out>/metrics.csv, writing provenance and header on first use.
inline metrics::MetricsReport cmd_eval(const RunConfig& rc, std::ostream& log = std::cout) {
    detail::require(!rc.samples.empty(), "eval.samples must name a sample file");
    const DataSplit data = load_data(rc);
    const SampleFile gen = read_samples(rc.samples);
    const FeatureExtractor extractor = train_extractor(rc, data.train);
    const auto report = evaluate(rc, extractor, data.eval.samples, gen.samples, rc.nfe, std::string(to_string(rc.sampler)),
                                 derive_seed(rc.seed, "eval"));

    const std::filesystem::path csv_path = rc.out / "metrics.csv";
    std::string text;
    if (std::filesystem::exists(csv_path)) {
        std::ifstream in(csv_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    } else {
        text = provenance_line(rc) + "\n" + metrics::kCsvHeader + "\n";
    }
    text += metrics::to_csv_row(report) + "\n";
    io::write_file_atomic(csv_path, text);
    log << metrics::kCsvHeader << '\n' << metrics::to_csv_row(report) << '\n';
    return report;
}

struct SweepSummary {
    std::filesystem::path csv;
    std::vector<metrics::MetricsReport> rows;
    std::vector<std::string> failures;  // one message per failed cell
    int computed = 0;
    int reused = 0;
};

namespace detail {

inline std::map<std::string, std::string> read_existing_rows(const std::filesystem::path& csv) {
    std::map<std::string, std::string> rows;
    if (!std::filesystem::exists(csv)) return rows;
    std::ifstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line == metrics::kCsvHeader) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) continue;
        rows[line.substr(c1 + 1, c2 - c1 - 1) + "_nfe" + line.substr(0, c1)] = line;
    }
    return rows;
}

}  // namespace detail

/// Every (sampler, NFE) cell into <out>/sweep.csv. Existing rows are kept
/// unless `force`; cells whose checkpoint is missing are reported and skipped.
inline SweepSummary cmd_sweep(const RunConfig& rc, std::ostream& log = std::cout) {
    SweepSummary summary;
    summary.csv = rc.out / "sweep.csv";
    std::map<std::string, std::string> existing;
    if (!rc.force) existing = detail::read_existing_rows(summary.csv);

    const DataSplit data = load_data(rc);
    std::optional<FeatureExtractor> extractor;
    std::map<Regime, std::optional<Checkpoint>> checkpoints;
    std::map<Regime, std::string> checkpoint_errors;
    auto checkpoint_for = [&](Regime regime) -> const std::optional<Checkpoint>& {
        if (!checkpoints.count(regime)) {
            std::filesystem::path p = regime == Regime::Gpfn ? rc.gpfn_checkpoint : rc.bfn_checkpoint;
            if (p.empty()) p = default_checkpoint(rc, regime);
            try {
                checkpoints[regime] = read_checkpoint(p);
            } catch (const Error& e) {
                checkpoints[regime] = std::nullopt;
                checkpoint_errors[regime] = e.what();
            }
        }
        return checkpoints[regime];
    };

    std::vector<std::string> lines;
    auto flush = [&]() {
        std::string text = provenance_line(rc) + "\n" + metrics::kCsvHeader + "\n";
        for (const auto& l : lines) text += l + "\n";
        io::write_file_atomic(summary.csv, text);
    };

    for (int nfe : rc.nfe_list) {
        for (SamplerKind kind : rc.samplers) {
            const std::string key = cell_name(kind, nfe);
            if (const auto it = existing.find(key); it != existing.end()) {
                lines.push_back(it->second);
                ++summary.reused;
                continue;
            }
            const Regime regime = required_regime(kind);
            const auto& ckpt = checkpoint_for(regime);
            if (!ckpt) {
                summary.failures.push_back(key + ": " + checkpoint_errors[regime]);
                log << "cell " << key << " skipped: " << checkpoint_errors[regime] << '\n';
                continue;
            }
            if (!extractor) extractor = train_extractor(rc, data.train);
            const SampleSet gen =
                sample_from_checkpoint(*ckpt, kind, nfe, rc.n_samples, derive_seed(rc.seed, "sample/" + key));
            const auto report =
                evaluate(rc, *extractor, data.eval.samples, gen, nfe, std::string(to_string(kind)),
                         derive_seed(rc.seed, "eval/" + key));
            summary.rows.push_back(report);
            lines.push_back(metrics::to_csv_row(report));
            ++summary.computed;
            flush();
            log << metrics::to_csv_row(report) << '\n';
        }
    }
    flush();
    log << "sweep: " << summary.computed << " computed, " << summary.reused << " reused, " << summary.failures.size()
        << " failed -> " << summary.csv.string() << '\n';
    return summary;
}

}  // namespace gpfn
