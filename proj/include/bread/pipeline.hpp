#pragma once

// End-to-end inference, staged training, evaluation, and ablations.
//
// Inference graph for an RGB image I:
//
//   (Y, Cb, Cr) = ycbcr(I), each plane reflect-padded to a multiple of 8
//   L    = IAN(Y)                     relative illumination
//   Y_IA = Y / (L + eps)
//   A    = exp(-L)                    noise level map
//   Y_NS_k = Y_IA - ANSN(Y_IA, s_k A) for the ladder scales s_k
//   Y_NF = NFM(Y_NS_1, s_1 A, ..., Y_NS_3, s_3 A)
//   (Cb', Cr') = CAN(Y, Cb, Cr, Y_NF)
//   output = clamp01(rgb(Y_NF, Cb', Cr')), cropped back to the input size
//
// A work directory holds one checkpoint per stage (<stage>.ckpt) and a loss
// log per stage (<stage>.log, one "step loss" pair per line). The same
// directory serves as an inference bundle.

#include "bread/can.hpp"
#include "bread/dataprep.hpp"
#include "bread/metrics.hpp"
#include "bread/noise.hpp"
#include "bread/nnkit/checkpoint.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bread::pipeline {

namespace fs = std::filesystem;

enum class Variant { none, no_dn, no_nfm, no_sep, fgn, pn };

std::string_view variant_name(Variant v) noexcept;
/// Throws ConfigError for unknown names.
Variant parse_variant(std::string_view name);

struct RunConfig {
    fs::path train_manifest;
    fs::path eval_manifest;      ///< defaults to train_manifest
    fs::path sequence_manifest;  ///< exposure sequences for can_me
    fs::path work_dir;
    int patch_size = 128;
    int batch_size = 8;
    int iterations = 100000;
    double learning_rate = 1e-3;
    double finetune_learning_rate = 1e-4;
    std::uint64_t seed = 0;
    Variant variant = Variant::none;
    int base_channels = 32;
    int max_channels = 128;
    int log_every = 50;
    int exposures = 8;
    double overexposure = 0.25;
    double max_noise_scale = 0.1;  ///< ANSN/NFM training strengths drawn from [0, this]
    double fgn_sigma = noise::kFixedGaussianSigma;
    double poisson_peak = noise::kPoissonPeak;
    noise::StrengthLadder ladder;

    /// Throws ConfigError on out-of-range or inconsistent values.
    void validate() const;
};

/// key=value lines, '#' comments. Unknown keys, malformed values, and missing
/// required keys (train_manifest, work_dir) raise ConfigError. Relative paths
/// are resolved against `base_dir`.
RunConfig parse_config_text(const std::string& text, const fs::path& base_dir);
RunConfig parse_config(const fs::path& path);

fs::path checkpoint_path(const fs::path& work_dir, nn::Stage stage);
fs::path log_path(const fs::path& work_dir, nn::Stage stage);
fs::path ablation_checkpoint_path(const fs::path& work_dir, Variant v);

struct BreadBundle {
    nn::Network<float> ian;
    nn::Network<float> ansn;
    nn::Network<float> nfm;
    nn::Network<float> can;
    nn::Stage color_stage = nn::Stage::can;
    noise::StrengthLadder ladder;
    double epsilon = kEpsilon;

    /// Throws BundleError when a network does not fit its role.
    void validate() const;

    static BreadBundle from_checkpoints(const nn::Checkpoint& ian, const nn::Checkpoint& ansn,
                                        const nn::Checkpoint& nfm, const nn::Checkpoint& color,
                                        noise::StrengthLadder ladder = {});
    /// Reads ian, ansn, nfm and can (or can_me) checkpoints from `dir`.
    /// Throws BundleError naming a missing file.
    static BreadBundle load(const fs::path& dir, bool multi_exposure = false);
};

struct EnhanceOptions {
    Variant variant = Variant::none;
    /// Denoiser replacing ANSN+NFM for no_sep, fgn and pn.
    const nn::Network<float>* ablation = nullptr;
    double fgn_sigma = noise::kFixedGaussianSigma;
};

/// Every intermediate of one inference, at the padded size.
struct EnhanceTrace {
    YCbCrImage input;
    IllumMap l_hat;
    ImagePlane y_ia;
    noise::NoiseLevelMap level;
    std::vector<ImagePlane> candidates;
    ImagePlane y_nf;
    can::ChromaPair chroma;
    RgbImage output;  ///< cropped to the input size
};

EnhanceTrace enhance_traced(const BreadBundle& bundle, const RgbImage& img,
                            const EnhanceOptions& options = {});
RgbImage enhance(const BreadBundle& bundle, const RgbImage& img, const EnhanceOptions& options = {});

struct LogEntry {
    std::uint64_t step = 0;
    double loss = 0.0;
};

std::vector<LogEntry> read_log(const fs::path& path);

/// Trains one stage and writes <work_dir>/<stage>.ckpt and .log.
/// Prerequisites: ansn needs ian; nfm needs ian and ansn. For can_me, a run
/// without `resume` trains on exposure sequences; with a can_me `resume`
/// checkpoint it finetunes on sequences plus the paired data at
/// finetune_learning_rate. Other stages continue from `resume` when given.
/// Throws DependencyError naming the stage to run first.
nn::Checkpoint train_stage(nn::Stage stage, const RunConfig& config,
                           const std::optional<fs::path>& resume = std::nullopt);

/// Trains the denoiser of a no_sep, fgn, or pn ablation (stage tag ansn)
/// and writes it to ablation_checkpoint_path.
nn::Checkpoint train_ablation_denoiser(Variant variant, const RunConfig& config);

struct EvaluateOptions {
    std::optional<fs::path> niqe_model;
    bool gamma_aligned = true;
};

using Enhancer = std::function<RgbImage(const RgbImage&)>;

/// Runs `enhancer` on every low image of a paired manifest and scores it
/// against the reference. Per-image failures are recorded in the report's
/// errors and do not abort the run.
metrics::MetricReport evaluate(const Enhancer& enhancer, const data::DatasetManifest& manifest,
                               const EvaluateOptions& options = {});
metrics::MetricReport evaluate(const BreadBundle& bundle, const data::DatasetManifest& manifest,
                               const EvaluateOptions& options = {},
                               const EnhanceOptions& enhance_options = {});

/// Trains the variant's denoiser if it has one, evaluates the variant on
/// eval_manifest using the bundle in work_dir, and writes
/// <work_dir>/ablation_<variant>/metrics.{csv,json}.
metrics::MetricReport run_ablation(Variant variant, const RunConfig& config);

}  // namespace bread::pipeline
