#include "bread/pipeline.hpp"

#include "bread/ian.hpp"

namespace bread::pipeline {

metrics::MetricReport evaluate(const Enhancer& enhancer, const data::DatasetManifest& manifest,
                               const EvaluateOptions& options)
{
    std::optional<metrics::NiqeModel> model;
    if (options.niqe_model) {
        model = metrics::load_niqe_model(*options.niqe_model);
    }
    auto pairs = manifest.pairs;
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        return a.first.filename().string() < b.first.filename().string();
    });
    metrics::MetricReport report;
    report.gamma_aligned = options.gamma_aligned;
    for (const auto& [low_path, high_path] : pairs) {
        const auto name = low_path.filename().string();
        try {
            const auto low = read_png(low_path);
            const auto high = read_png(high_path);
            if (low.height() != high.height() || low.width() != high.width()) {
                throw DataError("size mismatch between " + low_path.string() + " and " +
                                high_path.string());
            }
            const auto out = enhancer(low);
            std::map<std::string, double> row;
            row["psnr"] = metrics::psnr(out, high);
            row["ssim"] = metrics::ssim(out, high);
            row["delta_e"] = metrics::delta_e(out, high);
            row["loe"] = metrics::loe(low, out);
            if (model) {
                row["niqe"] = metrics::niqe(out, *model);
            }
            if (options.gamma_aligned) {
                double gamma = 1.0;
                const auto corrected = metrics::gamma_corrected(out, high, &gamma);
                row["gamma"] = gamma;
                row["psnr_c"] = metrics::psnr(corrected, high);
                row["ssim_c"] = metrics::ssim(corrected, high);
                row["delta_e_c"] = metrics::delta_e(corrected, high);
                if (model) {
                    row["niqe_c"] = metrics::niqe(corrected, *model);
                }
            }
            report.add(name, std::move(row));
        } catch (const Error& e) {
            report.errors[name] = e.what();
        }
    }
    return report;
}

metrics::MetricReport evaluate(const BreadBundle& bundle, const data::DatasetManifest& manifest,
                               const EvaluateOptions& options,
                               const EnhanceOptions& enhance_options)
{
    bundle.validate();
    return evaluate([&](const RgbImage& img) { return enhance(bundle, img, enhance_options); },
                    manifest, options);
}

namespace {

nn::Checkpoint stage_or_placeholder(const RunConfig& c, nn::Stage stage, bool needed,
                                    const nn::NetworkSpec& spec, const std::string& variant)
{
    const auto path = checkpoint_path(c.work_dir, stage);
    if (fs::is_regular_file(path)) {
        return nn::load_checkpoint(path);
    }
    if (needed) {
        throw DependencyError("ablation " + variant + " needs a trained " +
                              std::string(nn::stage_name(stage)) + " checkpoint in " +
                              c.work_dir.string() + "; run 'bread train --stage " +
                              std::string(nn::stage_name(stage)) + "' first");
    }
    // Never evaluated by this variant; only fills the bundle slot.
    nn::Checkpoint placeholder;
    placeholder.stage = stage;
    placeholder.spec = spec;
    placeholder.params = nn::build_network(spec, 0).params();
    return placeholder;
}

}  // namespace

metrics::MetricReport run_ablation(Variant variant, const RunConfig& config)
{
    config.validate();
    const auto name = std::string(variant_name(variant));
    const bool uses_ansn = variant == Variant::none || variant == Variant::no_nfm;
    const bool uses_nfm = variant == Variant::none;
    const int k = static_cast<int>(config.ladder.size());

    const auto ian_ckpt = stage_or_placeholder(config, nn::Stage::ian, true, {}, name);
    const auto can_ckpt = stage_or_placeholder(config, nn::Stage::can, true, {}, name);
    const auto ansn_ckpt = stage_or_placeholder(config, nn::Stage::ansn, uses_ansn,
                                                noise::ansn_spec(config.base_channels, config.max_channels),
                                                name);
    const auto nfm_ckpt = stage_or_placeholder(
        config, nn::Stage::nfm, uses_nfm,
        noise::nfm_spec(k, config.base_channels, config.max_channels), name);
    const auto bundle =
        BreadBundle::from_checkpoints(ian_ckpt, ansn_ckpt, nfm_ckpt, can_ckpt, config.ladder);

    std::optional<nn::Network<float>> denoiser;
    if (variant == Variant::no_sep || variant == Variant::fgn || variant == Variant::pn) {
        denoiser = train_ablation_denoiser(variant, config).network();
    }
    EnhanceOptions options;
    options.variant = variant;
    options.ablation = denoiser ? &*denoiser : nullptr;
    options.fgn_sigma = config.fgn_sigma;

    const auto manifest = data::read_manifest(config.eval_manifest);
    auto report = evaluate(bundle, manifest, {}, options);
    const auto out_dir = config.work_dir / ("ablation_" + name);
    report.write_csv(out_dir / "metrics.csv");
    report.write_json(out_dir / "metrics.json");
    return report;
}

}  // namespace bread::pipeline
