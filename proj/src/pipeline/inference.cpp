#include "bread/pipeline.hpp"

#include "bread/ian.hpp"

namespace bread::pipeline {

namespace {

void require_role(const nn::Network<float>& net, const char* role, int in, int out,
                  nn::Activation act)
{
    const auto& s = net.spec();
    if (s.in_channels != in || s.out_channels != out || s.final_activation != act) {
        throw BundleError(std::string(role) + " network has " + std::to_string(s.in_channels) +
                          " inputs and " + std::to_string(s.out_channels) +
                          " outputs, expected " + std::to_string(in) + " and " +
                          std::to_string(out));
    }
}

nn::Checkpoint load_stage(const fs::path& dir, nn::Stage stage)
{
    const auto path = checkpoint_path(dir, stage);
    if (!fs::is_regular_file(path)) {
        throw BundleError("bundle " + dir.string() + " has no " + path.filename().string());
    }
    auto ckpt = nn::load_checkpoint(path);
    if (ckpt.stage != stage) {
        throw BundleError(path.string() + " holds stage '" + std::string(nn::stage_name(ckpt.stage)) +
                          "', expected '" + std::string(nn::stage_name(stage)) + "'");
    }
    return ckpt;
}

}  // namespace

void BreadBundle::validate() const
{
    try {
        ladder.validate();
    } catch (const DomainError& e) {
        throw BundleError(e.what());
    }
    if (epsilon != kEpsilon) {
        throw BundleError("bundle epsilon differs from the library constant");
    }
    if (color_stage != nn::Stage::can && color_stage != nn::Stage::can_me) {
        throw BundleError("color network must come from stage can or can_me");
    }
    require_role(ian, "illumination", 1, 1, nn::Activation::sigmoid);
    require_role(ansn, "denoising", 2, 1, nn::Activation::none);
    require_role(nfm, "fusion", 2 * static_cast<int>(ladder.size()), 1, nn::Activation::sigmoid);
    require_role(can, "color", 4, 2, nn::Activation::sigmoid);
}

BreadBundle BreadBundle::from_checkpoints(const nn::Checkpoint& ian, const nn::Checkpoint& ansn,
                                          const nn::Checkpoint& nfm, const nn::Checkpoint& color,
                                          noise::StrengthLadder ladder)
{
    const auto expect = [](const nn::Checkpoint& c, nn::Stage s) {
        if (c.stage != s) {
            throw BundleError("checkpoint for stage '" + std::string(nn::stage_name(s)) +
                              "' is tagged '" + std::string(nn::stage_name(c.stage)) + "'");
        }
    };
    expect(ian, nn::Stage::ian);
    expect(ansn, nn::Stage::ansn);
    expect(nfm, nn::Stage::nfm);
    BreadBundle b;
    b.ian = ian.network();
    b.ansn = ansn.network();
    b.nfm = nfm.network();
    b.can = color.network();
    b.color_stage = color.stage;
    b.ladder = std::move(ladder);
    b.validate();
    return b;
}

BreadBundle BreadBundle::load(const fs::path& dir, bool multi_exposure)
{
    if (!fs::is_directory(dir)) {
        throw BundleError("bundle directory " + dir.string() + " does not exist");
    }
    return from_checkpoints(load_stage(dir, nn::Stage::ian), load_stage(dir, nn::Stage::ansn),
                            load_stage(dir, nn::Stage::nfm),
                            load_stage(dir, multi_exposure ? nn::Stage::can_me : nn::Stage::can));
}

EnhanceTrace enhance_traced(const BreadBundle& bundle, const RgbImage& img,
                            const EnhanceOptions& options)
{
    bundle.validate();
    const bool needs_ablation = options.variant == Variant::no_sep ||
                                options.variant == Variant::fgn || options.variant == Variant::pn;
    if (needs_ablation && options.ablation == nullptr) {
        throw BundleError("variant " + std::string(variant_name(options.variant)) +
                          " needs its trained denoiser");
    }
    const int multiple = bundle.ian.spec().size_multiple();
    EnhanceTrace t;
    const auto ycc = rgb_to_ycbcr(img);
    t.input = YCbCrImage(reflect_pad(ycc.y, multiple), reflect_pad(ycc.cb, multiple),
                         reflect_pad(ycc.cr, multiple));
    t.l_hat = ian::estimate_illumination(bundle.ian, t.input.y);
    t.y_ia = ian::adjust_luminance(t.input.y, t.l_hat);
    t.level = noise::noise_level_map(t.l_hat);

    switch (options.variant) {
    case Variant::none: {
        std::vector<noise::NoiseLevelMap> maps;
        for (double s : bundle.ladder.scales) {
            maps.push_back(noise::scaled(t.level, s));
            t.candidates.push_back(noise::denoise(bundle.ansn, t.y_ia, maps.back()));
        }
        t.y_nf = noise::fuse(bundle.nfm, t.candidates, maps);
        break;
    }
    case Variant::no_dn:
        t.y_nf = clamp01(t.y_ia);
        break;
    case Variant::no_nfm:
        t.candidates.push_back(
            noise::denoise(bundle.ansn, t.y_ia, noise::scaled(t.level, bundle.ladder.scales[1])));
        t.y_nf = clamp01(t.candidates.back());
        break;
    case Variant::no_sep:
    case Variant::pn:
        t.candidates.push_back(noise::denoise(*options.ablation, t.y_ia, t.level));
        t.y_nf = clamp01(t.candidates.back());
        break;
    case Variant::fgn: {
        const noise::NoiseLevelMap flat(t.y_ia.height(), t.y_ia.width(),
                                        static_cast<float>(options.fgn_sigma));
        t.candidates.push_back(noise::denoise(*options.ablation, t.y_ia, flat));
        t.y_nf = clamp01(t.candidates.back());
        break;
    }
    }

    t.chroma = can::adapt_color(bundle.can, t.input.y, t.input.cb, t.input.cr, t.y_nf);
    const auto rgb = ycbcr_to_rgb(YCbCrImage(t.y_nf, t.chroma.cb, t.chroma.cr));
    t.output = clamp01(crop(rgb, 0, 0, img.height(), img.width()));
    return t;
}

RgbImage enhance(const BreadBundle& bundle, const RgbImage& img, const EnhanceOptions& options)
{
    return enhance_traced(bundle, img, options).output;
}

}  // namespace bread::pipeline
