#include "bread/pipeline.hpp"

#include "bread/ian.hpp"
#include "bread/nnkit/adam.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace bread::pipeline {

namespace {

struct Example {
    nn::Tensor<float> input;
    std::vector<ImagePlane> targets;
};

using Sampler = std::function<Example(std::mt19937_64&)>;
using ExampleLoss = std::function<nn::OutputLoss<float>(const nn::Tensor<float>&, const Example&)>;

struct PairData {
    YCbCrImage low;
    YCbCrImage high;
    std::vector<ImagePlane> exposures;  ///< luminance of each synthesized exposure
    IllumMap l_hat;
    noise::NoiseLevelMap level;
    ImagePlane y_ia;
};

std::uint64_t stage_salt(nn::Stage stage, Variant variant)
{
    return 0x100u * static_cast<std::uint64_t>(stage) + static_cast<std::uint64_t>(variant) + 1;
}

nn::OutputLoss<float> with_grads(std::vector<nn::LossTerm> terms,
                                 std::initializer_list<const ImagePlane*> grads)
{
    nn::OutputLoss<float> r;
    r.terms = std::move(terms);
    r.grad_output = nn::stack_planes<float, float>(grads);
    return r;
}

void require_checkpoint(const RunConfig& c, nn::Stage needed, std::string_view requester)
{
    if (!fs::is_regular_file(checkpoint_path(c.work_dir, needed))) {
        throw DependencyError("stage " + std::string(requester) + " needs a trained " +
                              std::string(nn::stage_name(needed)) + " checkpoint in " +
                              c.work_dir.string() + "; run 'bread train --stage " +
                              std::string(nn::stage_name(needed)) + "' first");
    }
}

nn::Network<float> load_network(const RunConfig& c, nn::Stage stage)
{
    return nn::load_checkpoint(checkpoint_path(c.work_dir, stage)).network();
}

std::vector<PairData> load_pairs(const RunConfig& c, bool with_exposures,
                                 const nn::Network<float>* ian_net)
{
    const auto samples = data::load_paired_dataset(data::read_manifest(c.train_manifest));
    if (samples.empty()) {
        throw DataError("training manifest " + c.train_manifest.string() + " lists no pairs");
    }
    std::vector<PairData> out;
    for (const auto& s : samples) {
        if (s.low.height() < c.patch_size || s.low.width() < c.patch_size) {
            throw DataError("image " + s.scene + " is smaller than the patch size " +
                            std::to_string(c.patch_size));
        }
        PairData p;
        p.low = rgb_to_ycbcr(s.low);
        p.high = rgb_to_ycbcr(s.high);
        if (with_exposures) {
            for (const auto& e : data::synthesize_exposures(s.low, c.exposures, c.overexposure)) {
                p.exposures.push_back(rgb_to_ycbcr(e).y);
            }
        }
        if (ian_net != nullptr) {
            const auto padded = reflect_pad(p.low.y, ian_net->spec().size_multiple());
            p.l_hat = crop(ian::estimate_illumination(*ian_net, padded), 0, 0, p.low.height(),
                           p.low.width());
            p.level = noise::noise_level_map(p.l_hat);
            p.y_ia = ian::adjust_luminance(p.low.y, p.l_hat);
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::size_t pick(std::size_t n, std::mt19937_64& rng)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

ImagePlane difference(const ImagePlane& a, const ImagePlane& b)
{
    ImagePlane out(a.height(), a.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return out;
}

nn::Checkpoint optimize(nn::Stage tag, nn::Network<float> net, std::uint64_t start_step,
                        int iterations, double lr, const RunConfig& c, const Sampler& sampler,
                        const ExampleLoss& loss, std::mt19937_64& rng, const fs::path& ckpt_file,
                        const fs::path& log_file)
{
    fs::create_directories(c.work_dir);
    std::ofstream log(log_file, start_step > 0 ? std::ios::app : std::ios::trunc);
    if (!log) {
        throw DataError("cannot write " + log_file.string());
    }
    log.precision(9);
    nn::AdamConfig adam;
    adam.learning_rate = lr;
    auto state = nn::OptimizerState<float>::for_params(net.params(), adam);
    double window = 0.0;
    int in_window = 0;
    std::vector<Example> batch(static_cast<std::size_t>(c.batch_size));
    std::vector<nn::Tensor<float>> inputs(batch.size());
    for (int it = 1; it <= iterations; ++it) {
        for (std::size_t b = 0; b < batch.size(); ++b) {
            batch[b] = sampler(rng);
            inputs[b] = batch[b].input;
        }
        const auto g = nn::gradients<float>(
            net, inputs, [&](const nn::Tensor<float>& out, std::size_t s) { return loss(out, batch[s]); });
        nn::adam_step(net.params(), g.grads, state);
        window += g.loss;
        in_window += 1;
        if (it % c.log_every == 0 || it == iterations) {
            log << start_step + static_cast<std::uint64_t>(it) << ' ' << window / in_window << '\n' << std::flush;
            window = 0.0;
            in_window = 0;
        }
    }
    nn::Checkpoint ckpt;
    ckpt.stage = tag;
    ckpt.spec = net.spec();
    ckpt.params = net.params();
    ckpt.step = start_step + static_cast<std::uint64_t>(iterations);
    nn::save_checkpoint(ckpt, ckpt_file);
    return ckpt;
}

// Denoiser training shared by the ansn stage and the fgn/pn/no_sep ablations.
struct DenoiserTask {
    Sampler sampler;
    ExampleLoss loss;
};

ExampleLoss residual_loss()
{
    return [](const nn::Tensor<float>& out, const Example& ex) {
        const auto pred = nn::channel_plane<float>(out, 0);
        ImagePlane grad;
        const double v = noise::ansn_loss(pred, ex.targets[0], &grad);
        return with_grads({{"mse", v}}, {&grad});
    };
}

DenoiserTask denoiser_task(Variant variant, const RunConfig& c, const std::vector<PairData>& pairs)
{
    const int patch = c.patch_size;
    DenoiserTask task;
    task.loss = residual_loss();
    task.sampler = [&pairs, patch, variant, c](std::mt19937_64& rng) {
        const auto& p = pairs[pick(pairs.size(), rng)];
        const auto w = data::random_window(p.high.height(), p.high.width(), patch, rng);
        const auto yh = w.apply(p.high.y);
        Example ex;
        if (variant == Variant::no_sep) {
            const auto y_ia = w.apply(p.y_ia);
            const auto level = w.apply(p.level);
            ex.input = nn::stack_planes<float, float>({&y_ia, &level});
            ex.targets.push_back(difference(y_ia, yh));
            return ex;
        }
        noise::NoiseLevelMap sigma;
        ImagePlane noisy;
        const std::uint64_t seed = rng();
        if (variant == Variant::fgn) {
            sigma = noise::NoiseLevelMap(patch, patch, static_cast<float>(c.fgn_sigma));
            noisy = noise::synthesize_fixed_gaussian(yh, c.fgn_sigma, seed);
        } else if (variant == Variant::pn) {
            sigma = w.apply(p.level);
            noisy = noise::synthesize_poisson(yh, w.apply(p.l_hat), c.poisson_peak, seed);
        } else {
            const double s = std::uniform_real_distribution<double>(0.0, c.max_noise_scale)(rng);
            sigma = noise::scaled(w.apply(p.level), s);
            noisy = noise::synthesize_noisy(yh, sigma, seed);
        }
        ex.input = nn::stack_planes<float, float>({&noisy, &sigma});
        ex.targets.push_back(difference(noisy, yh));
        return ex;
    };
    return task;
}

nn::Network<float> initial_network(const nn::NetworkSpec& spec, const RunConfig& c, nn::Stage stage,
                                   Variant variant)
{
    return nn::build_network(spec, c.seed * 1000003ULL + stage_salt(stage, variant));
}

std::mt19937_64 stage_rng(const RunConfig& c, nn::Stage stage, Variant variant)
{
    std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                      static_cast<std::uint32_t>(stage_salt(stage, variant))};
    return std::mt19937_64(seq);
}

Example chroma_example(const YCbCrImage& in, const ImagePlane& guide, const ImagePlane& cb,
                       const ImagePlane& cr, int patch, std::mt19937_64& rng)
{
    const auto w = data::random_window(in.height(), in.width(), patch, rng);
    const auto y = w.apply(in.y);
    const auto cbl = w.apply(in.cb);
    const auto crl = w.apply(in.cr);
    const auto g = w.apply(guide);
    Example ex;
    ex.input = nn::stack_planes<float, float>({&y, &cbl, &crl, &g});
    ex.targets = {w.apply(cb), w.apply(cr)};
    return ex;
}

ExampleLoss chroma_loss()
{
    return [](const nn::Tensor<float>& out, const Example& ex) {
        const auto cb = nn::channel_plane<float>(out, 0);
        const auto cr = nn::channel_plane<float>(out, 1);
        ImagePlane gcb, gcr;
        const auto v = can::can_loss(cb, cr, ex.targets[0], ex.targets[1], &gcb, &gcr);
        return with_grads(v.terms(), {&gcb, &gcr});
    };
}

}  // namespace

std::vector<LogEntry> read_log(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open log " + path.string());
    }
    std::vector<LogEntry> out;
    LogEntry e;
    while (in >> e.step >> e.loss) {
        out.push_back(e);
    }
    return out;
}

nn::Checkpoint train_stage(nn::Stage stage, const RunConfig& c, const std::optional<fs::path>& resume)
{
    c.validate();
    auto rng = stage_rng(c, stage, Variant::none);
    const auto ckpt_file = checkpoint_path(c.work_dir, stage);
    const auto log_file = log_path(c.work_dir, stage);
    const int patch = c.patch_size;

    std::optional<nn::Checkpoint> resumed;
    if (resume) {
        if (!fs::is_regular_file(*resume)) {
            throw DependencyError("resume checkpoint " + resume->string() + " does not exist");
        }
        resumed = nn::load_checkpoint(*resume);
        if (resumed->stage != stage) {
            throw DependencyError("resume checkpoint holds stage '" +
                                  std::string(nn::stage_name(resumed->stage)) + "', expected '" +
                                  std::string(nn::stage_name(stage)) + "'");
        }
    }
    const auto start = [&](const nn::NetworkSpec& spec) {
        return resumed ? resumed->network() : initial_network(spec, c, stage, Variant::none);
    };
    const std::uint64_t start_step = resumed ? resumed->step : 0;

    switch (stage) {
    case nn::Stage::ian: {
        const auto pairs = load_pairs(c, true, nullptr);
        const Sampler sampler = [&](std::mt19937_64& r) {
            const auto& p = pairs[pick(pairs.size(), r)];
            const auto& y_low = p.exposures[pick(p.exposures.size(), r)];
            const auto w = data::random_window(p.high.height(), p.high.width(), patch, r);
            Example ex;
            ex.targets = {w.apply(y_low), w.apply(p.high.y)};
            ex.input = nn::stack_planes<float, float>({&ex.targets[0]});
            return ex;
        };
        const ExampleLoss loss = [](const nn::Tensor<float>& out, const Example& ex) {
            const auto l_hat = nn::channel_plane<float>(out, 0);
            ImagePlane grad;
            const auto v = ian::ian_loss(ex.targets[0], ex.targets[1], l_hat, &grad);
            return with_grads(v.terms(), {&grad});
        };
        return optimize(stage, start(ian::network_spec(c.base_channels, c.max_channels)), start_step,
                        c.iterations, c.learning_rate, c, sampler, loss, rng, ckpt_file, log_file);
    }
    case nn::Stage::ansn: {
        require_checkpoint(c, nn::Stage::ian, "ansn");
        const auto ian_net = load_network(c, nn::Stage::ian);
        const auto pairs = load_pairs(c, false, &ian_net);
        const auto task = denoiser_task(Variant::none, c, pairs);
        return optimize(stage, start(noise::ansn_spec(c.base_channels, c.max_channels)), start_step,
                        c.iterations, c.learning_rate, c, task.sampler, task.loss, rng, ckpt_file,
                        log_file);
    }
    case nn::Stage::nfm: {
        require_checkpoint(c, nn::Stage::ian, "nfm");
        require_checkpoint(c, nn::Stage::ansn, "nfm");
        const auto ian_net = load_network(c, nn::Stage::ian);
        const auto ansn_net = load_network(c, nn::Stage::ansn);
        const auto pairs = load_pairs(c, false, &ian_net);
        const Sampler sampler = [&](std::mt19937_64& r) {
            const auto& p = pairs[pick(pairs.size(), r)];
            const auto w = data::random_window(p.high.height(), p.high.width(), patch, r);
            const auto yh = w.apply(p.high.y);
            const auto level = w.apply(p.level);
            const double s = std::uniform_real_distribution<double>(0.0, c.max_noise_scale)(r);
            const auto noisy = noise::synthesize_noisy(yh, noise::scaled(level, s), r());
            std::vector<ImagePlane> channels;
            for (double k : c.ladder.scales) {
                auto map = noise::scaled(level, k);
                channels.push_back(noise::denoise(ansn_net, noisy, map));
                channels.push_back(std::move(map));
            }
            Example ex;
            ex.input = nn::stack_planes<float, float>(std::span<const ImagePlane>(channels));
            ex.targets = {yh};
            return ex;
        };
        const ExampleLoss loss = [](const nn::Tensor<float>& out, const Example& ex) {
            const auto y_nf = nn::channel_plane<float>(out, 0);
            ImagePlane grad;
            const auto v = noise::nfm_loss(y_nf, ex.targets[0], &grad);
            return with_grads(v.terms(), {&grad});
        };
        const auto spec = noise::nfm_spec(static_cast<int>(c.ladder.size()), c.base_channels,
                                          c.max_channels);
        return optimize(stage, start(spec), start_step, c.iterations, c.learning_rate, c, sampler,
                        loss, rng, ckpt_file, log_file);
    }
    case nn::Stage::can: {
        const auto pairs = load_pairs(c, false, nullptr);
        const Sampler sampler = [&](std::mt19937_64& r) {
            const auto& p = pairs[pick(pairs.size(), r)];
            // Training guide is the reference luminance.
            return chroma_example(p.low, p.high.y, p.high.cb, p.high.cr, patch, r);
        };
        return optimize(stage, start(can::network_spec(c.base_channels, c.max_channels)), start_step,
                        c.iterations, c.learning_rate, c, sampler, chroma_loss(), rng, ckpt_file,
                        log_file);
    }
    case nn::Stage::can_me: {
        if (c.sequence_manifest.empty()) {
            throw ConfigError("stage can_me needs sequence_manifest");
        }
        const auto sequences = data::load_exposure_sequences(data::read_manifest(c.sequence_manifest));
        if (sequences.empty()) {
            throw DataError("no usable exposure sequences in " + c.sequence_manifest.string());
        }
        for (const auto& s : sequences) {
            if (s.frames[0].height() < patch || s.frames[0].width() < patch) {
                throw DataError("scene " + s.scene + " is smaller than the patch size");
            }
        }
        const bool finetune = resumed.has_value();
        std::vector<PairData> pairs;
        if (finetune) {
            pairs = load_pairs(c, false, nullptr);
        }
        const Sampler sampler = [&](std::mt19937_64& r) {
            const std::size_t k = pick(sequences.size() + pairs.size(), r);
            if (k >= sequences.size()) {
                const auto& p = pairs[k - sequences.size()];
                return chroma_example(p.low, p.high.y, p.high.cb, p.high.cr, patch, r);
            }
            const auto me = can::sample_me_pair(sequences[k], r);
            return chroma_example(me.input, me.guide, me.chroma.cb, me.chroma.cr, patch, r);
        };
        return optimize(stage, start(can::network_spec(c.base_channels, c.max_channels)), start_step,
                        c.iterations, finetune ? c.finetune_learning_rate : c.learning_rate, c,
                        sampler, chroma_loss(), rng, ckpt_file, log_file);
    }
    }
    throw ConfigError("unknown stage");
}

nn::Checkpoint train_ablation_denoiser(Variant variant, const RunConfig& c)
{
    c.validate();
    if (variant != Variant::no_sep && variant != Variant::fgn && variant != Variant::pn) {
        throw ConfigError("variant " + std::string(variant_name(variant)) + " has no denoiser to train");
    }
    require_checkpoint(c, nn::Stage::ian, "ablation " + std::string(variant_name(variant)));
    const auto ian_net = load_network(c, nn::Stage::ian);
    const auto pairs = load_pairs(c, false, &ian_net);
    const auto task = denoiser_task(variant, c, pairs);
    auto rng = stage_rng(c, nn::Stage::ansn, variant);
    const auto ckpt_file = ablation_checkpoint_path(c.work_dir, variant);
    auto log_file = ckpt_file;
    log_file.replace_extension(".log");
    return optimize(nn::Stage::ansn,
                    initial_network(noise::ansn_spec(c.base_channels, c.max_channels), c,
                                    nn::Stage::ansn, variant),
                    0, c.iterations, c.learning_rate, c, task.sampler, task.loss, rng, ckpt_file,
                    log_file);
}

}  // namespace bread::pipeline
