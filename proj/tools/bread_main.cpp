// bread: train, run, score, and ablate the enhancement pipeline.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data error, 4 missing prerequisite (stage or bundle checkpoint).

#include "bread/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace bread;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, data_error = 3, dependency_error = 4 };

int cmd_train(const std::string& stage_tag, const fs::path& config_path,
              const std::optional<fs::path>& resume)
{
    const auto stage = nn::parse_stage(stage_tag);
    const auto config = pipeline::parse_config(config_path);
    const auto ckpt = pipeline::train_stage(stage, config, resume);
    const auto log = pipeline::read_log(pipeline::log_path(config.work_dir, stage));
    std::cout << "trained " << stage_tag << " to step " << ckpt.step;
    if (!log.empty()) {
        std::cout << ", loss " << log.front().loss << " -> " << log.back().loss;
    }
    std::cout << "\nwrote " << pipeline::checkpoint_path(config.work_dir, stage).string() << "\n";
    return ok;
}

int cmd_enhance(const fs::path& bundle_dir, const fs::path& input, const fs::path& output, bool me)
{
    const auto bundle = pipeline::BreadBundle::load(bundle_dir, me);
    std::vector<fs::path> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input)) {
            if (e.is_regular_file() && e.path().extension() == ".png") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else {
        throw DataError("input " + input.string() + " does not exist");
    }
    fs::create_directories(output);
    for (const auto& f : files) {
        write_png(output / f.filename(), pipeline::enhance(bundle, read_png(f)));
        std::cout << "enhanced " << f.filename().string() << "\n";
    }
    return ok;
}

int cmd_evaluate(const fs::path& bundle_dir, const fs::path& manifest_path, const fs::path& out,
                 const std::optional<fs::path>& niqe_model, bool me)
{
    const auto bundle = pipeline::BreadBundle::load(bundle_dir, me);
    const auto manifest = data::read_manifest(manifest_path);
    pipeline::EvaluateOptions options;
    options.niqe_model = niqe_model;
    const auto report = pipeline::evaluate(bundle, manifest, options);
    report.write_csv(out / "metrics.csv");
    report.write_json(out / "metrics.json");
    for (const auto& [k, v] : report.aggregate()) {
        std::cout << k << " " << v << "\n";
    }
    for (const auto& [image, msg] : report.errors) {
        std::cerr << "error: " << image << ": " << msg << "\n";
    }
    return ok;
}

int cmd_ablate(const std::string& variant_tag, const fs::path& config_path)
{
    const auto variant = pipeline::parse_variant(variant_tag);
    if (variant == pipeline::Variant::none) {
        throw ConfigError("ablate needs one of no_dn, no_nfm, no_sep, fgn, pn");
    }
    auto config = pipeline::parse_config(config_path);
    config.variant = variant;
    config.validate();
    const auto report = pipeline::run_ablation(variant, config);
    for (const auto& [k, v] : report.aggregate()) {
        std::cout << k << " " << v << "\n";
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Low-light image enhancement: staged training, inference, evaluation"};
    app.require_subcommand(1);

    std::string stage, variant;
    fs::path config, bundle, input, output, manifest, out;
    std::optional<fs::path> resume, niqe_model;
    bool me = false;

    auto* train = app.add_subcommand("train", "Train one stage");
    train->add_option("--stage", stage, "ian | ansn | nfm | can | can_me")->required();
    train->add_option("--config", config, "key=value run configuration")->required();
    train->add_option("--resume", resume, "Checkpoint to continue from");

    auto* enh = app.add_subcommand("enhance", "Enhance a PNG or a directory of PNGs");
    enh->add_option("--bundle", bundle, "Directory holding the stage checkpoints")->required();
    enh->add_option("--input", input, "PNG file or directory")->required();
    enh->add_option("--output", output, "Output directory")->required();
    enh->add_flag("--me", me, "Use the multi-exposure color network");

    auto* eval = app.add_subcommand("evaluate", "Score a bundle on a paired manifest");
    eval->add_option("--bundle", bundle, "Directory holding the stage checkpoints")->required();
    eval->add_option("--manifest", manifest, "Paired manifest")->required();
    eval->add_option("--out", out, "Report directory")->required();
    eval->add_option("--niqe-model", niqe_model, "NIQE model file");
    eval->add_flag("--me", me, "Use the multi-exposure color network");

    auto* abl = app.add_subcommand("ablate", "Train and evaluate an ablation variant");
    abl->add_option("--variant", variant, "no_dn | no_nfm | no_sep | fgn | pn")->required();
    abl->add_option("--config", config, "key=value run configuration")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        if (*train) {
            return cmd_train(stage, config, resume);
        }
        if (*enh) {
            return cmd_enhance(bundle, input, output, me);
        }
        if (*eval) {
            return cmd_evaluate(bundle, manifest, out, niqe_model, me);
        }
        return cmd_ablate(variant, config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const DependencyError& e) {
        std::cerr << "dependency error: " << e.what() << "\n";
        return dependency_error;
    } catch (const BundleError& e) {
        std::cerr << "bundle error: " << e.what() << "\n";
        return dependency_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
}
