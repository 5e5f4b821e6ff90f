// Writes the procedural datasets and the NIQE model used by the tests and
// the desk-scale presets.
//
//   bread_fixtures pairs     --out DIR --count N [--size S] [--seed K] [--eval]
//   bread_fixtures sequences --out DIR --scenes N [--frames F] [--size S] [--seed K]
//   bread_fixtures niqe      --out FILE [--count N] [--size S] [--patch P] [--seed K]

#include "bread/metrics.hpp"
#include "bread/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace bread;

int main(int argc, char** argv)
{
    CLI::App app{"Procedural fixture generator"};
    app.require_subcommand(1);

    fs::path out;
    int count = 8, size = 160, scenes = 4, frames = 5, patch = 32;
    std::uint64_t seed = 1;
    bool eval = false;
    std::string manifest = "manifest.txt";

    auto* pairs = app.add_subcommand("pairs", "Paired low/normal-light images");
    pairs->add_option("--out", out)->required();
    pairs->add_option("--count", count);
    pairs->add_option("--size", size);
    pairs->add_option("--seed", seed);
    pairs->add_option("--manifest", manifest);
    pairs->add_flag("--eval", eval);

    auto* seqs = app.add_subcommand("sequences", "Multi-exposure sequences");
    seqs->add_option("--out", out)->required();
    seqs->add_option("--scenes", scenes);
    seqs->add_option("--frames", frames);
    seqs->add_option("--size", size);
    seqs->add_option("--seed", seed);

    auto* niqe = app.add_subcommand("niqe", "Fit a NIQE model on normal-light renders");
    niqe->add_option("--out", out)->required();
    niqe->add_option("--count", count);
    niqe->add_option("--size", size);
    niqe->add_option("--patch", patch);
    niqe->add_option("--seed", seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*pairs) {
            synthetic::write_paired_set(out, manifest, count, size, size, seed,
                                        eval ? data::Split::eval : data::Split::train);
        } else if (*seqs) {
            synthetic::write_sequence_set(out, scenes, frames, size, size, seed);
        } else {
            std::vector<RgbImage> corpus;
            for (int k = 0; k < count; ++k) {
                corpus.push_back(synthetic::render_scene(size, size, seed + 7919ULL * static_cast<std::uint64_t>(k)));
            }
            metrics::save_niqe_model(metrics::fit_niqe_model(corpus, patch), out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
