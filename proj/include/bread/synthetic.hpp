#pragma once

// Procedural stand-ins for paired low/normal-light data and exposure
// sequences. Scenes are piecewise-smooth color layouts with texture; the
// low-light version applies a smooth spatially varying illumination, a
// slight color cast, signal-dependent noise, and 8-bit quantization.

#include "bread/can.hpp"
#include "bread/dataprep.hpp"

#include <cstdint>
#include <filesystem>

namespace bread::synthetic {

struct DarkeningOptions {
    double min_illumination = 0.04;
    double max_illumination = 0.2;
    double read_noise = 0.004;   ///< std of the signal-independent part
    double shot_noise = 0.0004;  ///< variance per unit of darkened signal
    double color_cast = 0.08;    ///< max relative per-channel gain offset
};

RgbImage render_scene(int height, int width, std::uint64_t seed);

/// Low-light rendering of `high`, quantized to 8 bits.
RgbImage darken(const RgbImage& high, std::uint64_t seed, const DarkeningOptions& options = {});

data::PairedSample make_pair(int height, int width, std::uint64_t seed,
                             const DarkeningOptions& options = {});

/// `frames` exposures of one scene, gains increasing from 0.15 to 1.4.
can::ExposureSequence make_sequence(int height, int width, int frames, std::uint64_t seed);

/// Writes low/NNNN.png, high/NNNN.png and a manifest (name given) listing them.
void write_paired_set(const std::filesystem::path& dir, const std::string& manifest_name,
                      int count, int height, int width, std::uint64_t seed,
                      data::Split split = data::Split::train);

/// Writes scenes/NNNN/frameKKKK.png and sequences.txt listing the scene dirs.
void write_sequence_set(const std::filesystem::path& dir, int scenes, int frames, int height,
                        int width, std::uint64_t seed);

}  // namespace bread::synthetic
