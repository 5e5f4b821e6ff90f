#pragma once

// Dataset manifests, exposure augmentation, and patch sampling.
//
// Manifest format (plain text, one entry per line, '#' starts a comment):
//
//   split: train                     optional, "train" (default) or "eval"
//   low/0001.png<TAB>high/0001.png   a paired sample
//   scenes/0007                      a scene directory (exposure sequences)
//
// Relative paths are resolved against the manifest's directory.

#include "bread/can.hpp"
#include "bread/imagecore.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace bread::data {

namespace fs = std::filesystem;

enum class Split { train, eval };

struct DatasetManifest {
    fs::path root;
    Split split = Split::train;
    std::vector<std::pair<fs::path, fs::path>> pairs;  ///< (low, high), absolute
    std::vector<fs::path> scenes;                      ///< absolute
};

/// Throws DataError when the file is missing or a line is malformed.
DatasetManifest read_manifest(const fs::path& path);

struct PairedSample {
    RgbImage low;
    RgbImage high;
    std::string scene;
};

/// Loads every pair, ordered lexicographically by the low image's file name.
/// Throws DataError naming the path of a missing file, or on a size mismatch
/// within a pair.
std::vector<PairedSample> load_paired_dataset(const DatasetManifest& manifest);

inline constexpr double kMaxGainCap = 100.0;

/// Largest gain g >= 1 such that at most `frac` of the pixels have
/// g * max(R, G, B) > 1. Capped at kMaxGainCap (also the all-black result).
/// Throws DomainError unless 0 < frac < 1.
double max_exposure_gain(const RgbImage& img, double frac = 0.25);

/// `count` gains evenly spaced on [1, max_exposure_gain(img, frac)].
std::vector<double> exposure_gains(const RgbImage& img, int count = 8, double frac = 0.25);

/// clamp01(gain * img) for each of exposure_gains(img, count, frac).
std::vector<RgbImage> synthesize_exposures(const RgbImage& low, int count = 8, double frac = 0.25);

/// A square crop window plus an optional horizontal flip.
struct PatchWindow {
    int top = 0;
    int left = 0;
    int size = 0;
    bool flip = false;

    ImagePlane apply(const ImagePlane& p) const;
    RgbImage apply(const RgbImage& img) const;
};

/// Uniform window origin; flip with probability 1/2 when allowed. Throws
/// SizeError when size exceeds either dimension or is not a multiple of 8.
PatchWindow random_window(int height, int width, int size, std::mt19937_64& rng,
                          bool allow_flip = true);

/// The same window applied to low and high.
PairedSample random_patch(const PairedSample& sample, int size, std::mt19937_64& rng,
                          bool allow_flip = true);

/// One sequence per scene directory in the manifest. Frames are the PNG files
/// of the directory sorted by name (names encode the exposure index); scenes
/// are sorted lexicographically. Scenes with fewer than two frames, or with
/// frames of differing sizes, are skipped with a warning on stderr.
std::vector<can::ExposureSequence> load_exposure_sequences(const DatasetManifest& manifest);

/// Every subdirectory of root treated as one scene. A missing or empty root
/// gives an empty list.
std::vector<can::ExposureSequence> load_exposure_sequences(const fs::path& root);

}  // namespace bread::data
