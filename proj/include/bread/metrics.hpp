#pragma once

// Full- and no-reference image quality metrics.
//
//   psnr      10 log10(1 / MSE) over all pixels and channels; 99 dB when equal
//   ssim      single-scale SSIM per channel (11-tap Gaussian, sigma 1.5,
//             valid windows), averaged over R, G, B
//   delta_e   mean CIEDE2000 (kL = kC = kH = 1) after sRGB -> XYZ (D65) -> Lab
//   loe       lightness-order error: lightness is max(R, G, B), both maps are
//             nearest-sampled to at most 50x50, and the score is 1000 times
//             the fraction of ordered pixel pairs (i, j), self pairs included,
//             for which [L(i) >= L(j)] differs between input and output
//   niqe      distance between the multivariate Gaussian of an image's
//             36 natural-scene-statistics patch features and a fitted model

#include "bread/imagecore.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bread::metrics {

inline constexpr double kPsnrCap = 99.0;

double psnr(const RgbImage& a, const RgbImage& b);
double ssim(const RgbImage& a, const RgbImage& b);

struct Lab {
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;
};

Lab srgb_to_lab(double r, double g, double b);
double ciede2000(const Lab& x, const Lab& y);
double delta_e(const RgbImage& a, const RgbImage& b);

inline constexpr int kLoeGrid = 50;
double loe(const RgbImage& input, const RgbImage& output);

inline constexpr int kNiqeFeatures = 36;

struct NiqeModel {
    int patch_size = 96;
    double sharpness_threshold = 0.75;  ///< fraction of the sharpest patch kept when fitting
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(kNiqeFeatures);
    Eigen::MatrixXd covariance = Eigen::MatrixXd::Identity(kNiqeFeatures, kNiqeFeatures);

    /// Throws ModelError unless dimensions are right and the covariance is
    /// symmetric positive semi-definite.
    void validate() const;
};

/// Per-patch features (one row per patch of size `patch`) with the patch's
/// sharpness in the returned vector. Intensities are taken on a 0..255 scale.
struct NiqeFeatures {
    Eigen::MatrixXd features;
    std::vector<double> sharpness;
};
NiqeFeatures niqe_features(const ImagePlane& luminance, int patch);

/// Throws ModelError for an empty or featureless corpus.
NiqeModel fit_niqe_model(std::span<const RgbImage> corpus, int patch = 96,
                         double sharpness_threshold = 0.75);
/// Throws SizeError when the image holds fewer than 4 patches.
double niqe(const RgbImage& img, const NiqeModel& model);

/// Little-endian: "NIQEMODL", u32 version (1), u32 patch size, f64 threshold,
/// u32 dimension d, f64 mean[d], f64 covariance[d*d] row-major.
void save_niqe_model(const NiqeModel& model, const std::filesystem::path& path);
NiqeModel load_niqe_model(const std::filesystem::path& path);

struct GammaFit {
    double gamma = 1.0;
    ImagePlane aligned;
};

/// Golden-section search of gamma in [0.1, 10] minimizing
/// MSE(y_out^gamma, y_ref), to an interval width of 1e-4. Falls back to
/// gamma = 1 if the search result is worse than no correction.
GammaFit gamma_align(const ImagePlane& y_out, const ImagePlane& y_ref);

/// Output with its luminance gamma-aligned toward the reference's luminance,
/// recombined with the output's chrominance.
RgbImage gamma_corrected(const RgbImage& output, const RgbImage& reference, double* gamma = nullptr);

struct MetricReport {
    std::vector<std::string> columns;
    std::vector<std::string> images;
    std::vector<std::map<std::string, double>> rows;
    std::map<std::string, std::string> errors;  ///< image -> message
    bool plain = true;
    bool gamma_aligned = false;

    void add(const std::string& image, std::map<std::string, double> values);
    /// Arithmetic mean of every column over the rows that hold it.
    std::map<std::string, double> aggregate() const;
    void write_csv(const std::filesystem::path& path) const;
    void write_json(const std::filesystem::path& path) const;
};

}  // namespace bread::metrics
