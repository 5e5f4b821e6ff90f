#include "bread/dataprep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bread::data {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

fs::path resolve(const fs::path& root, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : root / path;
}

std::vector<fs::path> png_files(const fs::path& dir)
{
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            auto ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            if (ext == ".png") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

DatasetManifest read_manifest(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open manifest " + path.string());
    }
    DatasetManifest m;
    m.root = fs::absolute(path).parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        if (trim(line).rfind("split:", 0) == 0) {
            const auto value = trim(trim(line).substr(6));
            if (value == "train") {
                m.split = Split::train;
            } else if (value == "eval") {
                m.split = Split::eval;
            } else {
                throw DataError(path.string() + ":" + std::to_string(lineno) +
                                ": unknown split '" + value + "'");
            }
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            m.scenes.push_back(resolve(m.root, trim(line)));
            continue;
        }
        const auto low = trim(line.substr(0, tab));
        const auto high = trim(line.substr(tab + 1));
        if (low.empty() || high.empty() || high.find('\t') != std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'low<TAB>high'");
        }
        m.pairs.emplace_back(resolve(m.root, low), resolve(m.root, high));
    }
    return m;
}

std::vector<PairedSample> load_paired_dataset(const DatasetManifest& manifest)
{
    std::vector<std::string> missing;
    for (const auto& [low, high] : manifest.pairs) {
        for (const auto* p : {&low, &high}) {
            if (!fs::is_regular_file(*p)) {
                missing.push_back(p->string());
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing dataset files:";
        for (const auto& m : missing) {
            msg += " " + m;
        }
        throw DataError(msg);
    }
    auto pairs = manifest.pairs;
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        return a.first.filename().string() < b.first.filename().string();
    });
    std::vector<PairedSample> out;
    out.reserve(pairs.size());
    for (const auto& [low, high] : pairs) {
        PairedSample s{read_png(low), read_png(high), low.stem().string()};
        if (s.low.height() != s.high.height() || s.low.width() != s.high.width()) {
            throw DataError("size mismatch between " + low.string() + " and " + high.string());
        }
        out.push_back(std::move(s));
    }
    return out;
}

double max_exposure_gain(const RgbImage& img, double frac)
{
    if (!(frac > 0.0 && frac < 1.0)) {
        throw DomainError("over-exposure fraction must lie in (0, 1)");
    }
    const auto peak = max_rgb(img);
    std::vector<float> v(peak.values().begin(), peak.values().end());
    const std::size_t n = v.size();
    const auto rank = static_cast<std::size_t>(
        std::clamp<double>(std::ceil((1.0 - frac) * static_cast<double>(n)) - 1.0, 0.0,
                           static_cast<double>(n - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank), v.end());
    const double q = v[rank];
    if (q <= 0.0) {
        return kMaxGainCap;
    }
    double gain = std::min(1.0 / q, kMaxGainCap);
    while (gain * q > 1.0) {
        gain = std::nextafter(gain, 0.0);
    }
    return std::max(gain, 1.0);
}

std::vector<double> exposure_gains(const RgbImage& img, int count, double frac)
{
    if (count < 1) {
        throw DomainError("exposure count must be at least 1");
    }
    const double gmax = max_exposure_gain(img, frac);
    std::vector<double> gains(static_cast<std::size_t>(count), 1.0);
    for (int k = 1; k < count; ++k) {
        gains[static_cast<std::size_t>(k)] =
            k == count - 1 ? gmax : 1.0 + (gmax - 1.0) * k / (count - 1);
    }
    return gains;
}

std::vector<RgbImage> synthesize_exposures(const RgbImage& low, int count, double frac)
{
    std::vector<RgbImage> out;
    for (double g : exposure_gains(low, count, frac)) {
        RgbImage img(low.height(), low.width());
        for (int c = 0; c < 3; ++c) {
            const auto& src = low.channel(c);
            auto& dst = img.channel(c);
            for (std::size_t i = 0; i < src.size(); ++i) {
                dst[i] = static_cast<float>(std::clamp(g * static_cast<double>(src[i]), 0.0, 1.0));
            }
        }
        out.push_back(std::move(img));
    }
    return out;
}

ImagePlane PatchWindow::apply(const ImagePlane& p) const
{
    auto c = crop(p, top, left, size, size);
    return flip ? flip_horizontal(c) : c;
}

RgbImage PatchWindow::apply(const RgbImage& img) const
{
    return RgbImage(apply(img.r), apply(img.g), apply(img.b));
}

PatchWindow random_window(int height, int width, int size, std::mt19937_64& rng, bool allow_flip)
{
    if (size < 8 || size % 8 != 0) {
        throw SizeError("patch size must be a positive multiple of 8, got " + std::to_string(size));
    }
    if (size > height || size > width) {
        throw SizeError("patch size " + std::to_string(size) + " exceeds image " +
                        std::to_string(height) + "x" + std::to_string(width));
    }
    std::uniform_int_distribution<int> row(0, height - size);
    std::uniform_int_distribution<int> col(0, width - size);
    PatchWindow w;
    w.size = size;
    w.top = row(rng);
    w.left = col(rng);
    if (allow_flip) {
        w.flip = std::bernoulli_distribution(0.5)(rng);
    }
    return w;
}

PairedSample random_patch(const PairedSample& sample, int size, std::mt19937_64& rng,
                          bool allow_flip)
{
    const auto w = random_window(sample.low.height(), sample.low.width(), size, rng, allow_flip);
    return {w.apply(sample.low), w.apply(sample.high), sample.scene};
}

std::vector<can::ExposureSequence> load_exposure_sequences(const DatasetManifest& manifest)
{
    auto scenes = manifest.scenes;
    std::sort(scenes.begin(), scenes.end());
    std::vector<can::ExposureSequence> out;
    for (const auto& dir : scenes) {
        if (!fs::is_directory(dir)) {
            std::cerr << "warning: skipping scene " << dir.string() << ": not a directory\n";
            continue;
        }
        can::ExposureSequence seq;
        seq.scene = dir.filename().string();
        for (const auto& f : png_files(dir)) {
            seq.frames.push_back(read_png(f));
        }
        if (seq.frames.size() < 2) {
            std::cerr << "warning: skipping scene " << dir.string() << ": fewer than 2 frames\n";
            continue;
        }
        const bool same = std::all_of(seq.frames.begin(), seq.frames.end(), [&](const RgbImage& f) {
            return f.height() == seq.frames[0].height() && f.width() == seq.frames[0].width();
        });
        if (!same) {
            std::cerr << "warning: skipping scene " << dir.string() << ": frame sizes differ\n";
            continue;
        }
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<can::ExposureSequence> load_exposure_sequences(const fs::path& root)
{
    DatasetManifest m;
    m.root = root;
    if (fs::is_directory(root)) {
        for (const auto& entry : fs::directory_iterator(root)) {
            if (entry.is_directory()) {
                m.scenes.push_back(entry.path());
            }
        }
    }
    return load_exposure_sequences(m);
}

}  // namespace bread::data
