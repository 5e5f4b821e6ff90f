#include "bread/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace bread::pipeline {

namespace {

constexpr std::pair<Variant, std::string_view> kVariants[] = {
    {Variant::none, "none"}, {Variant::no_dn, "no_dn"}, {Variant::no_nfm, "no_nfm"},
    {Variant::no_sep, "no_sep"}, {Variant::fgn, "fgn"}, {Variant::pn, "pn"},
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value)
{
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    }
    return out;
}

}  // namespace

std::string_view variant_name(Variant v) noexcept
{
    for (const auto& [variant, name] : kVariants) {
        if (variant == v) {
            return name;
        }
    }
    return "none";
}

Variant parse_variant(std::string_view name)
{
    for (const auto& [variant, n] : kVariants) {
        if (n == name) {
            return variant;
        }
    }
    throw ConfigError("unknown ablation variant '" + std::string(name) + "'");
}

void RunConfig::validate() const
{
    const auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError("invalid config: " + what);
        }
    };
    require(!train_manifest.empty(), "train_manifest is required");
    require(!work_dir.empty(), "work_dir is required");
    require(patch_size >= 16 && patch_size % 8 == 0, "patch_size must be a multiple of 8, >= 16");
    require(batch_size >= 1, "batch_size must be positive");
    require(iterations >= 1, "iterations must be positive");
    require(learning_rate > 0.0 && finetune_learning_rate > 0.0, "learning rates must be positive");
    require(base_channels >= 1 && max_channels >= base_channels,
            "channel widths need 1 <= base_channels <= max_channels");
    require(log_every >= 1, "log_every must be positive");
    require(exposures >= 1, "exposures must be positive");
    require(overexposure > 0.0 && overexposure < 1.0, "overexposure must lie in (0, 1)");
    require(max_noise_scale >= 0.0, "max_noise_scale must be nonnegative");
    require(variant != Variant::fgn || fgn_sigma > 0.0, "fgn requires fgn_sigma > 0");
    require(variant != Variant::pn || poisson_peak > 0.0, "pn requires poisson_peak > 0");
    try {
        ladder.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
}

RunConfig parse_config_text(const std::string& text, const fs::path& base_dir)
{
    RunConfig c;
    const auto path_of = [&](const std::string& v) {
        const fs::path p(v);
        return p.is_absolute() ? p : base_dir / p;
    };
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> keys = {
        {"train_manifest", [&](auto&, auto& v) { c.train_manifest = path_of(v); }},
        {"eval_manifest", [&](auto&, auto& v) { c.eval_manifest = path_of(v); }},
        {"sequence_manifest", [&](auto&, auto& v) { c.sequence_manifest = path_of(v); }},
        {"work_dir", [&](auto&, auto& v) { c.work_dir = path_of(v); }},
        {"patch_size", [&](auto& k, auto& v) { c.patch_size = parse_number<int>(k, v); }},
        {"batch_size", [&](auto& k, auto& v) { c.batch_size = parse_number<int>(k, v); }},
        {"iterations", [&](auto& k, auto& v) { c.iterations = parse_number<int>(k, v); }},
        {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = parse_number<double>(k, v); }},
        {"finetune_learning_rate",
         [&](auto& k, auto& v) { c.finetune_learning_rate = parse_number<double>(k, v); }},
        {"seed", [&](auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
        {"variant", [&](auto&, auto& v) { c.variant = parse_variant(v); }},
        {"base_channels", [&](auto& k, auto& v) { c.base_channels = parse_number<int>(k, v); }},
        {"max_channels", [&](auto& k, auto& v) { c.max_channels = parse_number<int>(k, v); }},
        {"log_every", [&](auto& k, auto& v) { c.log_every = parse_number<int>(k, v); }},
        {"exposures", [&](auto& k, auto& v) { c.exposures = parse_number<int>(k, v); }},
        {"overexposure", [&](auto& k, auto& v) { c.overexposure = parse_number<double>(k, v); }},
        {"max_noise_scale",
         [&](auto& k, auto& v) { c.max_noise_scale = parse_number<double>(k, v); }},
        {"fgn_sigma", [&](auto& k, auto& v) { c.fgn_sigma = parse_number<double>(k, v); }},
        {"poisson_peak", [&](auto& k, auto& v) { c.poisson_peak = parse_number<double>(k, v); }},
        {"ladder",
         [&](auto& k, auto& v) {
             c.ladder.scales.clear();
             std::stringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ',')) {
                 c.ladder.scales.push_back(parse_number<double>(k, trim(item)));
             }
         }},
    };

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto it = keys.find(key);
        if (it == keys.end()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        it->second(key, value);
    }
    if (c.eval_manifest.empty()) {
        c.eval_manifest = c.train_manifest;
    }
    c.validate();
    return c;
}

RunConfig parse_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), fs::absolute(path).parent_path());
}

fs::path checkpoint_path(const fs::path& work_dir, nn::Stage stage)
{
    return work_dir / (std::string(nn::stage_name(stage)) + ".ckpt");
}

fs::path log_path(const fs::path& work_dir, nn::Stage stage)
{
    return work_dir / (std::string(nn::stage_name(stage)) + ".log");
}

fs::path ablation_checkpoint_path(const fs::path& work_dir, Variant v)
{
    return work_dir / ("ablation_" + std::string(variant_name(v)) + ".ckpt");
}

}  // namespace bread::pipeline
