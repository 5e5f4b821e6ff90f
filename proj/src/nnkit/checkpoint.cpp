#include "bread/nnkit/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace bread::nn {

std::string_view stage_name(Stage stage) noexcept
{
    switch (stage) {
    case Stage::ian: return "ian";
    case Stage::ansn: return "ansn";
    case Stage::nfm: return "nfm";
    case Stage::can: return "can";
    case Stage::can_me: return "can_me";
    }
    return "unknown";
}

Stage parse_stage(std::string_view tag)
{
    for (Stage s : {Stage::ian, Stage::ansn, Stage::nfm, Stage::can, Stage::can_me}) {
        if (stage_name(s) == tag) {
            return s;
        }
    }
    throw ConfigError("unknown stage '" + std::string(tag) +
                      "' (expected ian|ansn|nfm|can|can_me)");
}

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) {
            bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void str(std::string_view s)
    {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.insert(bytes_.end(), s.begin(), s.end());
    }
    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return need(1)[0]; }
    std::uint32_t u32()
    {
        const auto b = need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64()
    {
        const auto b = need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(b[static_cast<std::size_t>(i)]) << (8 * i);
        }
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str()
    {
        const std::uint32_t n = u32();
        const auto b = need(n);
        return std::string(b.begin(), b.end());
    }
    std::string raw(std::size_t n)
    {
        const auto b = need(n);
        return std::string(b.begin(), b.end());
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> need(std::size_t n)
    {
        if (bytes_.size() - pos_ < n) {
            throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
        }
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt)
{
    Writer w;
    w.raw(kCheckpointMagic);
    w.u8(ckpt.version);
    w.str(stage_name(ckpt.stage));
    w.u32(static_cast<std::uint32_t>(ckpt.spec.in_channels));
    w.u32(static_cast<std::uint32_t>(ckpt.spec.out_channels));
    w.u32(static_cast<std::uint32_t>(ckpt.spec.base_channels));
    w.u32(static_cast<std::uint32_t>(ckpt.spec.max_channels));
    w.u32(static_cast<std::uint32_t>(ckpt.spec.depth));
    w.u8(static_cast<std::uint8_t>(ckpt.spec.final_activation));
    w.u64(ckpt.step);
    w.u32(static_cast<std::uint32_t>(ckpt.params.tensors.size()));
    for (const auto& t : ckpt.params.tensors) {
        w.str(t.name);
        w.u32(static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) {
            w.u32(static_cast<std::uint32_t>(d));
        }
        for (float v : t.values) {
            w.f32(v);
        }
    }
    return w.take();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    if (bytes.size() < kCheckpointMagic.size() || r.raw(kCheckpointMagic.size()) != kCheckpointMagic) {
        throw FormatError("not a checkpoint: expected magic \"BREADCKPT\"");
    }
    Checkpoint ckpt;
    ckpt.version = r.u8();
    if (ckpt.version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(ckpt.version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    try {
        ckpt.stage = parse_stage(r.str());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    ckpt.spec.in_channels = static_cast<int>(r.u32());
    ckpt.spec.out_channels = static_cast<int>(r.u32());
    ckpt.spec.base_channels = static_cast<int>(r.u32());
    ckpt.spec.max_channels = static_cast<int>(r.u32());
    ckpt.spec.depth = static_cast<int>(r.u32());
    const std::uint8_t act = r.u8();
    if (act > 1) {
        throw FormatError("checkpoint: invalid activation code " + std::to_string(act));
    }
    ckpt.spec.final_activation = static_cast<Activation>(act);
    ckpt.step = r.u64();
    const std::uint32_t records = r.u32();
    for (std::uint32_t i = 0; i < records; ++i) {
        ParamTensor<float> t;
        t.name = r.str();
        const std::uint32_t rank = r.u32();
        if (rank > 8) {
            throw FormatError("checkpoint: implausible rank for '" + t.name + "'");
        }
        std::size_t n = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
            const std::uint32_t d = r.u32();
            t.shape.push_back(static_cast<int>(d));
            n *= d;
        }
        if (n > bytes.size()) {
            throw FormatError("checkpoint truncated in record '" + t.name + "'");
        }
        t.values.resize(n);
        for (float& v : t.values) {
            v = r.f32();
        }
        ckpt.params.tensors.push_back(std::move(t));
    }
    if (!r.done()) {
        throw FormatError("checkpoint has trailing bytes");
    }
    try {
        ckpt.network();
    } catch (const SpecError& e) {
        throw FormatError(std::string("checkpoint inconsistent with its spec: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path)
{
    const auto bytes = serialize_checkpoint(ckpt);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open checkpoint for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("failed writing checkpoint: " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open checkpoint: " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace bread::nn
