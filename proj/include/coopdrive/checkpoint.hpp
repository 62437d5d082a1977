#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "coopdrive/bytes.hpp"
#include "coopdrive/core.hpp"
#include "coopdrive/hgat.hpp"

// Versioned parameter checkpoints. The architecture fingerprint and every
// tensor shape are embedded; loading refuses anything that does not match
// the compiled-in layout.

namespace coopdrive {

inline constexpr uint32_t kCheckpointMagic = 0x50444143;  // "CADP"
inline constexpr uint16_t kCheckpointVersion = 1;

inline std::vector<uint8_t> serialize_params(std::span<const double> params) {
    const ParamLayout& L = ParamLayout::get();
    if (params.size() != L.total()) throw ConfigError("parameter vector has the wrong size");

    ByteWriter out;
    out.u32(kCheckpointMagic);
    out.u16(kCheckpointVersion);
    out.u64(L.arch_hash());
    out.u32(static_cast<uint32_t>(L.tensors().size()));
    for (const TensorSpec& t : L.tensors()) {
        out.u16(static_cast<uint16_t>(t.name.size()));
        out.bytes(t.name.data(), t.name.size());
        out.u8(t.cols == 0 ? 1 : 2);
        out.u32(static_cast<uint32_t>(t.rows));
        if (t.cols != 0) out.u32(static_cast<uint32_t>(t.cols));
        for (size_t k = 0; k < t.size(); ++k) out.f64(params[t.offset + k]);
    }
    return out.take();
}

inline std::vector<double> deserialize_params(std::span<const uint8_t> bytes) {
    const ParamLayout& L = ParamLayout::get();
    ByteReader in(bytes.data(), bytes.size());
    if (in.u32() != kCheckpointMagic) throw ConfigError("not a parameter checkpoint");
    if (in.u16() != kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
    if (in.u64() != L.arch_hash()) {
        throw ConfigError("checkpoint architecture does not match this build");
    }
    const uint32_t count = in.u32();
    if (count != L.tensors().size()) throw ConfigError("checkpoint tensor count mismatch");

    std::vector<double> params(L.total());
    for (const TensorSpec& t : L.tensors()) {
        const uint16_t name_len = in.u16();
        in.require(name_len, "tensor name");
        std::string name(name_len, '\0');
        for (auto& ch : name) ch = static_cast<char>(in.u8());
        if (name != t.name) throw ConfigError("checkpoint tensor order mismatch at " + name);
        const uint8_t ndim = in.u8();
        const uint32_t rows = in.u32();
        const uint32_t cols = (ndim == 2) ? in.u32() : 0;
        if (static_cast<int>(rows) != t.rows || static_cast<int>(cols) != t.cols) {
            throw ConfigError("checkpoint shape mismatch for tensor " + name);
        }
        for (size_t k = 0; k < t.size(); ++k) params[t.offset + k] = in.f64();
    }
    return params;
}

inline void save_checkpoint(const std::string& path, std::span<const double> params) {
    const std::vector<uint8_t> bytes = serialize_params(params);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open checkpoint for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<double> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_params(bytes);
}

}  // namespace coopdrive
