#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/error.hpp"
#include "paxray/grid.hpp"

// Raw + JSON container: `<stem>.json` header and `<stem>.raw` holding exactly
// shape-product little-endian elements in C order.

namespace paxray {

namespace fs = std::filesystem;

enum class Dtype { i16, u8, f32 };

[[nodiscard]] constexpr std::size_t dtype_size(Dtype d) noexcept {
    switch (d) {
        case Dtype::i16: return 2;
        case Dtype::u8:  return 1;
        case Dtype::f32: return 4;
    }
    return 0;
}

[[nodiscard]] constexpr const char* dtype_name(Dtype d) noexcept {
    switch (d) {
        case Dtype::i16: return "i16";
        case Dtype::u8:  return "u8";
        case Dtype::f32: return "f32";
    }
    return "";
}

[[nodiscard]] inline Dtype parse_dtype(const std::string& s) {
    if (s == "i16") return Dtype::i16;
    if (s == "u8") return Dtype::u8;
    if (s == "f32") return Dtype::f32;
    throw Error("data", "UnsupportedDtype", s);
}

struct RawHeader {
    std::vector<int> shape;
    std::vector<double> spacing_mm;
    Dtype dtype = Dtype::f32;

    [[nodiscard]] std::size_t count() const noexcept {
        std::size_t n = 1;
        for (int v : shape) n *= static_cast<std::size_t>(v);
        return n;
    }
};

struct ContainerPaths {
    fs::path header;
    fs::path raw;
};

/// Accepts the stem or either member file of a container.
[[nodiscard]] inline ContainerPaths container_paths(const fs::path& p) {
    fs::path stem = p;
    if (p.extension() == ".json" || p.extension() == ".raw") stem.replace_extension();
    ContainerPaths out{stem, stem};
    out.header += ".json";
    out.raw += ".raw";
    return out;
}

namespace detail {

inline std::vector<char> read_file(const fs::path& p, const char* module) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(module, "MissingFile", p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, const void* data, std::size_t n, const char* module) {
    std::error_code ec;
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(module, "IoFailure", "cannot open " + p.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw Error(module, "IoFailure", "short write " + p.string());
}

inline void write_text(const fs::path& p, const std::string& s, const char* module) {
    write_file(p, s.data(), s.size(), module);
}

inline std::string header_json(const RawHeader& h) {
    nlohmann::json j;
    j["shape"] = h.shape;
    j["spacing_mm"] = h.spacing_mm;
    j["dtype"] = dtype_name(h.dtype);
    j["endianness"] = "little";
    j["order"] = "C";
    return j.dump() + "\n";
}

inline RawHeader parse_header(const fs::path& p) {
    const auto bytes = read_file(p, "data");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw Error("data", "MalformedHeader", e.what());
    }
    RawHeader h;
    try {
        h.shape = j.at("shape").get<std::vector<int>>();
        h.dtype = parse_dtype(j.at("dtype").get<std::string>());
        if (j.contains("spacing_mm")) h.spacing_mm = j.at("spacing_mm").get<std::vector<double>>();
        if (j.value("endianness", std::string("little")) != "little")
            throw Error("data", "UnsupportedDtype", "only little-endian data is supported");
        if (j.value("order", std::string("C")) != "C")
            throw Error("data", "UnsupportedDtype", "only C order is supported");
    } catch (const nlohmann::json::exception& e) {
        throw Error("data", "MalformedHeader", e.what());
    }
    if (h.shape.empty()) throw Error("data", "MalformedHeader", "empty shape");
    for (int v : h.shape)
        if (v < 1) throw Error("data", "MalformedHeader", "shape entries must be >= 1");
    if (h.spacing_mm.empty()) h.spacing_mm.assign(h.shape.size(), 1.0);
    if (h.spacing_mm.size() != h.shape.size()) throw Error("data", "MalformedHeader", "spacing rank differs from shape");
    return h;
}

inline std::uint16_t load_u16le(const unsigned char* b) noexcept {
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline std::uint32_t load_u32le(const unsigned char* b) noexcept {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

/// Decodes every element to float. u8 and i16 convert exactly.
inline std::vector<float> decode(const std::vector<char>& raw, Dtype dtype, std::size_t n) {
    std::vector<float> out(n);
    const auto* b = reinterpret_cast<const unsigned char*>(raw.data());
    switch (dtype) {
        case Dtype::u8:
            for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(b[i]);
            break;
        case Dtype::i16:
            for (std::size_t i = 0; i < n; ++i)
                out[i] = static_cast<float>(static_cast<std::int16_t>(load_u16le(b + 2 * i)));
            break;
        case Dtype::f32:
            for (std::size_t i = 0; i < n; ++i) out[i] = std::bit_cast<float>(load_u32le(b + 4 * i));
            break;
    }
    return out;
}

inline std::vector<unsigned char> encode(const std::vector<float>& values, Dtype dtype) {
    std::vector<unsigned char> out(values.size() * dtype_size(dtype));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float v = values[i];
        switch (dtype) {
            case Dtype::u8: {
                if (!(v >= 0.0f && v <= 255.0f) || v != std::floor(v))
                    throw Error("data", "ValueOutOfRange", "value not representable as u8");
                out[i] = static_cast<unsigned char>(v);
                break;
            }
            case Dtype::i16: {
                if (!(v >= -32768.0f && v <= 32767.0f) || v != std::floor(v))
                    throw Error("data", "ValueOutOfRange", "value not representable as i16");
                const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
                out[2 * i] = static_cast<unsigned char>(u & 0xFF);
                out[2 * i + 1] = static_cast<unsigned char>(u >> 8);
                break;
            }
            case Dtype::f32: {
                const auto u = std::bit_cast<std::uint32_t>(v);
                for (int k = 0; k < 4; ++k) out[4 * i + k] = static_cast<unsigned char>((u >> (8 * k)) & 0xFF);
                break;
            }
        }
    }
    return out;
}

}  // namespace detail

/// Reads a container of any supported rank, decoding values to float.
inline std::vector<float> read_container(const fs::path& p, RawHeader& header) {
    const auto paths = container_paths(p);
    if (!fs::exists(paths.header)) throw Error("data", "MissingFile", paths.header.string());
    if (!fs::exists(paths.raw)) throw Error("data", "MissingFile", paths.raw.string());
    header = detail::parse_header(paths.header);
    const auto raw = detail::read_file(paths.raw, "data");
    const std::size_t n = header.count();
    if (raw.size() != n * dtype_size(header.dtype))
        throw Error("data", "HeaderMismatch",
                    "expected " + std::to_string(n * dtype_size(header.dtype)) + " bytes, found " +
                        std::to_string(raw.size()));
    return detail::decode(raw, header.dtype, n);
}

inline void write_container(const fs::path& p, const RawHeader& header, const std::vector<float>& values) {
    if (values.size() != header.count()) throw Error("data", "HeaderMismatch", "value count does not match shape");
    const auto paths = container_paths(p);
    const auto bytes = detail::encode(values, header.dtype);
    detail::write_file(paths.raw, bytes.data(), bytes.size(), "data");
    detail::write_text(paths.header, detail::header_json(header), "data");
}

// ---------------------------------------------------------------------------
// Typed wrappers
// ---------------------------------------------------------------------------

[[nodiscard]] inline Volume3D load_volume(const fs::path& p) {
    RawHeader h;
    auto values = read_container(p, h);
    if (h.shape.size() != 3) throw Error("data", "HeaderMismatch", "volume must have rank 3");
    Volume3D v;
    v.shape = {h.shape[0], h.shape[1], h.shape[2]};
    v.spacing_mm = {h.spacing_mm[0], h.spacing_mm[1], h.spacing_mm[2]};
    v.voxels = std::move(values);
    for (float f : v.voxels)
        if (!std::isfinite(f)) throw Error("data", "NonFiniteValue", p.string());
    return v;
}

inline void save_volume(const Volume3D& v, const fs::path& p, Dtype dtype = Dtype::f32) {
    validate_volume(v);
    RawHeader h{{v.shape[0], v.shape[1], v.shape[2]}, {v.spacing_mm.begin(), v.spacing_mm.end()}, dtype};
    write_container(p, h, v.voxels);
}

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> load_mask(const fs::path& p) {
    RawHeader h;
    const auto values = read_container(p, h);
    if (h.shape.size() != Dim) throw Error("data", "HeaderMismatch", "mask rank " + std::to_string(h.shape.size()));
    if (h.dtype != Dtype::u8) throw Error("data", "UnsupportedDtype", "masks are stored as u8");
    Extent<Dim> shape{};
    for (std::size_t i = 0; i < Dim; ++i) shape[i] = h.shape[i];
    Mask<Dim> m(shape);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0.0f && values[i] != 1.0f)
            throw Error("data", "InvalidMaskValue", "byte " + std::to_string(static_cast<int>(values[i])) +
                                                        " at offset " + std::to_string(i));
        m.bits[i] = values[i] != 0.0f ? 1 : 0;
    }
    return m;
}

template <std::size_t Dim>
void save_mask(const Mask<Dim>& m, const fs::path& p, const std::vector<double>& spacing_mm = {}) {
    if (m.bits.size() != element_count<Dim>(m.shape)) throw Error("data", "HeaderMismatch", "bit count");
    RawHeader h;
    h.shape.assign(m.shape.begin(), m.shape.end());
    h.spacing_mm = spacing_mm.empty() ? std::vector<double>(Dim, 1.0) : spacing_mm;
    h.dtype = Dtype::u8;
    const auto paths = container_paths(p);
    std::vector<unsigned char> bytes(m.bits.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = m.bits[i] ? 1 : 0;
    detail::write_file(paths.raw, bytes.data(), bytes.size(), "data");
    detail::write_text(paths.header, detail::header_json(h), "data");
}

/// Full-precision 2D float sidecar.
inline void save_image_f32(const Image2D& img, const fs::path& p) {
    RawHeader h{{img.shape[0], img.shape[1]}, {1.0, 1.0}, Dtype::f32};
    std::vector<float> values(img.pixels.begin(), img.pixels.end());
    write_container(p, h, values);
}

[[nodiscard]] inline Image2D load_image_f32(const fs::path& p) {
    RawHeader h;
    const auto values = read_container(p, h);
    if (h.shape.size() != 2) throw Error("data", "HeaderMismatch", "image must have rank 2");
    Image2D img({h.shape[0], h.shape[1]});
    for (std::size_t i = 0; i < values.size(); ++i) img.pixels[i] = values[i];
    return img;
}

}  // namespace paxray
