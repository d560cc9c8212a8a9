#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "paxray/error.hpp"

// Axis convention used throughout: z increases toward the head (superior),
// y toward the back (posterior), x toward the patient's left. 3D arrays are
// stored z-slowest, x-fastest; 2D arrays row-major.

namespace paxray {

template <std::size_t Dim>
using Extent = std::array<int, Dim>;

/// Radiograph view. Frontal images reduce over y, lateral images over x.
enum class View { frontal, lateral };

[[nodiscard]] inline const char* view_name(View v) noexcept { return v == View::frontal ? "frontal" : "lateral"; }

[[nodiscard]] inline View parse_view(const std::string& s) {
    if (s == "frontal") return View::frontal;
    if (s == "lateral") return View::lateral;
    throw Error("data", "InvalidView", s);
}

template <std::size_t Dim>
[[nodiscard]] constexpr std::size_t element_count(const Extent<Dim>& e) noexcept {
    std::size_t n = 1;
    for (int v : e) n *= static_cast<std::size_t>(v < 0 ? 0 : v);
    return n;
}

template <std::size_t Dim>
[[nodiscard]] constexpr bool valid_extent(const Extent<Dim>& e) noexcept {
    return std::all_of(e.begin(), e.end(), [](int v) { return v >= 1; });
}

template <std::size_t Dim>
[[nodiscard]] std::string extent_string(const Extent<Dim>& e) {
    std::string s = "[";
    for (std::size_t i = 0; i < Dim; ++i) {
        if (i) s += ",";
        s += std::to_string(e[i]);
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// Mask
// ---------------------------------------------------------------------------

/// Binary voxel/pixel mask; one byte per element holding 0 or 1.
template <std::size_t Dim>
struct Mask {
    Extent<Dim> shape{};
    std::vector<std::uint8_t> bits;

    Mask() = default;
    explicit Mask(const Extent<Dim>& s) : shape(s), bits(element_count(s), 0) {}

    [[nodiscard]] std::size_t size() const noexcept { return bits.size(); }
    [[nodiscard]] bool operator[](std::size_t i) const noexcept { return bits[i] != 0; }

    [[nodiscard]] std::size_t count() const noexcept {
        return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
    }
    [[nodiscard]] bool empty() const noexcept {
        return std::none_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
    }

    bool operator==(const Mask&) const = default;
};

using Mask3D = Mask<3>;
using Mask2D = Mask<2>;

[[nodiscard]] inline std::size_t offset(const Extent<3>& s, int z, int y, int x) noexcept {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(s[1]) + static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(s[2]) +
           static_cast<std::size_t>(x);
}

[[nodiscard]] inline std::size_t offset(const Extent<2>& s, int r, int c) noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(s[1]) + static_cast<std::size_t>(c);
}

/// Coordinates of a linear index, most significant axis first.
template <std::size_t Dim>
[[nodiscard]] std::array<int, Dim> unravel(const Extent<Dim>& s, std::size_t i) noexcept {
    std::array<int, Dim> c{};
    for (std::size_t a = Dim; a-- > 0;) {
        const auto n = static_cast<std::size_t>(s[a]);
        c[a] = static_cast<int>(i % n);
        i /= n;
    }
    return c;
}

template <std::size_t Dim>
void require_same_shape(const Extent<Dim>& a, const Extent<Dim>& b, const char* module) {
    if (a != b) throw Error(module, "ShapeMismatch", extent_string<Dim>(a) + " vs " + extent_string<Dim>(b));
}

template <std::size_t Dim, typename Op>
[[nodiscard]] Mask<Dim> combine(const Mask<Dim>& a, const Mask<Dim>& b, Op op) {
    require_same_shape<Dim>(a.shape, b.shape, "data");
    Mask<Dim> out(a.shape);
    for (std::size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = op(a.bits[i] != 0, b.bits[i] != 0) ? 1 : 0;
    return out;
}

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> operator|(const Mask<Dim>& a, const Mask<Dim>& b) {
    return combine(a, b, std::logical_or<>{});
}

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> operator&(const Mask<Dim>& a, const Mask<Dim>& b) {
    return combine(a, b, std::logical_and<>{});
}

/// a \ b
template <std::size_t Dim>
[[nodiscard]] Mask<Dim> difference(const Mask<Dim>& a, const Mask<Dim>& b) {
    return combine(a, b, [](bool x, bool y) { return x && !y; });
}

template <std::size_t Dim>
Mask<Dim>& operator|=(Mask<Dim>& a, const Mask<Dim>& b) {
    require_same_shape<Dim>(a.shape, b.shape, "data");
    for (std::size_t i = 0; i < a.bits.size(); ++i) a.bits[i] |= b.bits[i];
    return a;
}

/// Number of set elements of `a` not set in `b`.
template <std::size_t Dim>
[[nodiscard]] std::size_t count_outside(const Mask<Dim>& a, const Mask<Dim>& b) {
    require_same_shape<Dim>(a.shape, b.shape, "data");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) n += (a.bits[i] && !b.bits[i]) ? 1 : 0;
    return n;
}

template <std::size_t Dim>
[[nodiscard]] bool is_subset(const Mask<Dim>& a, const Mask<Dim>& b) {
    return count_outside(a, b) == 0;
}

// ---------------------------------------------------------------------------
// Volume3D / Image2D
// ---------------------------------------------------------------------------

/// CT intensities in Hounsfield units.
struct Volume3D {
    Extent<3> shape{};
    std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
    std::vector<float> voxels;

    Volume3D() = default;
    explicit Volume3D(const Extent<3>& s, float fill = 0.0f) : shape(s), voxels(element_count(s), fill) {}

    [[nodiscard]] float at(int z, int y, int x) const noexcept { return voxels[offset(shape, z, y, x)]; }
    [[nodiscard]] float& at(int z, int y, int x) noexcept { return voxels[offset(shape, z, y, x)]; }

    bool operator==(const Volume3D&) const = default;
};

/// Projected intensity image; shape is [h, w].
struct Image2D {
    Extent<2> shape{};
    std::vector<double> pixels;

    Image2D() = default;
    explicit Image2D(const Extent<2>& s, double fill = 0.0) : shape(s), pixels(element_count(s), fill) {}

    [[nodiscard]] double at(int r, int c) const noexcept { return pixels[offset(shape, r, c)]; }
    [[nodiscard]] double& at(int r, int c) noexcept { return pixels[offset(shape, r, c)]; }

    bool operator==(const Image2D&) const = default;
};

inline void validate_volume(const Volume3D& v) {
    if (!valid_extent<3>(v.shape)) throw Error("data", "InvalidShape", extent_string<3>(v.shape));
    if (v.voxels.size() != element_count<3>(v.shape))
        throw Error("data", "HeaderMismatch", "voxel count does not match shape");
    for (float f : v.voxels)
        if (!std::isfinite(f)) throw Error("data", "NonFiniteValue");
}

}  // namespace paxray
