#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "paxray/error.hpp"
#include "paxray/grid.hpp"

namespace paxray::morph {

// ---------------------------------------------------------------------------
// Connected components
// ---------------------------------------------------------------------------

/// Component id per element (0 = background, 1..count in first-element scan order).
template <std::size_t Dim>
struct Components {
    Extent<Dim> shape{};
    std::vector<std::int32_t> ids;
    std::int32_t count = 0;
    std::vector<std::size_t> sizes;  // sizes[id - 1]

    [[nodiscard]] Mask<Dim> component(std::int32_t id) const {
        Mask<Dim> m(shape);
        for (std::size_t i = 0; i < ids.size(); ++i) m.bits[i] = ids[i] == id ? 1 : 0;
        return m;
    }
};

/// Face connectivity: 6 in 3D, 4 in 2D. Full connectivity: 26 / 8.
template <std::size_t Dim>
[[nodiscard]] constexpr int face_connectivity() noexcept {
    return Dim == 3 ? 6 : 4;
}

template <std::size_t Dim>
[[nodiscard]] constexpr int full_connectivity() noexcept {
    return Dim == 3 ? 26 : 8;
}

namespace detail {

template <std::size_t Dim>
bool use_full_connectivity(int connectivity) {
    if (connectivity == face_connectivity<Dim>()) return false;
    if (connectivity == full_connectivity<Dim>()) return true;
    throw Error("morph", "InvalidConnectivity", std::to_string(connectivity));
}

/// Neighbour offsets that precede the origin in scan order.
template <std::size_t Dim>
std::vector<std::array<int, Dim>> backward_offsets(bool full) {
    std::vector<std::array<int, Dim>> out;
    std::array<int, Dim> d{};
    const int total = Dim == 3 ? 27 : 9;
    for (int k = 0; k < total; ++k) {
        int r = k;
        int nonzero = 0;
        for (std::size_t a = Dim; a-- > 0;) {
            d[a] = r % 3 - 1;
            r /= 3;
            nonzero += d[a] != 0;
        }
        if (nonzero == 0 || (!full && nonzero > 1)) continue;
        const auto first = std::find_if(d.begin(), d.end(), [](int v) { return v != 0; });
        if (*first < 0) out.push_back(d);
    }
    return out;
}

inline std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace detail

/// Two-pass union-find labelling.
template <std::size_t Dim>
[[nodiscard]] Components<Dim> connected_components(const Mask<Dim>& mask, int connectivity) {
    const bool full = detail::use_full_connectivity<Dim>(connectivity);
    const auto offsets = detail::backward_offsets<Dim>(full);
    const std::size_t n = mask.bits.size();

    std::array<std::ptrdiff_t, Dim> stride{};
    stride[Dim - 1] = 1;
    for (std::size_t a = Dim - 1; a-- > 0;) stride[a] = stride[a + 1] * mask.shape[a + 1];

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask.bits[i]) continue;
        const auto c = unravel<Dim>(mask.shape, i);
        for (const auto& d : offsets) {
            bool inside = true;
            std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i);
            for (std::size_t a = 0; a < Dim; ++a) {
                const int q = c[a] + d[a];
                if (q < 0 || q >= mask.shape[a]) {
                    inside = false;
                    break;
                }
                j += d[a] * stride[a];
            }
            if (!inside || !mask.bits[static_cast<std::size_t>(j)]) continue;
            const auto ra = detail::find_root(parent, i);
            const auto rb = detail::find_root(parent, static_cast<std::size_t>(j));
            if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
    }

    Components<Dim> out;
    out.shape = mask.shape;
    out.ids.assign(n, 0);
    std::vector<std::int32_t> root_id(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask.bits[i]) continue;
        const auto r = detail::find_root(parent, i);
        if (root_id[r] == 0) {
            root_id[r] = ++out.count;
            out.sizes.push_back(0);
        }
        out.ids[i] = root_id[r];
        ++out.sizes[static_cast<std::size_t>(root_id[r] - 1)];
    }
    return out;
}

/// Keeps the component with the most elements; ties go to the smallest id.
template <std::size_t Dim>
[[nodiscard]] Mask<Dim> largest_component(const Mask<Dim>& mask, int connectivity = face_connectivity<Dim>()) {
    const auto cc = connected_components(mask, connectivity);
    if (cc.count == 0) throw Error("morph", "EmptyMask");
    const auto best = std::max_element(cc.sizes.begin(), cc.sizes.end());  // first maximum
    return cc.component(static_cast<std::int32_t>(best - cc.sizes.begin()) + 1);
}

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> remove_small_components(const Mask<Dim>& mask, std::size_t min_size,
                                                int connectivity = face_connectivity<Dim>()) {
    if (min_size == 0) return mask;
    const auto cc = connected_components(mask, connectivity);
    Mask<Dim> out(mask.shape);
    for (std::size_t i = 0; i < cc.ids.size(); ++i)
        if (cc.ids[i] > 0 && cc.sizes[static_cast<std::size_t>(cc.ids[i] - 1)] >= min_size) out.bits[i] = 1;
    return out;
}

// ---------------------------------------------------------------------------
// Binary morphology with a box structuring element of side 2r+1
// ---------------------------------------------------------------------------

namespace detail {

/// One separable pass along `axis`. Dilation looks for any set element in the
/// clipped window; erosion requires all in-bounds elements set, so the region
/// outside the grid behaves as foreground.
template <std::size_t Dim>
void box_pass(std::vector<std::uint8_t>& bits, const Extent<Dim>& shape, std::size_t axis, int r, bool dilate) {
    const int len = shape[axis];
    std::size_t stride = 1;
    for (std::size_t a = axis + 1; a < Dim; ++a) stride *= static_cast<std::size_t>(shape[a]);
    const std::size_t outer = bits.size() / (stride * static_cast<std::size_t>(len));

    std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
    std::vector<std::uint8_t> line(static_cast<std::size_t>(len));
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t s = 0; s < stride; ++s) {
            const std::size_t base = o * stride * static_cast<std::size_t>(len) + s;
            for (int k = 0; k < len; ++k) {
                const bool v = bits[base + static_cast<std::size_t>(k) * stride] != 0;
                prefix[k + 1] = prefix[k] + (dilate ? v : !v);
            }
            for (int k = 0; k < len; ++k) {
                const int lo = std::max(0, k - r);
                const int hi = std::min(len - 1, k + r);
                const int hits = prefix[hi + 1] - prefix[lo];
                line[k] = dilate ? (hits > 0) : (hits == 0);
            }
            for (int k = 0; k < len; ++k) bits[base + static_cast<std::size_t>(k) * stride] = line[k];
        }
    }
}

}  // namespace detail

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> dilate(const Mask<Dim>& mask, int radius) {
    Mask<Dim> out = mask;
    if (radius <= 0) return out;
    for (std::size_t a = 0; a < Dim; ++a) detail::box_pass<Dim>(out.bits, out.shape, a, radius, true);
    return out;
}

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> erode(const Mask<Dim>& mask, int radius) {
    Mask<Dim> out = mask;
    if (radius <= 0) return out;
    for (std::size_t a = 0; a < Dim; ++a) detail::box_pass<Dim>(out.bits, out.shape, a, radius, false);
    return out;
}

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> binary_close(const Mask<Dim>& mask, int radius) {
    return erode(dilate(mask, radius), radius);
}

template <std::size_t Dim>
[[nodiscard]] Mask<Dim> binary_open(const Mask<Dim>& mask, int radius) {
    return dilate(erode(mask, radius), radius);
}

// ---------------------------------------------------------------------------
// Histogram thresholding
// ---------------------------------------------------------------------------

struct Histogram {
    std::vector<double> bin_edges;  // strictly increasing, size = counts.size() + 1
    std::vector<std::uint64_t> counts;
};

/// Unit-width bins over [lo, hi); values outside are clamped into the end bins.
[[nodiscard]] inline Histogram integer_histogram(const std::vector<double>& values, int lo, int hi) {
    Histogram h;
    const int bins = std::max(1, hi - lo);
    h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) h.bin_edges[static_cast<std::size_t>(i)] = lo + i;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        auto b = static_cast<long long>(std::floor(v)) - lo;
        b = std::clamp<long long>(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

/// Otsu threshold: the bin edge whose split maximises between-class variance,
/// computed with bin centres. Lower class is [first edge, threshold). Ties
/// (relative 1e-12) resolve to the lowest edge.
[[nodiscard]] inline double otsu_threshold(const Histogram& h) {
    if (h.bin_edges.size() != h.counts.size() + 1) throw Error("morph", "InvalidHistogram", "edge/count mismatch");
    for (std::size_t i = 1; i < h.bin_edges.size(); ++i)
        if (!(h.bin_edges[i] > h.bin_edges[i - 1])) throw Error("morph", "InvalidHistogram", "edges not increasing");
    const auto nonempty = std::count_if(h.counts.begin(), h.counts.end(), [](auto c) { return c > 0; });
    if (nonempty < 2) throw Error("morph", "DegenerateHistogram");

    long double total = 0, total_sum = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const long double centre = 0.5L * (h.bin_edges[i] + h.bin_edges[i + 1]);
        total += h.counts[i];
        total_sum += centre * h.counts[i];
    }
    // sigma_B^2 * N^2 = (N*S0 - S*N0)^2 / (N0*N1)
    std::vector<long double> score(h.counts.size(), -1.0L);
    long double n0 = 0, s0 = 0, best = -1.0L;
    for (std::size_t t = 1; t < h.counts.size(); ++t) {
        const long double centre = 0.5L * (h.bin_edges[t - 1] + h.bin_edges[t]);
        n0 += h.counts[t - 1];
        s0 += centre * h.counts[t - 1];
        const long double n1 = total - n0;
        if (n0 == 0 || n1 == 0) continue;
        const long double diff = total * s0 - total_sum * n0;
        score[t] = diff * diff / (n0 * n1);
        best = std::max(best, score[t]);
    }
    for (std::size_t t = 1; t < h.counts.size(); ++t)
        if (score[t] >= 0 && score[t] >= best - best * 1e-12L) return h.bin_edges[t];
    throw Error("morph", "DegenerateHistogram");
}

}  // namespace paxray::morph
