#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "paxray/error.hpp"
#include "paxray/grid.hpp"
#include "paxray/label_volume.hpp"
#include "paxray/taxonomy.hpp"

// Procedural chest CT used as a desk-scale stand-in for real scans. All
// geometry is given in unit coordinates (voxel centre = (i + 0.5) / n).

namespace paxray::phantom {

inline constexpr int kMinSize = 32;

struct Phantom {
    Volume3D volume;
    LabelVolume inputs;  // model-derived structures the rule set consumes
};

namespace detail {

inline double unit(int i, int n) noexcept { return (i + 0.5) / n; }

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class Canvas {
public:
    explicit Canvas(int n) : n_(n), hu_(element_count<3>({n, n, n}), -1000.0f), owner_(hu_.size(), -1) {}

    int n() const noexcept { return n_; }

    /// Paints every voxel whose centre satisfies `inside`.
    template <typename Pred>
    void paint(float hu, int owner, Pred&& inside) {
        for (int z = 0; z < n_; ++z)
            for (int y = 0; y < n_; ++y)
                for (int x = 0; x < n_; ++x)
                    if (inside(unit(x, n_), unit(y, n_), unit(z, n_))) set(z, y, x, hu, owner);
    }

    void set(int z, int y, int x, float hu, int owner) {
        if (z < 0 || y < 0 || x < 0 || z >= n_ || y >= n_ || x >= n_) return;
        const auto k = offset(shape(), z, y, x);
        hu_[k] = hu;
        if (owner >= -1) owner_[k] = owner;
    }

    [[nodiscard]] int owner(std::size_t k) const noexcept { return owner_[k]; }
    [[nodiscard]] Extent<3> shape() const noexcept { return {n_, n_, n_}; }
    std::vector<float>& hu() noexcept { return hu_; }

private:
    int n_;
    std::vector<float> hu_;
    std::vector<int> owner_;
};

inline double sq(double v) noexcept { return v * v; }

}  // namespace detail

/// Builds the phantom. The same seed always yields identical data.
[[nodiscard]] inline Phantom make_phantom(std::uint64_t seed, int size) {
    if (size < kMinSize) throw Error("cli", "InvalidArgument", "phantom size must be at least " + std::to_string(kMinSize));
    using detail::sq;
    const int n = size;

    std::vector<std::string> ids;
    auto label = [&](const std::string& id) {
        ids.push_back(id);
        return static_cast<int>(ids.size()) - 1;
    };
    constexpr int kBody = -1;   // owned by no input structure
    constexpr int kKeep = -2;   // intensity only; ownership unchanged
    detail::Canvas c(n);

    // Body column
    c.paint(0.0f, kBody, [](double x, double y, double) { return sq((x - 0.5) / 0.44) + sq((y - 0.5) / 0.34) <= 1.0; });

    // Sub-diaphragmatic region
    const int diaphragm = label("diaphragm");
    c.paint(50.0f, diaphragm, [](double x, double y, double z) {
        return z < 0.33 && sq((x - 0.5) / 0.42) + sq((y - 0.5) / 0.32) <= 1.0;
    });

    // Lungs, split into lobes by axial planes
    const int r_upper = label("right_lobe_upper"), r_middle = label("right_lobe_middle"),
              r_lower = label("right_lobe_lower"), l_upper = label("left_lobe_upper"), l_lower = label("left_lobe_lower");
    auto lung = [](double cx) {
        return [cx](double x, double y, double z) {
            return sq((x - cx) / 0.13) + sq((y - 0.5) / 0.2) + sq((z - 0.6) / 0.25) <= 1.0;
        };
    };
    for (int side = 0; side < 2; ++side) {
        const double cx = side == 0 ? 0.33 : 0.67;  // right lung sits at smaller x
        const auto inside = lung(cx);
        for (int z = 0; z < n; ++z)
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x) {
                    const double uz = detail::unit(z, n);
                    if (!inside(detail::unit(x, n), detail::unit(y, n), uz)) continue;
                    int lobe;
                    if (side == 0) lobe = uz > 0.68 ? r_upper : (uz > 0.55 ? r_middle : r_lower);
                    else lobe = uz > 0.6 ? l_upper : l_lower;
                    c.set(z, y, x, -850.0f, lobe);
                }
        // Vessel tubes: bright, but still lung
        for (double dx : {-0.04, 0.04})
            c.paint(20.0f, kKeep, [&](double x, double y, double z) {
                return inside(x, y, z) && sq(x - cx - dx) + sq(y - 0.5) <= sq(0.025) && std::abs(z - 0.6) < 0.15;
            });
    }

    // Heart
    const int heart = label("heart");
    c.paint(40.0f, heart, [](double x, double y, double z) {
        return sq((x - 0.5) / 0.1) + sq((y - 0.42) / 0.1) + sq((z - 0.45) / 0.1) <= 1.0;
    });

    // Aorta: ascending limb, arch over the top, descending limb
    const int aorta = label("aorta");
    const double r_tube = 0.03, arch_z = 0.72, arch_ry = 0.14, arch_cy = 0.52;
    c.paint(60.0f, aorta, [&](double x, double y, double z) {
        if (z <= arch_z) {
            const bool asc = z >= 0.5 && sq(x - 0.47) + sq(y - 0.38) <= sq(r_tube);
            const bool desc = z >= 0.3 && sq(x - 0.53) + sq(y - 0.66) <= sq(r_tube);
            return asc || desc;
        }
        // Distance to the arch centreline: a half circle in the y-z plane.
        const double dy = y - arch_cy, dz = z - arch_z;
        const double rho = std::sqrt(dy * dy + dz * dz);
        if (rho == 0.0) return false;
        const double t = (dy / rho + 1.0) / 2.0;  // 0 at the ascending end, 1 at the descending end
        const double cx = 0.47 + 0.06 * t;
        return sq(rho - arch_ry) + sq(x - cx) <= sq(r_tube);
    });

    // Esophagus and trachea
    const int esophagus = label("esophagus");
    c.paint(30.0f, esophagus, [](double x, double y, double z) {
        return z >= 0.3 && sq(x - 0.46) + sq(y - 0.58) <= sq(0.02);
    });
    const int airways = label("airways");
    c.paint(-900.0f, airways, [](double x, double y, double z) {
        return z >= 0.74 && sq(x - 0.5) + sq(y - 0.45) <= sq(0.035);
    });

    // Spine: c7, t1..t12, l1 with one-voxel soft-tissue gaps
    std::vector<std::string> vertebrae{"c7"};
    for (int i = 1; i <= 12; ++i) vertebrae.push_back("t" + std::to_string(i));
    vertebrae.push_back("l1");
    const double z_top = 0.95, z_bottom = 0.1;
    const double height = (z_top - z_bottom) * n / static_cast<double>(vertebrae.size());
    for (std::size_t v = 0; v < vertebrae.size(); ++v) {
        const int id = label(vertebrae[v]);
        const int hi = static_cast<int>(std::floor(z_top * n - v * height));
        const int lo = static_cast<int>(std::floor(z_top * n - (v + 1) * height)) + 1;  // leaves the gap below
        for (int z = lo; z < hi; ++z)
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    if (sq(detail::unit(x, n) - 0.5) + sq(detail::unit(y, n) - 0.78) <= sq(0.05))
                        c.set(z, y, x, 700.0f, id);
    }

    // Twelve one-voxel rib arcs per side, at least two slices apart
    const int ribs = label("ribs");
    const int step = std::max(2, static_cast<int>(std::lround(0.55 * n / 12.0)));
    const int rib_top = static_cast<int>(std::floor(0.86 * n));
    for (int i = 0; i < 12; ++i) {
        const int z = rib_top - i * step;
        for (int side : {-1, 1}) {
            const int samples = 8 * n;
            for (int s = 0; s <= samples; ++s) {
                const double theta = 0.35 + (2.5 - 0.35) * s / samples;  // posterior to anterior
                const double x = 0.5 + side * 0.36 * std::sin(theta);
                const double y = 0.5 + 0.27 * std::cos(theta);
                c.set(z, static_cast<int>(std::floor(y * n)), static_cast<int>(std::floor(x * n)), 500.0f, ribs);
            }
        }
    }

    // Acquisition noise
    std::mt19937_64 rng(seed);
    for (auto& v : c.hu()) v = static_cast<float>(std::lround(v + (detail::uniform01(rng) * 20.0 - 10.0)));

    Phantom ph;
    ph.volume = Volume3D(c.shape());
    ph.volume.voxels = c.hu();
    ph.inputs.shape = c.shape();
    ph.inputs.taxonomy = kPaxrayTaxonomyVersion;
    for (const auto& id : ids) ph.inputs.entries.emplace(id, Mask3D(c.shape()));
    for (std::size_t k = 0; k < ph.volume.voxels.size(); ++k)
        if (const int o = c.owner(k); o >= 0) ph.inputs.entries.at(ids[static_cast<std::size_t>(o)]).bits[k] = 1;
    return ph;
}

}  // namespace paxray::phantom
