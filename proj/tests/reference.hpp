#pragma once

// Straightforward re-statements of the projection and label projection used
// as oracles. They share no code with the library beyond data types.

#include <algorithm>
#include <cmath>
#include <vector>

#include "paxray/paxray.hpp"

namespace reference {

using paxray::Extent;
using paxray::Mask2D;
using paxray::Mask3D;
using paxray::View;

/// Voxel index for (z, depth position d, in-plane column c) of a view.
inline std::size_t voxel(const Extent<3>& s, View view, int z, int d, int c) {
    const int y = view == View::frontal ? d : c;
    const int x = view == View::frontal ? c : d;
    return (static_cast<std::size_t>(z) * s[1] + y) * s[2] + x;
}

/// One mask's contribution: per-ray standardisation + logistic, 2D unsharp
/// mask on each depth slice with a clamped-border Gaussian, then masking.
inline std::vector<double> field(const paxray::Volume3D& v, const Mask3D& mask, const paxray::project::ProjectionParams& p) {
    const auto& s = v.shape;
    const View view = p.axis;
    const int depth = view == View::frontal ? s[1] : s[2];
    const int cols = view == View::frontal ? s[2] : s[1];
    auto clip = [&](std::size_t i) { return std::min(std::max(static_cast<double>(v.voxels[i]), p.hu_min), p.hu_max); };

    std::vector<double> sig(v.voxels.size());
    for (int z = 0; z < s[0]; ++z)
        for (int c = 0; c < cols; ++c) {
            int n = 0;
            for (int d = 0; d < depth; ++d) n += mask.bits[voxel(s, view, z, d, c)];
            const bool all = n == 0;
            double mean = 0;
            int cnt = 0;
            for (int d = 0; d < depth; ++d) {
                const auto i = voxel(s, view, z, d, c);
                if (all || mask.bits[i]) {
                    mean += clip(i);
                    ++cnt;
                }
            }
            mean /= cnt;
            double var = 0;
            for (int d = 0; d < depth; ++d) {
                const auto i = voxel(s, view, z, d, c);
                if (all || mask.bits[i]) var += (clip(i) - mean) * (clip(i) - mean);
            }
            const double sd = std::max(std::sqrt(var / cnt), p.std_epsilon);
            for (int d = 0; d < depth; ++d) {
                const auto i = voxel(s, view, z, d, c);
                sig[i] = 1.0 / (1.0 + std::exp(-(clip(i) - mean) / sd));
            }
        }

    std::vector<double> out(sig.size());
    const int radius = std::max(1, static_cast<int>(std::ceil(3 * p.sharpen_sigma)));
    std::vector<double> w;
    double wsum = 0;
    for (int k = -radius; k <= radius; ++k) {
        w.push_back(std::exp(-(k * k) / (2 * p.sharpen_sigma * p.sharpen_sigma)));
        wsum += w.back();
    }
    for (auto& x : w) x /= wsum;
    for (int z = 0; z < s[0]; ++z)
        for (int d = 0; d < depth; ++d)
            for (int c = 0; c < cols; ++c) {
                const auto i = voxel(s, view, z, d, c);
                double u = sig[i];
                if (p.sharpen_amount != 0) {
                    double blur = 0;
                    for (int a = -radius; a <= radius; ++a)
                        for (int b = -radius; b <= radius; ++b) {
                            const int zz = std::clamp(z + a, 0, s[0] - 1);
                            const int cc = std::clamp(c + b, 0, cols - 1);
                            blur += w[a + radius] * w[b + radius] * sig[voxel(s, view, zz, d, cc)];
                        }
                    u = sig[i] + p.sharpen_amount * (sig[i] - blur);
                }
                out[i] = mask.bits[i] ? u : 0.0;
            }
    return out;
}

inline paxray::Image2D project(const paxray::Volume3D& v, const Mask3D& body, const Mask3D& bone,
                               const paxray::project::ProjectionParams& p) {
    const auto a = field(v, body, p);
    const auto b = field(v, bone, p);
    std::vector<double> sum(a.size());
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum[i] = a[i] + b[i];
        lo = std::min(lo, sum[i]);
        hi = std::max(hi, sum[i]);
    }
    const auto& s = v.shape;
    const int depth = p.axis == View::frontal ? s[1] : s[2];
    const int cols = p.axis == View::frontal ? s[2] : s[1];
    paxray::Image2D img({s[0], cols});
    for (int z = 0; z < s[0]; ++z)
        for (int c = 0; c < cols; ++c) {
            double acc = 0;
            for (int d = 0; d < depth; ++d) {
                const double x = sum[voxel(s, p.axis, z, d, c)];
                acc += hi > lo ? (x - lo) / (hi - lo) * p.out_max : 0.0;
            }
            img.at(z, c) = acc / depth;
        }
    return img;
}

/// A pixel is set when any voxel along its ray is set.
inline Mask2D any_along(const Mask3D& m, View view) {
    const auto& s = m.shape;
    const int depth = view == View::frontal ? s[1] : s[2];
    const int cols = view == View::frontal ? s[2] : s[1];
    Mask2D out({s[0], cols});
    for (int z = 0; z < s[0]; ++z)
        for (int c = 0; c < cols; ++c)
            for (int d = 0; d < depth; ++d)
                if (m.bits[voxel(s, view, z, d, c)]) out.bits[static_cast<std::size_t>(z) * cols + c] = 1;
    return out;
}

}  // namespace reference
