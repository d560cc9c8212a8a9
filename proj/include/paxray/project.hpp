#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/container.hpp"
#include "paxray/error.hpp"
#include "paxray/grid.hpp"
#include "paxray/label_volume.hpp"
#include "paxray/morph.hpp"
#include "paxray/parallel.hpp"

namespace paxray::project {

enum class StatsMode {
    per_ray_body,  // mean/std of masked voxels on each ray
    global,        // mean/std of all masked voxels in the volume
};

struct ProjectionParams {
    View axis = View::frontal;
    double hu_min = -1024.0;
    double hu_max = 3071.0;
    double std_epsilon = 1e-6;
    double sharpen_amount = 0.5;
    double sharpen_sigma = 1.0;
    double out_max = 255.0;
    StatsMode stats = StatsMode::per_ray_body;

    void validate() const {
        if (!(hu_min < hu_max)) throw Error("project", "InvalidConfig", "hu_clip must be ordered");
        if (!(std_epsilon > 0)) throw Error("project", "InvalidConfig", "std_epsilon must be positive");
        if (!(sharpen_amount >= 0)) throw Error("project", "InvalidConfig", "sharpen_amount must be >= 0");
        if (!(sharpen_sigma > 0)) throw Error("project", "InvalidConfig", "sharpen_sigma must be positive");
        if (!(out_max > 0)) throw Error("project", "InvalidConfig", "out_max must be positive");
    }
};

inline void from_json(const nlohmann::json& j, ProjectionParams& p) {
    if (j.contains("axis")) p.axis = parse_view(j.at("axis").get<std::string>());
    if (j.contains("hu_clip")) {
        const auto clip = j.at("hu_clip").get<std::vector<double>>();
        if (clip.size() != 2) throw Error("project", "InvalidConfig", "hu_clip needs two values");
        p.hu_min = clip[0];
        p.hu_max = clip[1];
    }
    p.std_epsilon = j.value("std_epsilon", p.std_epsilon);
    p.sharpen_amount = j.value("sharpen_amount", p.sharpen_amount);
    p.sharpen_sigma = j.value("sharpen_sigma", p.sharpen_sigma);
    p.out_max = j.value("out_max", p.out_max);
    if (j.contains("stats")) {
        const auto s = j.at("stats").get<std::string>();
        if (s == "per_ray_body") p.stats = StatsMode::per_ray_body;
        else if (s == "global") p.stats = StatsMode::global;
        else throw Error("project", "InvalidConfig", "stats=" + s);
    }
}

struct LabelCleanup {
    int close_radius = 0;
    std::size_t min_component_pixels = 0;
};

inline void from_json(const nlohmann::json& j, LabelCleanup& c) {
    c.close_radius = j.value("close_radius", c.close_radius);
    c.min_component_pixels = j.value("min_component_pixels", c.min_component_pixels);
}

/// Closing, then removal of 8-connected components below the pixel floor.
[[nodiscard]] inline Mask2D apply_cleanup(const Mask2D& m, const LabelCleanup& c) {
    return morph::remove_small_components(morph::binary_close(m, c.close_radius), c.min_component_pixels, 8);
}

// ---------------------------------------------------------------------------
// Ray geometry
// ---------------------------------------------------------------------------

/// A line of voxels along the reduction axis.
struct Ray {
    std::size_t base;
    std::size_t stride;
    int length;
};

[[nodiscard]] inline Extent<2> image_shape(const Extent<3>& s, View view) noexcept {
    return view == View::frontal ? Extent<2>{s[0], s[2]} : Extent<2>{s[0], s[1]};
}

/// Ray r corresponds to output pixel r in row-major image order (row = z).
[[nodiscard]] inline Ray ray(const Extent<3>& s, View view, std::size_t r) noexcept {
    const auto ny = static_cast<std::size_t>(s[1]);
    const auto nx = static_cast<std::size_t>(s[2]);
    if (view == View::frontal) {
        const std::size_t z = r / nx, x = r % nx;
        return {z * ny * nx + x, nx, s[1]};
    }
    const std::size_t z = r / ny, y = r % ny;
    return {(z * ny + y) * nx, 1, s[2]};
}

// ---------------------------------------------------------------------------
// Pipeline stages (exposed individually for testing)
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::vector<double> clip_hu(const Volume3D& v, const ProjectionParams& p) {
    std::vector<double> out(v.voxels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp<double>(v.voxels[i], p.hu_min, p.hu_max);
    return out;
}

[[nodiscard]] inline double logistic(double t) noexcept { return 1.0 / (1.0 + std::exp(-t)); }

namespace detail {

struct Stats {
    double mean = 0;
    double std = 0;
};

template <typename Select>
Stats stats_of(const std::vector<double>& f, std::size_t base, std::size_t stride, int n, Select&& selected) {
    double sum = 0;
    int count = 0;
    for (int k = 0; k < n; ++k) {
        const auto i = base + static_cast<std::size_t>(k) * stride;
        if (selected(i)) {
            sum += f[i];
            ++count;
        }
    }
    if (count == 0) return {};
    const double mean = sum / count;
    double ss = 0;
    for (int k = 0; k < n; ++k) {
        const auto i = base + static_cast<std::size_t>(k) * stride;
        if (selected(i)) ss += (f[i] - mean) * (f[i] - mean);
    }
    return {mean, std::sqrt(ss / count)};
}

}  // namespace detail

/// Standardises every voxel with statistics of the masked voxels (per ray or
/// global) and applies the logistic function. Rays without masked voxels use
/// statistics of the whole ray.
[[nodiscard]] inline std::vector<double> standardize_logistic(const std::vector<double>& clipped, const Extent<3>& s,
                                                              const Mask3D& mask, const ProjectionParams& p) {
    std::vector<double> out(clipped.size());
    const auto in_mask = [&](std::size_t i) { return mask.bits[i] != 0; };
    const auto any = [](std::size_t) { return true; };
    const auto img = image_shape(s, p.axis);
    const std::size_t rays = element_count<2>(img);

    detail::Stats global;
    if (p.stats == StatsMode::global) {
        global = mask.empty() ? detail::stats_of(clipped, 0, 1, static_cast<int>(clipped.size()), any)
                              : detail::stats_of(clipped, 0, 1, static_cast<int>(clipped.size()), in_mask);
    }
    parallel_for(rays, [&](std::size_t r) {
        const auto line = ray(s, p.axis, r);
        detail::Stats st = global;
        if (p.stats == StatsMode::per_ray_body) {
            bool has = false;
            for (int k = 0; k < line.length && !has; ++k) has = mask.bits[line.base + static_cast<std::size_t>(k) * line.stride];
            st = has ? detail::stats_of(clipped, line.base, line.stride, line.length, in_mask)
                     : detail::stats_of(clipped, line.base, line.stride, line.length, any);
        }
        const double sd = std::max(st.std, p.std_epsilon);
        for (int k = 0; k < line.length; ++k) {
            const auto i = line.base + static_cast<std::size_t>(k) * line.stride;
            out[i] = logistic((clipped[i] - st.mean) / sd);
        }
    });
    return out;
}

/// Normalised Gaussian taps for offsets -R..R with R = ceil(3 sigma).
[[nodiscard]] inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0;
    for (int d = -radius; d <= radius; ++d) {
        const double w = std::exp(-0.5 * d * d / (sigma * sigma));
        k[static_cast<std::size_t>(d + radius)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

namespace detail {

/// 1D convolution along `axis` of a 3D field, clamping at the border.
inline std::vector<double> convolve_axis(const std::vector<double>& f, const Extent<3>& s, int axis,
                                         const std::vector<double>& kernel) {
    std::vector<double> out(f.size());
    const int radius = static_cast<int>(kernel.size() / 2);
    const int len = s[static_cast<std::size_t>(axis)];
    std::size_t stride = 1;
    for (int a = axis + 1; a < 3; ++a) stride *= static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
    const std::size_t lines = f.size() / static_cast<std::size_t>(len);
    parallel_for(lines, [&](std::size_t l) {
        const std::size_t outer = l / stride, inner = l % stride;
        const std::size_t base = outer * stride * static_cast<std::size_t>(len) + inner;
        for (int k = 0; k < len; ++k) {
            double acc = 0;
            for (int d = -radius; d <= radius; ++d) {
                const int q = std::clamp(k + d, 0, len - 1);
                acc += kernel[static_cast<std::size_t>(d + radius)] * f[base + static_cast<std::size_t>(q) * stride];
            }
            out[base + static_cast<std::size_t>(k) * stride] = acc;
        }
    });
    return out;
}

}  // namespace detail

/// Unsharp masking of every slice perpendicular to the projection axis:
/// u + amount * (u - gaussian(u)). Amount 0 returns the input unchanged.
[[nodiscard]] inline std::vector<double> unsharp_slices(const std::vector<double>& f, const Extent<3>& s,
                                                        const ProjectionParams& p) {
    if (p.sharpen_amount == 0.0) return f;
    const auto kernel = gaussian_kernel(p.sharpen_sigma);
    const int in_plane = p.axis == View::frontal ? 2 : 1;
    const auto blurred = detail::convolve_axis(detail::convolve_axis(f, s, 0, kernel), s, in_plane, kernel);
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] + p.sharpen_amount * (f[i] - blurred[i]);
    return out;
}

/// Steps (2)-(5) for one mask: standardise, logistic, sharpen, mask.
[[nodiscard]] inline std::vector<double> masked_field(const std::vector<double>& clipped, const Extent<3>& s,
                                                      const Mask3D& mask, const ProjectionParams& p) {
    auto f = unsharp_slices(standardize_logistic(clipped, s, mask, p), s, p);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!mask.bits[i]) f[i] = 0.0;
    return f;
}

/// Maps to [0, 1]; a constant field maps to zeros.
inline void min_max_scale(std::vector<double>& f) {
    if (f.empty()) return;
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    const double a = *lo, b = *hi;
    if (b == a) {
        std::fill(f.begin(), f.end(), 0.0);
        return;
    }
    for (double& x : f) x = (x - a) / (b - a);
}

[[nodiscard]] inline Image2D mean_along_axis(const std::vector<double>& f, const Extent<3>& s, View view) {
    Image2D img(image_shape(s, view));
    parallel_for(img.pixels.size(), [&](std::size_t r) {
        const auto line = ray(s, view, r);
        double acc = 0;
        for (int k = 0; k < line.length; ++k) acc += f[line.base + static_cast<std::size_t>(k) * line.stride];
        img.pixels[r] = acc / line.length;
    });
    return img;
}

/// Pseudo-radiograph: clip, standardise + logistic + sharpen under the body
/// and bone masks, sum, min-max scale, rescale to [0, out_max], average along
/// the projection axis.
[[nodiscard]] inline Image2D intensity_project(const Volume3D& v, const Mask3D& body, const Mask3D& bone,
                                               const ProjectionParams& p) {
    p.validate();
    require_same_shape<3>(v.shape, body.shape, "project");
    require_same_shape<3>(v.shape, bone.shape, "project");
    if (body.empty()) throw Error("project", "EmptyBody");
    const auto clipped = clip_hu(v, p);
    auto sum = masked_field(clipped, v.shape, body, p);
    const auto bone_part = masked_field(clipped, v.shape, bone, p);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += bone_part[i];
    min_max_scale(sum);
    for (double& x : sum) x *= p.out_max;
    return mean_along_axis(sum, v.shape, p.axis);
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

[[nodiscard]] inline Mask2D max_project(const Mask3D& m, View view) {
    Mask2D out(image_shape(m.shape, view));
    for (std::size_t r = 0; r < out.bits.size(); ++r) {
        const auto line = ray(m.shape, view, r);
        for (int k = 0; k < line.length; ++k)
            if (m.bits[line.base + static_cast<std::size_t>(k) * line.stride]) {
                out.bits[r] = 1;
                break;
            }
    }
    return out;
}

/// Max-projects every label, then closes and drops small 8-connected components.
[[nodiscard]] inline LabelImage project_labels(const LabelVolume& lv, View view, const LabelCleanup& cleanup = {}) {
    LabelImage out;
    out.shape = image_shape(lv.shape, view);
    out.taxonomy = lv.taxonomy;
    std::vector<std::string> ids;
    for (const auto& [id, m] : lv.entries) ids.push_back(id);
    std::vector<Mask2D> masks(ids.size());
    parallel_for(ids.size(), [&](std::size_t i) {
        masks[i] = apply_cleanup(max_project(lv.entries.at(ids[i]), view), cleanup);
    });
    for (std::size_t i = 0; i < ids.size(); ++i) out.entries.emplace(ids[i], std::move(masks[i]));
    return out;
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

/// Binary P5 with maxval 255; pixels rounded half-up. Throws
/// project.RangeViolation for values outside [0, 255].
inline std::string encode_pgm(const Image2D& img) {
    std::string out = "P5\n" + std::to_string(img.shape[1]) + " " + std::to_string(img.shape[0]) + "\n255\n";
    const std::size_t header = out.size();
    out.resize(header + img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double v = img.pixels[i];
        if (!(v >= 0.0 && v <= 255.0)) throw Error("project", "RangeViolation", "pixel value " + std::to_string(v));
        out[header + i] = static_cast<char>(static_cast<unsigned char>(std::floor(v + 0.5)));
    }
    return out;
}

inline void write_image(const Image2D& img, const fs::path& p) {
    const auto bytes = encode_pgm(img);
    paxray::detail::write_text(p, bytes, "project");
}

[[nodiscard]] inline Image2D read_pgm(const fs::path& p) {
    const auto bytes = paxray::detail::read_file(p, "project");
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        std::string t;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) t += bytes[pos++];
        return t;
    };
    if (token() != "P5") throw Error("project", "MalformedImage", "not a P5 file");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw Error("project", "MalformedImage", "bad header");
    }
    ++pos;  // single whitespace after maxval
    if (w < 1 || h < 1 || maxval != 255) throw Error("project", "MalformedImage", "unsupported geometry");
    if (bytes.size() - std::min(pos, bytes.size()) != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
        throw Error("project", "MalformedImage", "pixel count");
    Image2D img({h, w});
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<unsigned char>(bytes[pos + i]);
    return img;
}

}  // namespace paxray::project
