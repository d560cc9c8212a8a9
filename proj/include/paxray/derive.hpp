#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/error.hpp"
#include "paxray/grid.hpp"
#include "paxray/label_volume.hpp"
#include "paxray/morph.hpp"
#include "paxray/parallel.hpp"
#include "paxray/taxonomy.hpp"

namespace paxray::derive {

inline constexpr double kHuMin = -1024.0;
inline constexpr double kHuMax = 3071.0;

struct DeriveConfig {
    double body_hu_threshold = -500.0;
    double vessel_hu_threshold = -500.0;
    int vessel_lung_erosion_voxels = 2;
    int min_component_voxels = 27;
    int close_radius = 1;
    /// Lower bound applied to every per-slice bone threshold. Set to -1024 for
    /// plain per-slice Otsu.
    double bone_floor_hu = 200.0;

    void validate() const {
        for (double t : {body_hu_threshold, vessel_hu_threshold, bone_floor_hu})
            if (!(t >= kHuMin && t <= kHuMax))
                throw Error("derive", "InvalidConfig", "threshold outside [-1024, 3071]: " + std::to_string(t));
        if (vessel_lung_erosion_voxels < 0 || min_component_voxels < 0 || close_radius < 0)
            throw Error("derive", "InvalidConfig", "negative radius or size");
    }
};

inline void from_json(const nlohmann::json& j, DeriveConfig& c) {
    c.body_hu_threshold = j.value("body_hu_threshold", c.body_hu_threshold);
    c.vessel_hu_threshold = j.value("vessel_hu_threshold", c.vessel_hu_threshold);
    c.vessel_lung_erosion_voxels = j.value("vessel_lung_erosion_voxels", c.vessel_lung_erosion_voxels);
    c.min_component_voxels = j.value("min_component_voxels", c.min_component_voxels);
    c.close_radius = j.value("close_radius", c.close_radius);
    c.bone_floor_hu = j.value("bone_floor_hu", c.bone_floor_hu);
}

inline void to_json(nlohmann::json& j, const DeriveConfig& c) {
    j = {{"body_hu_threshold", c.body_hu_threshold},
         {"vessel_hu_threshold", c.vessel_hu_threshold},
         {"vessel_lung_erosion_voxels", c.vessel_lung_erosion_voxels},
         {"min_component_voxels", c.min_component_voxels},
         {"close_radius", c.close_radius},
         {"bone_floor_hu", c.bone_floor_hu}};
}

namespace detail {

inline void require_nonempty(const Mask3D& m, const char* code, const char* what) {
    if (m.empty()) throw Error("derive", code, what);
}

struct Centroid {
    double z = 0, y = 0, x = 0;
};

inline Centroid centroid(const Mask3D& m) {
    Centroid c;
    std::size_t n = 0;
    for (int z = 0; z < m.shape[0]; ++z)
        for (int y = 0; y < m.shape[1]; ++y)
            for (int x = 0; x < m.shape[2]; ++x)
                if (m.bits[offset(m.shape, z, y, x)]) {
                    c.z += z;
                    c.y += y;
                    c.x += x;
                    ++n;
                }
    if (n) {
        c.z /= static_cast<double>(n);
        c.y /= static_cast<double>(n);
        c.x /= static_cast<double>(n);
    }
    return c;
}

/// [min, max] z index of set voxels; nullopt when empty.
inline std::optional<std::pair<int, int>> z_extent(const Mask3D& m) {
    std::optional<std::pair<int, int>> out;
    const std::size_t slice = static_cast<std::size_t>(m.shape[1]) * static_cast<std::size_t>(m.shape[2]);
    for (int z = 0; z < m.shape[0]; ++z) {
        const auto b = m.bits.begin() + static_cast<std::ptrdiff_t>(z * slice);
        if (std::any_of(b, b + static_cast<std::ptrdiff_t>(slice), [](std::uint8_t v) { return v != 0; })) {
            if (!out) out = std::pair{z, z};
            out->second = z;
        }
    }
    return out;
}

inline Mask2D slice_of(const Mask3D& m, int z) {
    Mask2D s({m.shape[1], m.shape[2]});
    const std::size_t n = s.bits.size();
    std::copy_n(m.bits.begin() + static_cast<std::ptrdiff_t>(z * n), n, s.bits.begin());
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Body, bone, vessels
// ---------------------------------------------------------------------------

/// HU > threshold, closed, largest face-connected component.
[[nodiscard]] inline Mask3D body_mask(const Volume3D& v, const DeriveConfig& cfg) {
    Mask3D m(v.shape);
    for (std::size_t i = 0; i < v.voxels.size(); ++i) m.bits[i] = v.voxels[i] > cfg.body_hu_threshold ? 1 : 0;
    if (m.empty()) throw Error("derive", "EmptyBody", "no voxel above body threshold");
    return morph::largest_component(morph::binary_close(m, cfg.close_radius));
}

/// Per-axial-slice Otsu threshold over body voxels (unit HU bins across the
/// 12-bit range), raised to cfg.bone_floor_hu. Voxels in the upper class are
/// bone. Slices with a degenerate histogram contribute nothing.
[[nodiscard]] inline Mask3D bone_mask(const Volume3D& v, const Mask3D& body, const DeriveConfig& cfg = {}) {
    require_same_shape<3>(v.shape, body.shape, "derive");
    Mask3D out(v.shape);
    const std::size_t plane = static_cast<std::size_t>(v.shape[1]) * static_cast<std::size_t>(v.shape[2]);
    parallel_for(static_cast<std::size_t>(v.shape[0]), [&](std::size_t z) {
        std::vector<double> values;
        for (std::size_t k = z * plane; k < (z + 1) * plane; ++k)
            if (body.bits[k]) values.push_back(v.voxels[k]);
        if (values.empty()) return;
        const auto hist = morph::integer_histogram(values, static_cast<int>(kHuMin), static_cast<int>(kHuMax) + 1);
        double threshold = 0;
        try {
            threshold = morph::otsu_threshold(hist);
        } catch (const Error& e) {
            if (e.code() == "DegenerateHistogram") return;
            throw;
        }
        threshold = std::max(threshold, cfg.bone_floor_hu);
        for (std::size_t k = z * plane; k < (z + 1) * plane; ++k)
            out.bits[k] = (body.bits[k] && v.voxels[k] >= threshold) ? 1 : 0;
    });
    return out;
}

[[nodiscard]] inline Mask3D lung_vessels(const Volume3D& v, const Mask3D& lung, const DeriveConfig& cfg) {
    require_same_shape<3>(v.shape, lung.shape, "derive");
    detail::require_nonempty(lung, "MissingReferenceMask", "lung mask is empty");
    const Mask3D core = morph::erode(lung, cfg.vessel_lung_erosion_voxels);
    Mask3D m(v.shape);
    for (std::size_t i = 0; i < m.bits.size(); ++i)
        m.bits[i] = (core.bits[i] && v.voxels[i] > cfg.vessel_hu_threshold) ? 1 : 0;
    return morph::remove_small_components(m, static_cast<std::size_t>(cfg.min_component_voxels));
}

// ---------------------------------------------------------------------------
// Mediastinum
// ---------------------------------------------------------------------------

/// Body voxels strictly between the right lung's largest x and the left lung's
/// smallest x, evaluated per (z, y) row.
[[nodiscard]] inline Mask3D mediastinum_region(const Mask3D& left_lung, const Mask3D& right_lung, const Mask3D& body) {
    require_same_shape<3>(left_lung.shape, right_lung.shape, "derive");
    require_same_shape<3>(left_lung.shape, body.shape, "derive");
    detail::require_nonempty(left_lung, "MissingReferenceMask", "left lung is empty");
    detail::require_nonempty(right_lung, "MissingReferenceMask", "right lung is empty");
    const auto& s = body.shape;
    Mask3D out(s);
    for (int z = 0; z < s[0]; ++z)
        for (int y = 0; y < s[1]; ++y) {
            int right_max = -1;
            int left_min = s[2];
            for (int x = 0; x < s[2]; ++x) {
                const auto k = offset(s, z, y, x);
                if (right_lung.bits[k]) right_max = x;
                if (left_lung.bits[k] && left_min == s[2]) left_min = x;
            }
            if (right_max < 0 || left_min == s[2]) continue;
            for (int x = right_max + 1; x < left_min; ++x) {
                const auto k = offset(s, z, y, x);
                out.bits[k] = body.bits[k];
            }
        }
    return out;
}

struct SuperiorInferior {
    Mask3D superior;
    Mask3D inferior;
};

/// Cut plane at the inferior face of T4: superior = z >= min z of t4.
[[nodiscard]] inline SuperiorInferior split_mediastinum(const Mask3D& med, const Mask3D& t4) {
    require_same_shape<3>(med.shape, t4.shape, "derive");
    const auto ext = detail::z_extent(t4);
    if (!ext) throw Error("derive", "MissingReferenceMask", "t4 is empty");
    const int z_cut = ext->first;
    SuperiorInferior out{Mask3D(med.shape), Mask3D(med.shape)};
    for (std::size_t i = 0; i < med.bits.size(); ++i) {
        if (!med.bits[i]) continue;
        const int z = unravel<3>(med.shape, i)[0];
        (z >= z_cut ? out.superior : out.inferior).bits[i] = 1;
    }
    return out;
}

struct MediastinumCompartments {
    Mask3D anterior;
    Mask3D middle;
    Mask3D posterior;
};

/// Bands along y from the heart's per-slice [y_min, y_max]. Slices without
/// heart borrow the bounds of the nearest heart-bearing slice (ties: lower z).
[[nodiscard]] inline MediastinumCompartments split_inferior_mediastinum(const Mask3D& inf_med, const Mask3D& heart) {
    require_same_shape<3>(inf_med.shape, heart.shape, "derive");
    detail::require_nonempty(heart, "MissingReferenceMask", "heart is empty");
    const auto& s = inf_med.shape;
    std::vector<std::optional<std::pair<int, int>>> bounds(static_cast<std::size_t>(s[0]));
    for (int z = 0; z < s[0]; ++z)
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[2]; ++x)
                if (heart.bits[offset(s, z, y, x)]) {
                    auto& b = bounds[static_cast<std::size_t>(z)];
                    if (!b) b = std::pair{y, y};
                    b->first = std::min(b->first, y);
                    b->second = std::max(b->second, y);
                }
    std::vector<std::pair<int, int>> resolved(bounds.size());
    for (int z = 0; z < s[0]; ++z) {
        int best = -1;
        for (int d = 0; d < s[0] && best < 0; ++d) {
            if (z - d >= 0 && bounds[static_cast<std::size_t>(z - d)]) best = z - d;
            else if (z + d < s[0] && bounds[static_cast<std::size_t>(z + d)]) best = z + d;
        }
        resolved[static_cast<std::size_t>(z)] = *bounds[static_cast<std::size_t>(best)];
    }
    MediastinumCompartments out{Mask3D(s), Mask3D(s), Mask3D(s)};
    for (int z = 0; z < s[0]; ++z) {
        const auto [y_min, y_max] = resolved[static_cast<std::size_t>(z)];
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[2]; ++x) {
                const auto k = offset(s, z, y, x);
                if (!inf_med.bits[k]) continue;
                auto& target = y < y_min ? out.anterior : (y > y_max ? out.posterior : out.middle);
                target.bits[k] = 1;
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sub-diaphragm
// ---------------------------------------------------------------------------

struct LeftRight {
    Mask3D left;
    Mask3D right;
};

/// Central split at the body centroid's x (rounded half-up); patient left is +x.
[[nodiscard]] inline LeftRight subdiaphragm_halves(const Mask3D& subdia, const Mask3D& body) {
    require_same_shape<3>(subdia.shape, body.shape, "derive");
    if (body.empty()) throw Error("derive", "EmptyBody", "body mask is empty");
    const int x_cut = static_cast<int>(std::floor(detail::centroid(body).x + 0.5));
    LeftRight out{Mask3D(subdia.shape), Mask3D(subdia.shape)};
    for (std::size_t i = 0; i < subdia.bits.size(); ++i) {
        if (!subdia.bits[i]) continue;
        (unravel<3>(subdia.shape, i)[2] >= x_cut ? out.left : out.right).bits[i] = 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ribs
// ---------------------------------------------------------------------------

struct RibKey {
    Side side;
    int index;  // 1 = most superior
    auto operator<=>(const RibKey&) const = default;
};

struct RibLabels {
    std::map<RibKey, Mask3D> ribs;
    std::vector<Warning> warnings;
};

inline constexpr int kRibsPerSide = 12;

/// 26-connected rib components, sided by centroid x against the spine centroid
/// (ties go right) and numbered top-down by centroid z.
[[nodiscard]] inline RibLabels label_individual_ribs(const Mask3D& ribs, const Mask3D& spine) {
    require_same_shape<3>(ribs.shape, spine.shape, "derive");
    detail::require_nonempty(spine, "MissingReferenceMask", "spine is empty");
    detail::require_nonempty(ribs, "MissingReferenceMask", "rib mask is empty");
    const double spine_x = detail::centroid(spine).x;
    const auto cc = morph::connected_components(ribs, 26);

    struct Item {
        std::int32_t id;
        detail::Centroid c;
    };
    std::vector<Item> items(static_cast<std::size_t>(cc.count));
    std::vector<std::size_t> n(items.size(), 0);
    for (std::size_t k = 0; k < items.size(); ++k) items[k].id = static_cast<std::int32_t>(k) + 1;
    for (std::size_t i = 0; i < cc.ids.size(); ++i) {
        if (!cc.ids[i]) continue;
        const auto c = unravel<3>(ribs.shape, i);
        auto& it = items[static_cast<std::size_t>(cc.ids[i] - 1)];
        it.c.z += c[0];
        it.c.y += c[1];
        it.c.x += c[2];
        ++n[static_cast<std::size_t>(cc.ids[i] - 1)];
    }
    for (std::size_t k = 0; k < items.size(); ++k) {
        const auto d = static_cast<double>(n[k]);
        items[k].c = {items[k].c.z / d, items[k].c.y / d, items[k].c.x / d};
    }

    RibLabels out;
    for (Side side : {Side::left, Side::right}) {
        std::vector<Item> mine;
        for (const auto& it : items)
            if ((it.c.x > spine_x) == (side == Side::left)) mine.push_back(it);
        std::stable_sort(mine.begin(), mine.end(), [](const Item& a, const Item& b) { return a.c.z > b.c.z; });
        if (static_cast<int>(mine.size()) != kRibsPerSide)
            out.warnings.push_back({"derive", "CountMismatch",
                                    std::string(side == Side::left ? "left" : "right") + ": " +
                                        std::to_string(mine.size())});
        for (std::size_t k = 0; k < mine.size(); ++k)
            out.ribs.emplace(RibKey{side, static_cast<int>(k) + 1}, cc.component(mine[k].id));
    }
    return out;
}

struct AnteriorPosterior {
    Mask3D anterior;
    Mask3D posterior;
};

/// Splits one rib at the y of its lateral extremum (voxel farthest from the
/// spine centroid in x; ties: most posterior, then lowest z). Posterior part is
/// y >= that y.
[[nodiscard]] inline AnteriorPosterior split_rib_ant_post(const Mask3D& rib, const Mask3D& spine) {
    require_same_shape<3>(rib.shape, spine.shape, "derive");
    detail::require_nonempty(spine, "MissingReferenceMask", "spine is empty");
    if (morph::connected_components(rib, 26).count != 1) throw Error("derive", "NotConnected");
    const double spine_x = detail::centroid(spine).x;
    double best_dx = -1;
    int best_y = 0;
    int best_z = 0;
    for (std::size_t i = 0; i < rib.bits.size(); ++i) {
        if (!rib.bits[i]) continue;
        const auto [z, y, x] = unravel<3>(rib.shape, i);
        const double dx = std::abs(x - spine_x);
        if (dx > best_dx || (dx == best_dx && (y > best_y || (y == best_y && z < best_z)))) {
            best_dx = dx;
            best_y = y;
            best_z = z;
        }
    }
    AnteriorPosterior out{Mask3D(rib.shape), Mask3D(rib.shape)};
    for (std::size_t i = 0; i < rib.bits.size(); ++i) {
        if (!rib.bits[i]) continue;
        (unravel<3>(rib.shape, i)[1] >= best_y ? out.posterior : out.anterior).bits[i] = 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aorta
// ---------------------------------------------------------------------------

struct AortaSegments {
    Mask3D ascending;
    Mask3D arch;
    Mask3D descending;
};

/// Per axial slice: with several 8-connected cross-sections the most anterior
/// is ascending, the most posterior descending and the rest arch; a single
/// cross-section is arch above the heart's superior extent, else descending.
[[nodiscard]] inline AortaSegments split_aorta(const Mask3D& aorta, const Mask3D& heart) {
    require_same_shape<3>(aorta.shape, heart.shape, "derive");
    const auto heart_z = detail::z_extent(heart);
    if (!heart_z) throw Error("derive", "MissingReferenceMask", "heart is empty");
    const auto& s = aorta.shape;
    AortaSegments out{Mask3D(s), Mask3D(s), Mask3D(s)};
    const std::size_t plane = static_cast<std::size_t>(s[1]) * static_cast<std::size_t>(s[2]);
    parallel_for(static_cast<std::size_t>(s[0]), [&](std::size_t zi) {
        const int z = static_cast<int>(zi);
        const auto sl = detail::slice_of(aorta, z);
        const auto cc = morph::connected_components(sl, 8);
        if (cc.count == 0) return;
        std::vector<double> ysum(static_cast<std::size_t>(cc.count), 0.0);
        for (std::size_t i = 0; i < cc.ids.size(); ++i)
            if (cc.ids[i]) ysum[static_cast<std::size_t>(cc.ids[i] - 1)] += static_cast<double>(i / static_cast<std::size_t>(s[2]));
        std::vector<std::int32_t> order(static_cast<std::size_t>(cc.count));
        std::iota(order.begin(), order.end(), 1);
        auto mean_y = [&](std::int32_t id) {
            const auto k = static_cast<std::size_t>(id - 1);
            return ysum[k] / static_cast<double>(cc.sizes[k]);
        };
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return mean_y(a) < mean_y(b); });
        std::vector<Mask3D*> target(static_cast<std::size_t>(cc.count) + 1, &out.arch);
        if (cc.count >= 2) {
            target[static_cast<std::size_t>(order.front())] = &out.ascending;
            target[static_cast<std::size_t>(order.back())] = &out.descending;
        } else {
            target[1] = z > heart_z->second ? &out.arch : &out.descending;
        }
        for (std::size_t i = 0; i < plane; ++i)
            if (cc.ids[i]) target[static_cast<std::size_t>(cc.ids[i])]->bits[zi * plane + i] = 1;
    });
    return out;
}

// ---------------------------------------------------------------------------
// Full derivation
// ---------------------------------------------------------------------------

struct Derivation {
    LabelVolume labels;  // hierarchy-composed
    Mask3D body;
    Mask3D bone;
    std::vector<Warning> warnings;
};

/// Runs every rule over a CT volume and its model-derived masks (lobes,
/// vertebrae, heart, aorta, airways, esophagus, rib union, sub-diaphragm
/// region), then union-completes the hierarchy. Rules whose reference masks
/// are missing are skipped with a warning.
[[nodiscard]] inline Derivation derive_labels(const Volume3D& v, const LabelVolume& inputs, const LabelTaxonomy& tax,
                                              const DeriveConfig& cfg) {
    cfg.validate();
    validate_volume(v);
    if (!inputs.entries.empty()) require_same_shape<3>(v.shape, inputs.shape, "derive");
    check_label_ids(inputs, tax);

    Derivation d;
    d.labels = inputs;
    d.labels.shape = v.shape;
    d.labels.taxonomy = tax.version();
    auto& lv = d.labels;
    auto warn = [&](const std::string& code, const std::string& detail) {
        d.warnings.push_back({"derive", code, detail});
    };
    auto input = [&](const std::string& id) -> const Mask3D* {
        const auto it = inputs.entries.find(id);
        return it == inputs.entries.end() || it->second.empty() ? nullptr : &it->second;
    };
    auto union_of_descendants = [&](const std::string& root) {
        Mask3D m(v.shape);
        for (const auto& [id, mask] : inputs.entries)
            for (auto p = tax.node(id).parent_id; p; p = tax.node(*p).parent_id)
                if (*p == root) {
                    m |= mask;
                    break;
                }
        return m;
    };

    d.body = body_mask(v, cfg);
    d.bone = bone_mask(v, d.body, cfg);
    lv.set("bones", d.bone | (input("bones") ? *input("bones") : Mask3D(v.shape)));

    // Lungs and vessels
    const Mask3D right_lung = union_of_descendants("right_lung");
    const Mask3D left_lung = union_of_descendants("left_lung");
    if (!right_lung.empty()) lv.set("right_lung_vessel", lung_vessels(v, right_lung, cfg));
    else warn("MissingReferenceMask", "right lung lobes");
    if (!left_lung.empty()) lv.set("left_lung_vessel", lung_vessels(v, left_lung, cfg));
    else warn("MissingReferenceMask", "left lung lobes");

    // Mediastinum
    if (!right_lung.empty() && !left_lung.empty()) {
        Mask3D med = mediastinum_region(left_lung, right_lung, d.body);
        if (const auto* own = input("mediastinum")) med |= *own;
        lv.set("mediastinum", med);
        if (const auto* t4 = input("t4")) {
            auto [sup, inf] = split_mediastinum(med, *t4);
            lv.set("superior_mediastinum", std::move(sup));
            if (const auto* heart = input("heart")) {
                auto parts = split_inferior_mediastinum(inf, *heart);
                lv.set("anterior_mediastinum", std::move(parts.anterior));
                lv.set("middle_mediastinum", std::move(parts.middle));
                lv.set("posterior_mediastinum", std::move(parts.posterior));
            } else {
                warn("MissingReferenceMask", "heart (mediastinal compartments)");
            }
            lv.set("inferior_mediastinum", std::move(inf));
        } else {
            warn("MissingReferenceMask", "t4 (superior/inferior mediastinum)");
        }
    }

    if (const auto* aorta = input("aorta")) {
        if (const auto* heart = input("heart")) {
            auto seg = split_aorta(*aorta, *heart);
            lv.set("ascending_aorta", std::move(seg.ascending));
            lv.set("aortic_arch", std::move(seg.arch));
            lv.set("descending_aorta", std::move(seg.descending));
        } else {
            warn("MissingReferenceMask", "heart (aorta split)");
        }
    }

    // Ribs
    const Mask3D spine = union_of_descendants("spine");
    if (const auto* ribs = input("ribs"); ribs && !spine.empty()) {
        auto labelled = label_individual_ribs(*ribs, spine);
        d.warnings.insert(d.warnings.end(), labelled.warnings.begin(), labelled.warnings.end());
        std::map<int, AnteriorPosterior> unsided;
        for (auto& [key, rib] : labelled.ribs) {
            if (key.index > kRibsPerSide) {
                warn("ExtraRib", std::string(key.side == Side::left ? "left " : "right ") +
                                     std::to_string(key.index) + " dropped");
                continue;
            }
            auto parts = split_rib_ant_post(rib, spine);
            auto [it, fresh] = unsided.try_emplace(key.index, AnteriorPosterior{Mask3D(v.shape), Mask3D(v.shape)});
            it->second.anterior |= parts.anterior;
            it->second.posterior |= parts.posterior;
            lv.set(rib_label_id(key.side, key.index, RibPart::anterior), std::move(parts.anterior));
            lv.set(rib_label_id(key.side, key.index, RibPart::posterior), std::move(parts.posterior));
            lv.set(rib_label_id(key.side, key.index, RibPart::whole), std::move(rib));
        }
        for (auto& [index, parts] : unsided) {
            lv.set(rib_label_id(std::nullopt, index, RibPart::anterior), std::move(parts.anterior));
            lv.set(rib_label_id(std::nullopt, index, RibPart::posterior), std::move(parts.posterior));
        }
    } else if (input("ribs")) {
        warn("MissingReferenceMask", "spine (rib labelling)");
    }

    if (const auto* subdia = input("diaphragm")) {
        auto halves = subdiaphragm_halves(*subdia, d.body);
        lv.set("hemidiaphragm_left", std::move(halves.left));
        lv.set("hemidiaphragm_right", std::move(halves.right));
    }

    d.labels = compose_hierarchy(lv, tax);
    return d;
}

}  // namespace paxray::derive
