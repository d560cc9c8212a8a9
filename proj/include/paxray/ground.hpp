#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/container.hpp"
#include "paxray/error.hpp"
#include "paxray/grid.hpp"
#include "paxray/label_volume.hpp"
#include "paxray/language.hpp"
#include "paxray/project.hpp"
#include "paxray/taxonomy.hpp"

namespace paxray::ground {

/// Reserved pseudo-label for the whole-image fallback.
inline constexpr const char* kWholeImage = "WHOLE_IMAGE";

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

/// Half-open pixel box [x0,x1) x [y0,y1); x is the column, y the row.
struct BBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    [[nodiscard]] long long area() const noexcept {
        return static_cast<long long>(std::max(0, x1 - x0)) * std::max(0, y1 - y0);
    }
    [[nodiscard]] bool valid() const noexcept { return x0 < x1 && y0 < y1; }

    bool operator==(const BBox&) const = default;
};

inline void to_json(nlohmann::json& j, const BBox& b) { j = nlohmann::json::array({b.x0, b.y0, b.x1, b.y1}); }

inline void from_json(const nlohmann::json& j, BBox& b) {
    if (!j.is_array() || j.size() != 4) throw nlohmann::json::type_error::create(302, "box must be [x0,y0,x1,y1]", &j);
    b = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

/// Box covering an image of shape [h, w].
[[nodiscard]] inline BBox full_box(const Extent<2>& shape) noexcept { return {0, 0, shape[1], shape[0]}; }

[[nodiscard]] inline BBox mask_to_bbox(const Mask2D& m) {
    BBox b{m.shape[1], m.shape[0], -1, -1};
    for (int r = 0; r < m.shape[0]; ++r)
        for (int c = 0; c < m.shape[1]; ++c) {
            if (!m.bits[offset(m.shape, r, c)]) continue;
            b.x0 = std::min(b.x0, c);
            b.y0 = std::min(b.y0, r);
            b.x1 = std::max(b.x1, c + 1);
            b.y1 = std::max(b.y1, r + 1);
        }
    if (b.x1 < 0) throw Error("ground", "EmptyMask");
    return b;
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

struct RegionSet {
    View view = View::frontal;
    Extent<2> image_shape{};
    std::map<std::string, Mask2D> regions;
};

[[nodiscard]] inline RegionSet region_set(const LabelImage& li, View view) {
    RegionSet rs;
    rs.view = view;
    rs.image_shape = li.shape;
    rs.regions = li.entries;
    return rs;
}

/// Per-pixel foreground probability in [0, 1].
struct ProbabilityMap {
    Extent<2> shape{};
    std::vector<double> values;
};

[[nodiscard]] inline ProbabilityMap as_probability(const Mask2D& m) {
    ProbabilityMap p{m.shape, std::vector<double>(m.bits.begin(), m.bits.end())};
    return p;
}

/// Thresholds each map (value >= threshold) and clips every label to its
/// nearest present ancestor, top-down. Cleanup runs after clipping and the
/// clip is repeated, so closing cannot leak a child outside its parent.
[[nodiscard]] inline RegionSet refine_region_masks(const std::map<std::string, ProbabilityMap>& raw,
                                                   const LabelTaxonomy& tax, View view, double threshold = 0.5,
                                                   const project::LabelCleanup& cleanup = {}) {
    RegionSet rs;
    rs.view = view;
    bool first = true;
    for (const auto& [id, pm] : raw) {
        if (!tax.contains(id)) throw Error("ground", "UnknownLabelId", id);
        if (first) rs.image_shape = pm.shape;
        first = false;
        require_same_shape<2>(rs.image_shape, pm.shape, "ground");
        if (pm.values.size() != element_count<2>(pm.shape))
            throw Error("ground", "ShapeMismatch", "probability map size does not match its shape");
        Mask2D m(pm.shape);
        for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = pm.values[i] >= threshold ? 1 : 0;
        rs.regions.emplace(id, std::move(m));
    }

    const auto order = tax.topological_order();
    auto clip_to_parents = [&] {
        for (const auto& id : order) {
            auto it = rs.regions.find(id);
            if (it == rs.regions.end()) continue;
            for (auto up = tax.node(id).parent_id; up; up = tax.node(*up).parent_id) {
                if (const auto p = rs.regions.find(*up); p != rs.regions.end()) {
                    it->second = it->second & p->second;
                    break;
                }
            }
        }
    };
    clip_to_parents();
    if (cleanup.close_radius > 0 || cleanup.min_component_pixels > 0) {
        for (auto& [id, m] : rs.regions) m = project::apply_cleanup(m, cleanup);
        clip_to_parents();
    }
    return rs;
}

// ---------------------------------------------------------------------------
// Similarity and retrieval
// ---------------------------------------------------------------------------

/// Cosine similarities, one row per phrase and one column per label.
struct SimilarityMatrix {
    std::size_t rows = 0;
    std::vector<std::string> labels;
    std::vector<double> values;

    [[nodiscard]] double at(std::size_t r, std::size_t c) const noexcept { return values[r * labels.size() + c]; }
};

/// Zero-norm pairs score 0; results are clamped to [-1, 1].
[[nodiscard]] inline double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error("ground", "DimensionMismatch", std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double dot = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

[[nodiscard]] inline SimilarityMatrix similarity_matrix(const std::vector<std::vector<double>>& phrases,
                                                        const std::map<std::string, std::vector<double>>& labels) {
    SimilarityMatrix s;
    s.rows = phrases.size();
    for (const auto& [id, v] : labels) s.labels.push_back(id);
    s.values.resize(s.rows * s.labels.size());
    std::size_t c = 0;
    for (const auto& [id, t] : labels) {
        for (std::size_t r = 0; r < s.rows; ++r) s.values[r * s.labels.size() + c] = cosine(phrases[r], t);
        ++c;
    }
    return s;
}

struct RankedRegion {
    std::string label;
    double score = 0;
    BBox bbox;

    bool operator==(const RankedRegion&) const = default;
};

struct PhraseGrounding {
    std::string text;
    std::vector<RankedRegion> ranked;

    bool operator==(const PhraseGrounding&) const = default;
};

/// Top-k labels of one similarity row. A phrase vector without anatomy signal
/// maps to the whole image. Labels missing from the region set or with empty
/// masks are not candidates. Ties go to the smaller label id.
[[nodiscard]] inline std::vector<RankedRegion> retrieve(const SimilarityMatrix& s, std::size_t phrase_idx,
                                                        std::size_t k, const RegionSet& regions,
                                                        std::span<const double> phrase_vec) {
    if (k < 1) throw Error("ground", "InvalidArgument", "k must be at least 1");
    if (phrase_idx >= s.rows) throw Error("ground", "InvalidArgument", "phrase index out of range");
    if (language::is_zero(phrase_vec)) return {{kWholeImage, 0.0, full_box(regions.image_shape)}};

    std::vector<std::size_t> cand;
    for (std::size_t c = 0; c < s.labels.size(); ++c) {
        const auto it = regions.regions.find(s.labels[c]);
        if (it != regions.regions.end() && !it->second.empty()) cand.push_back(c);
    }
    if (cand.empty()) throw Error("ground", "NoRegions");

    const auto better = [&](std::size_t a, std::size_t b) {
        const double sa = s.at(phrase_idx, a), sb = s.at(phrase_idx, b);
        if (sa != sb) return sa > sb;
        return s.labels[a] < s.labels[b];
    };
    const std::size_t take = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), better);

    std::vector<RankedRegion> out;
    for (std::size_t i = 0; i < take; ++i) {
        const auto& id = s.labels[cand[i]];
        out.push_back({id, s.at(phrase_idx, cand[i]), mask_to_bbox(regions.regions.at(id))});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Grounding output
// ---------------------------------------------------------------------------

struct GroundingResult {
    std::string report_id;
    View view = View::frontal;
    std::vector<PhraseGrounding> phrases;

    bool operator==(const GroundingResult&) const = default;
};

[[nodiscard]] inline nlohmann::json grounding_to_json(const GroundingResult& g) {
    nlohmann::json phrases = nlohmann::json::array();
    for (const auto& p : g.phrases) {
        nlohmann::json ranked = nlohmann::json::array();
        for (const auto& r : p.ranked) ranked.push_back({{"label", r.label}, {"score", r.score}, {"bbox", r.bbox}});
        phrases.push_back({{"text", p.text}, {"ranked", std::move(ranked)}});
    }
    return {{"report_id", g.report_id}, {"view", view_name(g.view)}, {"phrases", std::move(phrases)}};
}

[[nodiscard]] inline GroundingResult grounding_from_json(const nlohmann::json& j) {
    GroundingResult g;
    try {
        g.report_id = j.at("report_id").get<std::string>();
        g.view = parse_view(j.at("view").get<std::string>());
        for (const auto& jp : j.at("phrases")) {
            PhraseGrounding p;
            p.text = jp.at("text").get<std::string>();
            for (const auto& jr : jp.at("ranked"))
                p.ranked.push_back({jr.at("label").get<std::string>(), jr.at("score").get<double>(),
                                    jr.at("bbox").get<BBox>()});
            g.phrases.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("ground", "MalformedJson", e.what());
    } catch (const Error& e) {
        throw Error("ground", "MalformedJson", e.what());
    }
    return g;
}

/// A grounding file holds a list of results, one per (report, view).
inline void save_groundings(const std::vector<GroundingResult>& gs, const fs::path& p) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& g : gs) j.push_back(grounding_to_json(g));
    paxray::detail::write_text(p, j.dump(2) + "\n", "ground");
}

[[nodiscard]] inline std::vector<GroundingResult> load_groundings(const fs::path& p) {
    const auto bytes = paxray::detail::read_file(p, "ground");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw Error("ground", "MalformedJson", e.what());
    }
    std::vector<GroundingResult> out;
    if (j.is_object()) {
        out.push_back(grounding_from_json(j));
    } else if (j.is_array()) {
        for (const auto& e : j) out.push_back(grounding_from_json(e));
    } else {
        throw Error("ground", "MalformedJson", "expected an object or array");
    }
    return out;
}

}  // namespace paxray::ground
