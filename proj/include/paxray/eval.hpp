#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/container.hpp"
#include "paxray/error.hpp"
#include "paxray/ground.hpp"
#include "paxray/language.hpp"

namespace paxray::eval {

using ground::BBox;

/// Intersection over union of half-open boxes; 0 for disjoint boxes.
[[nodiscard]] inline double iou(const BBox& a, const BBox& b) noexcept {
    const BBox in{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
    const long long inter = in.valid() ? in.area() : 0;
    const long long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Threshold test; inclusive unless `strict`.
[[nodiscard]] inline bool passes(double overlap, double tau, bool strict) noexcept {
    return strict ? overlap > tau : overlap >= tau;
}

inline void check_tau(double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw Error("eval", "InvalidThreshold", std::to_string(tau));
}

// ---------------------------------------------------------------------------
// Annotations and proposals
// ---------------------------------------------------------------------------

struct Annotation {
    std::string report_id;
    View view = View::frontal;
    std::string phrase;
    BBox box;
    int width = 0;
    int height = 0;

    /// Image key shared with proposal files: "<report_id>/<view>".
    [[nodiscard]] std::string image_id() const { return report_id + "/" + view_name(view); }
    [[nodiscard]] BBox image_box() const noexcept { return {0, 0, width, height}; }

    bool operator==(const Annotation&) const = default;
};

struct ScoredBox {
    BBox box;
    double score = 0;

    bool operator==(const ScoredBox&) const = default;
};

/// Proposal boxes per image id.
using ProposalSet = std::map<std::string, std::vector<ScoredBox>>;

namespace detail {

inline nlohmann::json parse_json(const fs::path& p) {
    const auto bytes = paxray::detail::read_file(p, "eval");
    try {
        return nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw Error("eval", "MalformedJson", e.what());
    }
}

inline BBox parse_box(const nlohmann::json& j) {
    const auto b = j.get<BBox>();
    if (!b.valid() || b.x0 < 0 || b.y0 < 0)
        throw Error("eval", "OutOfBounds", nlohmann::json(b).dump());
    return b;
}

}  // namespace detail

/// `[{"report_id","view","phrase","box":[x0,y0,x1,y1],"image_size":[w,h]}]`
[[nodiscard]] inline std::vector<Annotation> annotations_from_json(const nlohmann::json& j) {
    std::vector<Annotation> out;
    try {
        if (!j.is_array()) throw Error("eval", "MalformedJson", "expected an array of annotations");
        for (const auto& e : j) {
            Annotation a;
            a.report_id = e.at("report_id").get<std::string>();
            const auto view = e.at("view").get<std::string>();
            if (view != "frontal" && view != "lateral") throw Error("eval", "MalformedJson", "view '" + view + "'");
            a.view = parse_view(view);
            a.phrase = e.at("phrase").get<std::string>();
            const auto& size = e.at("image_size");
            if (!size.is_array() || size.size() != 2) throw Error("eval", "MalformedJson", "image_size must be [w,h]");
            a.width = size[0].get<int>();
            a.height = size[1].get<int>();
            if (a.width < 1 || a.height < 1) throw Error("eval", "OutOfBounds", "image_size " + size.dump());
            a.box = detail::parse_box(e.at("box"));
            if (a.box.x1 > a.width || a.box.y1 > a.height)
                throw Error("eval", "OutOfBounds", e.at("box").dump() + " exceeds " + size.dump());
            out.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("eval", "MalformedJson", e.what());
    }
    return out;
}

[[nodiscard]] inline nlohmann::json annotations_to_json(const std::vector<Annotation>& as) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& a : as)
        j.push_back({{"report_id", a.report_id},
                     {"view", view_name(a.view)},
                     {"phrase", a.phrase},
                     {"box", a.box},
                     {"image_size", {a.width, a.height}}});
    return j;
}

/// `{"<image_id>":[{"box":[...],"score":s}, ...]}`
[[nodiscard]] inline ProposalSet proposals_from_json(const nlohmann::json& j) {
    ProposalSet out;
    try {
        if (!j.is_object()) throw Error("eval", "MalformedJson", "expected an object keyed by image id");
        for (const auto& [image, boxes] : j.items()) {
            auto& list = out[image];
            if (!boxes.is_array()) throw Error("eval", "MalformedJson", image + ": expected an array");
            for (const auto& e : boxes) {
                ScoredBox s;
                s.box = detail::parse_box(e.at("box"));
                s.score = e.at("score").get<double>();
                if (!std::isfinite(s.score)) throw Error("eval", "MalformedJson", image + ": non-finite score");
                list.push_back(s);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("eval", "MalformedJson", e.what());
    }
    return out;
}

[[nodiscard]] inline nlohmann::json proposals_to_json(const ProposalSet& ps) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [image, boxes] : ps) {
        auto& list = j[image] = nlohmann::json::array();
        for (const auto& b : boxes) list.push_back({{"box", b.box}, {"score", b.score}});
    }
    return j;
}

[[nodiscard]] inline std::vector<Annotation> load_annotations(const fs::path& p) {
    return annotations_from_json(detail::parse_json(p));
}

[[nodiscard]] inline ProposalSet load_proposals(const fs::path& p) { return proposals_from_json(detail::parse_json(p)); }

inline void save_annotations(const std::vector<Annotation>& as, const fs::path& p) {
    paxray::detail::write_text(p, annotations_to_json(as).dump(2) + "\n", "eval");
}

inline void save_proposals(const ProposalSet& ps, const fs::path& p) {
    paxray::detail::write_text(p, proposals_to_json(ps).dump(2) + "\n", "eval");
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Score {
    std::size_t hits = 0;
    std::size_t total = 0;

    [[nodiscard]] double percent() const noexcept {
        return total ? 100.0 * static_cast<double>(hits) / static_cast<double>(total) : 0.0;
    }
};

/// Percentage rounded to one decimal.
[[nodiscard]] inline double one_decimal(double pct) noexcept { return std::round(pct * 10.0) / 10.0; }

/// A ground-truth box is hit when some proposal of its image overlaps it
/// by at least `tau`.
[[nodiscard]] inline Score hit_rate(const std::vector<Annotation>& gts, const ProposalSet& proposals, double tau,
                                    bool strict = false) {
    if (gts.empty()) throw Error("eval", "NoAnnotations");
    check_tau(tau);
    Score s;
    s.total = gts.size();
    for (const auto& gt : gts) {
        const auto it = proposals.find(gt.image_id());
        if (it == proposals.end()) continue;
        const bool hit = std::any_of(it->second.begin(), it->second.end(),
                                     [&](const ScoredBox& b) { return passes(iou(gt.box, b.box), tau, strict); });
        s.hits += hit ? 1 : 0;
    }
    return s;
}

/// Whitespace/punctuation/case-insensitive phrase key.
[[nodiscard]] inline std::string phrase_key(std::string_view text) { return language::join(language::tokenize(text)); }

struct TopkScore {
    Score score;
    std::vector<std::string> unmatched;  // "<image id>: <phrase>"
};

/// An annotation succeeds when one of the first k regions ranked for its
/// phrase overlaps the ground truth by at least `tau`. Annotations whose
/// phrase is absent from the grounding output count as failures and are listed.
[[nodiscard]] inline TopkScore topk_retrieval(const std::vector<Annotation>& gts,
                                              const std::vector<ground::GroundingResult>& groundings, std::size_t k,
                                              double tau, bool strict = false) {
    if (gts.empty()) throw Error("eval", "NoAnnotations");
    if (k < 1) throw Error("eval", "InvalidArgument", "k must be at least 1");
    check_tau(tau);

    std::map<std::pair<std::string, std::string>, const ground::PhraseGrounding*> index;
    for (const auto& g : groundings)
        for (const auto& p : g.phrases)
            index.emplace(std::pair{g.report_id + "/" + view_name(g.view), phrase_key(p.text)}, &p);

    TopkScore out;
    out.score.total = gts.size();
    for (const auto& gt : gts) {
        const auto it = index.find({gt.image_id(), phrase_key(gt.phrase)});
        if (it == index.end()) {
            out.unmatched.push_back(gt.image_id() + ": " + gt.phrase);
            continue;
        }
        const auto& ranked = it->second->ranked;
        const std::size_t n = std::min(k, ranked.size());
        for (std::size_t i = 0; i < n; ++i) {
            const BBox box = ranked[i].label == ground::kWholeImage ? gt.image_box() : ranked[i].bbox;
            if (passes(iou(gt.box, box), tau, strict)) {
                ++out.score.hits;
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Annotation counts per view, and the subset for one view ("all" keeps everything).
[[nodiscard]] inline std::map<std::string, std::size_t> view_counts(const std::vector<Annotation>& gts) {
    std::map<std::string, std::size_t> c{{"frontal", 0}, {"lateral", 0}};
    for (const auto& a : gts) ++c[view_name(a.view)];
    return c;
}

[[nodiscard]] inline std::vector<Annotation> select_view(const std::vector<Annotation>& gts, const std::string& view) {
    if (view == "all") return gts;
    std::vector<Annotation> out;
    for (const auto& a : gts)
        if (view_name(a.view) == view) out.push_back(a);
    return out;
}

inline const std::vector<std::string>& report_views() {
    static const std::vector<std::string> v{"all", "frontal", "lateral"};
    return v;
}

[[nodiscard]] inline nlohmann::json score_json(const Score& s) {
    return {{"percent", one_decimal(s.percent())}, {"hits", s.hits}, {"total", s.total}};
}

/// Hit rates per view and threshold, with the proposal count N per image.
[[nodiscard]] inline nlohmann::json hitrate_report(const std::vector<Annotation>& gts, const ProposalSet& proposals,
                                                   const std::vector<double>& taus, bool strict = false) {
    if (gts.empty()) throw Error("eval", "NoAnnotations");
    std::size_t n_max = 0, n_sum = 0;
    for (const auto& [id, boxes] : proposals) {
        n_max = std::max(n_max, boxes.size());
        n_sum += boxes.size();
    }
    nlohmann::json results = nlohmann::json::array();
    for (const auto& view : report_views()) {
        const auto sel = select_view(gts, view);
        if (sel.empty()) continue;
        for (double tau : taus) {
            auto r = score_json(hit_rate(sel, proposals, tau, strict));
            r["view"] = view;
            r["tau"] = tau;
            results.push_back(std::move(r));
        }
    }
    return {{"metric", "hit_rate"},
            {"inclusive_threshold", !strict},
            {"counts", view_counts(gts)},
            {"proposals", {{"images", proposals.size()},
                           {"max_per_image", n_max},
                           {"mean_per_image", proposals.empty() ? 0.0 : one_decimal(static_cast<double>(n_sum) /
                                                                                    static_cast<double>(proposals.size()))}}},
            {"results", std::move(results)}};
}

/// Top-k accuracy per view, k and threshold. Unmatched phrases are listed once.
[[nodiscard]] inline nlohmann::json topk_report(const std::vector<Annotation>& gts,
                                                const std::vector<ground::GroundingResult>& groundings,
                                                const std::vector<std::size_t>& ks, const std::vector<double>& taus,
                                                bool strict = false) {
    if (gts.empty()) throw Error("eval", "NoAnnotations");
    nlohmann::json results = nlohmann::json::array();
    std::vector<std::string> unmatched;
    for (const auto& view : report_views()) {
        const auto sel = select_view(gts, view);
        if (sel.empty()) continue;
        for (std::size_t k : ks)
            for (double tau : taus) {
                const auto t = topk_retrieval(sel, groundings, k, tau, strict);
                if (view == "all" && unmatched.empty()) unmatched = t.unmatched;
                auto r = score_json(t.score);
                r["view"] = view;
                r["k"] = k;
                r["tau"] = tau;
                results.push_back(std::move(r));
            }
    }
    return {{"metric", "top_k"},
            {"inclusive_threshold", !strict},
            {"counts", view_counts(gts)},
            {"unmatched", unmatched},
            {"results", std::move(results)}};
}

}  // namespace paxray::eval
