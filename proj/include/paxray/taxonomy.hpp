#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/container.hpp"
#include "paxray/error.hpp"

namespace paxray {

enum class ViewApplicability { frontal, lateral, both };

[[nodiscard]] inline const char* view_applicability_name(ViewApplicability v) noexcept {
    switch (v) {
        case ViewApplicability::frontal: return "frontal";
        case ViewApplicability::lateral: return "lateral";
        case ViewApplicability::both:    return "both";
    }
    return "both";
}

struct LabelNode {
    std::string id;
    std::string display_name;  // lowercase words; the text that gets embedded
    std::optional<std::string> parent_id;
    ViewApplicability views = ViewApplicability::both;

    bool operator==(const LabelNode&) const = default;
};

/// Validated label forest. Nodes keep their file order; `topological_order()`
/// lists parents before children.
class LabelTaxonomy {
public:
    LabelTaxonomy() = default;

    /// Throws data.DuplicateId, data.DanglingParent or data.CycleDetected.
    static LabelTaxonomy build(std::string version, std::vector<LabelNode> nodes) {
        LabelTaxonomy t;
        t.version_ = std::move(version);
        t.nodes_ = std::move(nodes);
        for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
            const auto& n = t.nodes_[i];
            if (n.id.empty()) throw Error("data", "MalformedTaxonomy", "empty node id");
            if (n.display_name.empty()) throw Error("data", "MalformedTaxonomy", "empty display_name for " + n.id);
            if (!t.index_.emplace(n.id, i).second) throw Error("data", "DuplicateId", n.id);
        }
        for (const auto& n : t.nodes_)
            if (n.parent_id && !t.index_.count(*n.parent_id))
                throw Error("data", "DanglingParent", n.id + " -> " + *n.parent_id);

        // Each node has at most one parent, so a cycle shows up as a parent chain
        // that revisits a node before reaching a root.
        std::vector<int> state(t.nodes_.size(), 0);  // 0 new, 1 on chain, 2 done
        for (std::size_t start = 0; start < t.nodes_.size(); ++start) {
            std::vector<std::size_t> chain;
            std::size_t cur = start;
            for (;;) {
                if (state[cur] == 2) break;
                if (state[cur] == 1) throw Error("data", "CycleDetected", t.nodes_[cur].id);
                state[cur] = 1;
                chain.push_back(cur);
                const auto& p = t.nodes_[cur].parent_id;
                if (!p) break;
                cur = t.index_.at(*p);
            }
            for (auto c : chain) state[c] = 2;
        }

        t.children_.assign(t.nodes_.size(), {});
        t.depth_.assign(t.nodes_.size(), 0);
        for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
            if (const auto& p = t.nodes_[i].parent_id) t.children_[t.index_.at(*p)].push_back(i);
            std::size_t d = 0;
            for (auto q = t.nodes_[i].parent_id; q; q = t.nodes_[t.index_.at(*q)].parent_id) ++d;
            t.depth_[i] = d;
        }
        t.topo_.resize(t.nodes_.size());
        for (std::size_t i = 0; i < t.topo_.size(); ++i) t.topo_[i] = i;
        std::stable_sort(t.topo_.begin(), t.topo_.end(),
                         [&](std::size_t a, std::size_t b) { return t.depth_[a] < t.depth_[b]; });
        return t;
    }

    [[nodiscard]] const std::string& version() const noexcept { return version_; }
    [[nodiscard]] const std::vector<LabelNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] bool contains(const std::string& id) const { return index_.count(id) != 0; }

    [[nodiscard]] const LabelNode& node(const std::string& id) const {
        const auto it = index_.find(id);
        if (it == index_.end()) throw Error("data", "UnknownLabelId", id);
        return nodes_[it->second];
    }

    [[nodiscard]] std::vector<std::string> children(const std::string& id) const {
        std::vector<std::string> out;
        for (auto c : children_[index_of(id)]) out.push_back(nodes_[c].id);
        return out;
    }

    [[nodiscard]] std::vector<std::string> roots() const {
        std::vector<std::string> out;
        for (const auto& n : nodes_)
            if (!n.parent_id) out.push_back(n.id);
        return out;
    }

    [[nodiscard]] std::vector<std::string> leaves() const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (children_[i].empty()) out.push_back(nodes_[i].id);
        return out;
    }

    /// Parent-first ordering (by depth, then file order).
    [[nodiscard]] std::vector<std::string> topological_order() const {
        std::vector<std::string> out;
        out.reserve(topo_.size());
        for (auto i : topo_) out.push_back(nodes_[i].id);
        return out;
    }

    [[nodiscard]] std::size_t depth(const std::string& id) const { return depth_[index_of(id)]; }

    bool operator==(const LabelTaxonomy& o) const { return version_ == o.version_ && nodes_ == o.nodes_; }

private:
    [[nodiscard]] std::size_t index_of(const std::string& id) const {
        const auto it = index_.find(id);
        if (it == index_.end()) throw Error("data", "UnknownLabelId", id);
        return it->second;
    }

    std::string version_;
    std::vector<LabelNode> nodes_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> depth_;
    std::vector<std::size_t> topo_;
};

// ---------------------------------------------------------------------------
// JSON I/O
// ---------------------------------------------------------------------------

[[nodiscard]] inline LabelTaxonomy taxonomy_from_json(const nlohmann::json& j) {
    std::vector<LabelNode> nodes;
    std::string version;
    try {
        const auto& v = j.at("version");
        version = v.is_string() ? v.get<std::string>() : v.dump();
        for (const auto& jn : j.at("nodes")) {
            LabelNode n;
            n.id = jn.at("id").get<std::string>();
            n.display_name = jn.at("display_name").get<std::string>();
            if (jn.contains("parent_id") && !jn.at("parent_id").is_null())
                n.parent_id = jn.at("parent_id").get<std::string>();
            const auto views = jn.value("views", std::string("both"));
            if (views == "frontal") n.views = ViewApplicability::frontal;
            else if (views == "lateral") n.views = ViewApplicability::lateral;
            else if (views == "both") n.views = ViewApplicability::both;
            else throw Error("data", "MalformedTaxonomy", "views=" + views);
            nodes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("data", "MalformedTaxonomy", e.what());
    }
    return LabelTaxonomy::build(std::move(version), std::move(nodes));
}

[[nodiscard]] inline nlohmann::json taxonomy_to_json(const LabelTaxonomy& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes()) {
        nlohmann::json jn;
        jn["id"] = n.id;
        jn["display_name"] = n.display_name;
        jn["parent_id"] = n.parent_id ? nlohmann::json(*n.parent_id) : nlohmann::json(nullptr);
        jn["views"] = view_applicability_name(n.views);
        nodes.push_back(std::move(jn));
    }
    return {{"version", t.version()}, {"nodes", std::move(nodes)}};
}

[[nodiscard]] inline LabelTaxonomy load_taxonomy(const fs::path& p) {
    const auto bytes = detail::read_file(p, "data");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw Error("data", "MalformedTaxonomy", e.what());
    }
    return taxonomy_from_json(j);
}

inline void save_taxonomy(const LabelTaxonomy& t, const fs::path& p) {
    detail::write_text(p, taxonomy_to_json(t).dump(1) + "\n", "data");
}

// ---------------------------------------------------------------------------
// Shipped chest taxonomy
// ---------------------------------------------------------------------------

enum class Side { left, right };
enum class RibPart { whole, posterior, anterior };

[[nodiscard]] inline std::string ordinal(int n) {
    const int mod100 = n % 100;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        switch (n % 10) {
            case 1: suffix = "st"; break;
            case 2: suffix = "nd"; break;
            case 3: suffix = "rd"; break;
            default: break;
        }
    }
    return std::to_string(n) + suffix;
}

[[nodiscard]] inline std::string snake_case(const std::string& display) {
    std::string s = display;
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
}

/// Display name of a rib node, e.g. "left 6th rib posterior" or "3rd rib".
[[nodiscard]] inline std::string rib_display_name(std::optional<Side> side, int index, RibPart part) {
    std::string s;
    if (side) s = *side == Side::left ? "left " : "right ";
    s += ordinal(index) + " rib";
    if (part == RibPart::posterior) s += " posterior";
    if (part == RibPart::anterior) s += " anterior";
    return s;
}

[[nodiscard]] inline std::string rib_label_id(std::optional<Side> side, int index, RibPart part) {
    return snake_case(rib_display_name(side, index, part));
}

inline constexpr const char* kPaxrayTaxonomyVersion = "paxray-166-v1";

/// The 166-label chest hierarchy with four roots: lung, mediastinum, bones, diaphragm.
[[nodiscard]] inline LabelTaxonomy paxray_taxonomy() {
    std::vector<LabelNode> nodes;
    auto add = [&](const std::string& display, const std::optional<std::string>& parent) {
        nodes.push_back({snake_case(display), display, parent, ViewApplicability::both});
        return nodes.back().id;
    };

    const auto lung = add("lung", std::nullopt);
    const auto right_lung = add("right lung", lung);
    add("right lobe upper", right_lung);
    add("right lobe middle", right_lung);
    add("right lobe lower", right_lung);
    add("right lung vessel", right_lung);
    const auto left_lung = add("left lung", lung);
    add("left lobe upper", left_lung);
    add("left lobe lower", left_lung);
    add("left lung vessel", left_lung);

    const auto med = add("mediastinum", std::nullopt);
    const auto inferior = add("inferior mediastinum", med);
    add("anterior mediastinum", inferior);
    add("middle mediastinum", inferior);
    add("posterior mediastinum", inferior);
    add("superior mediastinum", med);
    add("heart", med);
    add("airways", med);
    add("esophagus", med);
    const auto aorta = add("aorta", med);
    add("ascending aorta", aorta);
    add("aortic arch", aorta);
    add("descending aorta", aorta);

    const auto bones = add("bones", std::nullopt);
    const auto spine = add("spine", bones);
    const auto cervical = add("cervical spine", spine);
    for (int i = 1; i <= 7; ++i) add("c" + std::to_string(i), cervical);
    const auto thoracic = add("thoracic spine", spine);
    for (int i = 1; i <= 12; ++i) add("t" + std::to_string(i), thoracic);
    const auto lumbar = add("lumbar spine", spine);
    for (int i = 1; i <= 5; ++i) add("l" + std::to_string(i), lumbar);
    add("sacrum", spine);
    add("coccyx", spine);
    const auto ribs = add("ribs", bones);
    for (int i = 1; i <= 12; ++i) {
        const auto rib = add(rib_display_name(std::nullopt, i, RibPart::whole), ribs);
        add(rib_display_name(std::nullopt, i, RibPart::posterior), rib);
        add(rib_display_name(std::nullopt, i, RibPart::anterior), rib);
        for (Side side : {Side::left, Side::right}) {
            const auto sided = add(rib_display_name(side, i, RibPart::whole), rib);
            add(rib_display_name(side, i, RibPart::posterior), sided);
            add(rib_display_name(side, i, RibPart::anterior), sided);
        }
    }

    const auto dia = add("diaphragm", std::nullopt);
    add("hemidiaphragm left", dia);
    add("hemidiaphragm right", dia);

    return LabelTaxonomy::build(kPaxrayTaxonomyVersion, std::move(nodes));
}

}  // namespace paxray
