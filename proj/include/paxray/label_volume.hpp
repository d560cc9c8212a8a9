#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/container.hpp"
#include "paxray/grid.hpp"
#include "paxray/taxonomy.hpp"

namespace paxray {

/// Multi-label family of masks keyed by taxonomy label id. Masks may overlap.
template <std::size_t Dim>
struct LabelSet {
    Extent<Dim> shape{};
    std::string taxonomy;
    std::map<std::string, Mask<Dim>> entries;

    [[nodiscard]] bool contains(const std::string& id) const { return entries.count(id) != 0; }

    [[nodiscard]] const Mask<Dim>& at(const std::string& id) const {
        const auto it = entries.find(id);
        if (it == entries.end()) throw Error("data", "UnknownLabelId", id);
        return it->second;
    }

    void set(const std::string& id, Mask<Dim> m) {
        require_same_shape<Dim>(shape, m.shape, "data");
        entries.insert_or_assign(id, std::move(m));
    }

    bool operator==(const LabelSet&) const = default;
};

using LabelVolume = LabelSet<3>;
using LabelImage = LabelSet<2>;

template <std::size_t Dim>
void check_label_ids(const LabelSet<Dim>& ls, const LabelTaxonomy& tax) {
    for (const auto& [id, m] : ls.entries) {
        if (!tax.contains(id)) throw Error("data", "UnknownLabelId", id);
        require_same_shape<Dim>(ls.shape, m.shape, "data");
    }
}

// ---------------------------------------------------------------------------
// Hierarchy
// ---------------------------------------------------------------------------

/// Union-completes every ancestor: a parent's mask becomes its own input mask
/// (empty when absent) united with all descendant masks. The result contains
/// every input label and all of their ancestors.
template <std::size_t Dim>
[[nodiscard]] LabelSet<Dim> compose_hierarchy(const LabelSet<Dim>& ls, const LabelTaxonomy& tax) {
    check_label_ids(ls, tax);
    LabelSet<Dim> out = ls;
    out.taxonomy = tax.version();
    for (const auto& [id, m] : ls.entries) {
        for (auto p = tax.node(id).parent_id; p; p = tax.node(*p).parent_id)
            if (!out.contains(*p)) out.entries.emplace(*p, Mask<Dim>(ls.shape));
    }
    const auto order = tax.topological_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto& node = tax.node(*it);
        if (!node.parent_id || !out.contains(*it)) continue;
        out.entries.at(*node.parent_id) |= out.entries.at(*it);
    }
    return out;
}

struct HierarchyViolation {
    std::string child;
    std::string parent;
    std::size_t outside_voxels = 0;

    bool operator==(const HierarchyViolation&) const = default;
};

/// Every edge (child, parent) with both labels present where the child has
/// voxels outside the parent. Edges whose parent is absent are not checked.
template <std::size_t Dim>
[[nodiscard]] std::vector<HierarchyViolation> validate_hierarchy(const LabelSet<Dim>& ls, const LabelTaxonomy& tax) {
    std::vector<HierarchyViolation> out;
    for (const auto& node : tax.nodes()) {
        if (!node.parent_id || !ls.contains(node.id) || !ls.contains(*node.parent_id)) continue;
        const auto n = count_outside(ls.at(node.id), ls.at(*node.parent_id));
        if (n > 0) out.push_back({node.id, *node.parent_id, n});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Directory I/O: labels.json manifest plus one mask container per label
// ---------------------------------------------------------------------------

template <std::size_t Dim>
void save_label_set(const LabelSet<Dim>& ls, const fs::path& dir, const std::vector<double>& spacing_mm = {}) {
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [id, m] : ls.entries) {
        save_mask(m, dir / id, spacing_mm);
        labels[id] = id;
    }
    const nlohmann::json manifest = {{"taxonomy", ls.taxonomy}, {"labels", labels}};
    detail::write_text(dir / "labels.json", manifest.dump(1) + "\n", "data");
}

template <std::size_t Dim>
[[nodiscard]] LabelSet<Dim> load_label_set(const fs::path& dir) {
    const auto bytes = detail::read_file(dir / "labels.json", "data");
    LabelSet<Dim> ls;
    try {
        const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
        ls.taxonomy = j.at("taxonomy").get<std::string>();
        bool first = true;
        for (const auto& [id, stem] : j.at("labels").items()) {
            const auto name = stem.template get<std::string>();
            if (name.empty() || name == "." || name == ".." || name.find_first_of("/\\") != std::string::npos)
                throw Error("data", "MalformedManifest", "bad stem for " + id + ": " + name);
            auto m = load_mask<Dim>(dir / name);
            if (first) ls.shape = m.shape;
            first = false;
            require_same_shape<Dim>(ls.shape, m.shape, "data");
            ls.entries.emplace(id, std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("data", "MalformedManifest", e.what());
    }
    return ls;
}

inline void save_label_volume(const LabelVolume& lv, const fs::path& dir, const std::vector<double>& spacing = {}) {
    save_label_set<3>(lv, dir, spacing);
}

[[nodiscard]] inline LabelVolume load_label_volume(const fs::path& dir) { return load_label_set<3>(dir); }

}  // namespace paxray
