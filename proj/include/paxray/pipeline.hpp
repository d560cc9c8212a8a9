#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "paxray/container.hpp"
#include "paxray/derive.hpp"
#include "paxray/error.hpp"
#include "paxray/eval.hpp"
#include "paxray/ground.hpp"
#include "paxray/label_volume.hpp"
#include "paxray/language.hpp"
#include "paxray/parallel.hpp"
#include "paxray/phantom.hpp"
#include "paxray/project.hpp"
#include "paxray/taxonomy.hpp"

// Command orchestration shared by the command-line tool and the tests.
// Output layout under `out_dir`:
//   phantom/volume.{json,raw}, phantom/labels/
//   derived/labels/, derived/masks/{body,bone}.{json,raw}, derived/warnings.json
//   projection/<view>/image.pgm, projection/<view>/image.{json,raw}, projection/<view>/labels/
//   grounding/<view>.json
//   metrics/hitrate.json, metrics/topk.json

namespace paxray::pipeline {

struct PipelineConfig {
    fs::path out_dir = "out";
    std::optional<fs::path> volume;        // default: <out>/phantom/volume
    std::optional<fs::path> input_labels;  // default: <out>/phantom/labels
    std::optional<fs::path> taxonomy;      // default: built-in hierarchy
    fs::path lexicon = "data/lexicon.tsv";
    fs::path embeddings = "data/embeddings.txt";
    fs::path reports = "data/reports.json";
    fs::path annotations = "data/annotations.json";
    fs::path proposals = "data/proposals.json";
    std::vector<fs::path> groundings;      // default: <out>/grounding/<view>.json for views present

    derive::DeriveConfig derive;
    project::ProjectionParams projection;
    project::LabelCleanup cleanup;
    std::vector<std::size_t> k{1, 5, 10};
    std::vector<double> iou{0.25, 0.5, 0.75};
    bool strict_iou = false;
    unsigned threads = 1;

    [[nodiscard]] fs::path volume_path() const { return volume.value_or(out_dir / "phantom" / "volume"); }
    [[nodiscard]] fs::path input_labels_path() const { return input_labels.value_or(out_dir / "phantom" / "labels"); }
    [[nodiscard]] fs::path derived_dir() const { return out_dir / "derived"; }
    [[nodiscard]] fs::path projection_dir(View v) const { return out_dir / "projection" / view_name(v); }
    [[nodiscard]] fs::path grounding_path(View v) const {
        return out_dir / "grounding" / (std::string(view_name(v)) + ".json");
    }
    [[nodiscard]] fs::path metrics_dir() const { return out_dir / "metrics"; }
};

/// Keys mirror the field names; relative paths resolve against `base`.
[[nodiscard]] inline PipelineConfig config_from_json(const nlohmann::json& j, const fs::path& base = {}) {
    PipelineConfig c;
    auto path = [&](const char* key) -> std::optional<fs::path> {
        if (!j.contains(key)) return std::nullopt;
        const fs::path p = j.at(key).get<std::string>();
        return p.is_absolute() || base.empty() ? p : base / p;
    };
    try {
        if (auto p = path("out_dir")) c.out_dir = *p;
        c.volume = path("volume");
        c.input_labels = path("input_labels");
        c.taxonomy = path("taxonomy");
        if (auto p = path("lexicon")) c.lexicon = *p;
        if (auto p = path("embeddings")) c.embeddings = *p;
        if (auto p = path("reports")) c.reports = *p;
        if (auto p = path("annotations")) c.annotations = *p;
        if (auto p = path("proposals")) c.proposals = *p;
        if (j.contains("groundings"))
            for (const auto& g : j.at("groundings")) {
                const fs::path p = g.get<std::string>();
                c.groundings.push_back(p.is_absolute() || base.empty() ? p : base / p);
            }
        if (j.contains("derive")) c.derive = j.at("derive").get<derive::DeriveConfig>();
        if (j.contains("projection")) project::from_json(j.at("projection"), c.projection);
        if (j.contains("cleanup")) project::from_json(j.at("cleanup"), c.cleanup);
        if (j.contains("k")) c.k = j.at("k").get<std::vector<std::size_t>>();
        if (j.contains("iou")) c.iou = j.at("iou").get<std::vector<double>>();
        c.strict_iou = j.value("strict_iou", c.strict_iou);
        c.threads = j.value("threads", c.threads);
    } catch (const nlohmann::json::exception& e) {
        throw Error("cli", "InvalidConfig", e.what());
    }
    return c;
}

[[nodiscard]] inline PipelineConfig load_config(const fs::path& p) {
    const auto bytes = paxray::detail::read_file(p, "cli");
    try {
        return config_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()), p.parent_path());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("cli", "InvalidConfig", e.what());
    }
}

[[nodiscard]] inline LabelTaxonomy taxonomy_for(const PipelineConfig& c) {
    return c.taxonomy ? load_taxonomy(*c.taxonomy) : paxray_taxonomy();
}

inline void write_json(const fs::path& p, const nlohmann::json& j, const char* module) {
    paxray::detail::write_text(p, j.dump(2) + "\n", module);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void run_phantom(const PipelineConfig& c, std::uint64_t seed, int size, const std::optional<fs::path>& out) {
    const auto ph = phantom::make_phantom(seed, size);
    const fs::path dir = out.value_or(c.out_dir / "phantom");
    save_volume(ph.volume, dir / "volume", Dtype::i16);
    save_label_volume(ph.inputs, dir / "labels");
}

[[nodiscard]] inline nlohmann::json warnings_json(const std::vector<Warning>& ws) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& w : ws) j.push_back({{"warning", w.qualified()}, {"detail", w.detail}});
    return j;
}

inline derive::Derivation run_derive(const PipelineConfig& c) {
    const auto tax = taxonomy_for(c);
    const auto volume = load_volume(c.volume_path());
    const auto inputs = load_label_volume(c.input_labels_path());
    auto d = derive::derive_labels(volume, inputs, tax, c.derive);

    const auto dir = c.derived_dir();
    const std::vector<double> spacing(volume.spacing_mm.begin(), volume.spacing_mm.end());
    save_label_volume(d.labels, dir / "labels", spacing);
    save_mask(d.body, dir / "masks" / "body", spacing);
    save_mask(d.bone, dir / "masks" / "bone", spacing);
    write_json(dir / "warnings.json", warnings_json(d.warnings), "cli");
    return d;
}

inline void run_project(const PipelineConfig& c, View view) {
    const auto volume = load_volume(c.volume_path());
    const auto dir = c.derived_dir();
    const auto labels = load_label_volume(dir / "labels");
    const auto body = load_mask<3>(dir / "masks" / "body");
    const auto bone = load_mask<3>(dir / "masks" / "bone");

    auto params = c.projection;
    params.axis = view;
    const auto image = project::intensity_project(volume, body, bone, params);
    const auto out = c.projection_dir(view);
    project::write_image(image, out / "image.pgm");
    save_image_f32(image, out / "image");
    save_label_set<2>(project::project_labels(labels, view, c.cleanup), out / "labels");
}

/// Reports file: a list whose entries are either `{"id","findings"}` (split
/// and tagged here) or pre-tagged `{"id","phrases":[...]}`.
[[nodiscard]] inline std::vector<language::PretaggedReport> load_reports(const fs::path& p,
                                                                         const language::Lexicon& lex) {
    const auto bytes = paxray::detail::read_file(p, "language");
    std::vector<language::PretaggedReport> out;
    try {
        const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
        if (!j.is_array()) throw Error("language", "MalformedJson", "reports must be a list");
        for (const auto& e : j) {
            if (e.contains("phrases")) {
                out.push_back(language::pretagged_from_json(e));
                continue;
            }
            language::Report r{e.at("id").get<std::string>(), e.at("findings").get<std::string>()};
            if (r.id.empty()) throw Error("language", "MalformedJson", "report id is empty");
            language::PretaggedReport t{r.id, {}};
            for (const auto& s : language::split_sentences(r)) t.phrases.push_back(language::tag_phrase(s, lex));
            out.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("language", "MalformedJson", e.what());
    }
    return out;
}

[[nodiscard]] inline bool applies_to(ViewApplicability a, View v) noexcept {
    return a == ViewApplicability::both || (a == ViewApplicability::frontal) == (v == View::frontal);
}

/// Grounds every kept phrase of every report against one view's regions.
[[nodiscard]] inline std::vector<ground::GroundingResult> ground_reports(
    const std::vector<language::PretaggedReport>& reports, const ground::RegionSet& regions, const LabelTaxonomy& tax,
    const language::Lexicon& lex, const language::EmbeddingTable& table, std::size_t k) {
    std::map<std::string, std::vector<double>> label_vecs;
    for (const auto& n : tax.nodes()) {
        const auto it = regions.regions.find(n.id);
        if (it == regions.regions.end() || it->second.empty() || !applies_to(n.views, regions.view)) continue;
        label_vecs.emplace(n.id, language::embed_label_text(n, lex, table));
    }

    std::vector<ground::GroundingResult> out;
    for (const auto& r : reports) {
        ground::GroundingResult g{r.id, regions.view, {}};
        const auto kept = language::filter_phrases(r.phrases);
        std::vector<std::vector<double>> vecs;
        for (const auto& p : kept) vecs.push_back(language::embed_phrase(p, table));
        const auto sim = ground::similarity_matrix(vecs, label_vecs);
        g.phrases.resize(kept.size());
        parallel_for(kept.size(), [&](std::size_t i) {
            g.phrases[i] = {kept[i].raw_text, ground::retrieve(sim, i, k, regions, vecs[i])};
        });
        out.push_back(std::move(g));
    }
    return out;
}

inline std::vector<ground::GroundingResult> run_ground(const PipelineConfig& c, View view) {
    const auto tax = taxonomy_for(c);
    const auto lex = language::load_lexicon(c.lexicon);
    const auto table = language::load_embeddings(c.embeddings);
    const auto reports = load_reports(c.reports, lex);
    const auto projected = load_label_set<2>(c.projection_dir(view) / "labels");

    std::map<std::string, ground::ProbabilityMap> raw;
    for (const auto& [id, m] : projected.entries) raw.emplace(id, ground::as_probability(m));
    const auto regions = ground::refine_region_masks(raw, tax, view);

    const std::size_t k = c.k.empty() ? 1 : *std::max_element(c.k.begin(), c.k.end());
    auto results = ground_reports(reports, regions, tax, lex, table, k);
    ground::save_groundings(results, c.grounding_path(view));
    return results;
}

inline nlohmann::json run_eval_hitrate(const PipelineConfig& c) {
    const auto gts = eval::load_annotations(c.annotations);
    const auto proposals = eval::load_proposals(c.proposals);
    auto report = eval::hitrate_report(gts, proposals, c.iou, c.strict_iou);
    write_json(c.metrics_dir() / "hitrate.json", report, "eval");
    return report;
}

inline nlohmann::json run_eval_topk(const PipelineConfig& c) {
    const auto gts = eval::load_annotations(c.annotations);
    std::vector<fs::path> files = c.groundings;
    if (files.empty())
        for (View v : {View::frontal, View::lateral})
            if (fs::exists(c.grounding_path(v))) files.push_back(c.grounding_path(v));
    if (files.empty()) throw Error("ground", "MissingFile", (c.out_dir / "grounding").string());
    std::vector<ground::GroundingResult> groundings;
    for (const auto& f : files) {
        auto g = ground::load_groundings(f);
        groundings.insert(groundings.end(), g.begin(), g.end());
    }
    auto report = eval::topk_report(gts, groundings, c.k, c.iou, c.strict_iou);
    write_json(c.metrics_dir() / "topk.json", report, "eval");
    return report;
}

}  // namespace paxray::pipeline
