// paxray: phantom generation, label derivation, projection, grounding and evaluation.
//
//   paxray phantom --seed 7 --size 64 --out-dir run
//   paxray derive  --out-dir run
//   paxray project --out-dir run --view frontal
//   paxray ground  --config run.json --view frontal
//   paxray eval topk --config run.json --k 1 --k 5 --iou 0.5
//
// Failures print {"error":"<module>.<code>","detail":...} on stderr.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "paxray/paxray.hpp"

namespace {

using paxray::pipeline::PipelineConfig;

struct Flags {
    std::string config;
    std::string out_dir;
    std::string volume, labels, taxonomy, lexicon, embeddings, reports, annotations, proposals;
    std::vector<std::string> groundings;
    std::vector<std::size_t> k;
    std::vector<double> iou;
    bool strict = false;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    int size = 64;
    std::string phantom_out;
    std::string view;
};

void print_error(const std::string& code, const std::string& detail) {
    std::cerr << nlohmann::json{{"error", code}, {"detail", detail}}.dump() << "\n";
}

/// Config file first, then flags on top.
PipelineConfig resolve(const Flags& f) {
    PipelineConfig c = f.config.empty() ? PipelineConfig{} : paxray::pipeline::load_config(f.config);
    if (!f.out_dir.empty()) c.out_dir = f.out_dir;
    if (!f.volume.empty()) c.volume = f.volume;
    if (!f.labels.empty()) c.input_labels = f.labels;
    if (!f.taxonomy.empty()) c.taxonomy = f.taxonomy;
    if (!f.lexicon.empty()) c.lexicon = f.lexicon;
    if (!f.embeddings.empty()) c.embeddings = f.embeddings;
    if (!f.reports.empty()) c.reports = f.reports;
    if (!f.annotations.empty()) c.annotations = f.annotations;
    if (!f.proposals.empty()) c.proposals = f.proposals;
    if (!f.groundings.empty()) c.groundings.assign(f.groundings.begin(), f.groundings.end());
    if (!f.k.empty()) c.k = f.k;
    if (!f.iou.empty()) c.iou = f.iou;
    if (f.strict) c.strict_iou = true;
    if (f.threads > 0) c.threads = f.threads;
    return c;
}

std::vector<paxray::View> views_of(const std::string& v) {
    if (v.empty()) return {paxray::View::frontal, paxray::View::lateral};
    return {paxray::parse_view(v)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anatomy label derivation, pseudo-radiograph projection and phrase grounding"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;

    app.add_option("--config", f.config, "JSON pipeline configuration");
    app.add_option("--out-dir", f.out_dir, "Root directory for outputs");
    app.add_option("--threads", f.threads, "Worker threads (results do not depend on it)");
    app.add_option("--volume", f.volume, "Volume container (stem, .json or .raw)");
    app.add_option("--labels", f.labels, "Directory of input label masks");
    app.add_option("--taxonomy", f.taxonomy, "Label taxonomy JSON (default: built-in)");
    app.add_option("--lexicon", f.lexicon, "Lexicon TSV");
    app.add_option("--embeddings", f.embeddings, "Word embeddings, text format");
    app.add_option("--reports", f.reports, "Reports JSON");
    app.add_option("--annotations", f.annotations, "Ground-truth boxes JSON");
    app.add_option("--proposals", f.proposals, "Proposal boxes JSON");
    app.add_option("--grounding", f.groundings, "Grounding JSON (repeatable)");
    app.add_option("--k", f.k, "Top-k cut-offs (repeatable)");
    app.add_option("--iou", f.iou, "IoU thresholds (repeatable)");
    app.add_flag("--strict-iou", f.strict, "Require IoU strictly above the threshold");

    auto* phantom = app.add_subcommand("phantom", "Write a procedural CT phantom and its input masks");
    phantom->add_option("--seed", f.seed, "Noise seed");
    phantom->add_option("--size", f.size, "Voxels per side (>= 32)");
    phantom->add_option("--out", f.phantom_out, "Output directory (default: <out-dir>/phantom)");

    auto* derive = app.add_subcommand("derive", "Derive the hierarchical label volume");
    auto* project = app.add_subcommand("project", "Project intensities and labels into 2D");
    project->add_option("--view", f.view, "frontal or lateral (default: both)");
    auto* ground = app.add_subcommand("ground", "Ground report phrases onto projected regions");
    ground->add_option("--view", f.view, "frontal or lateral (default: both)");
    auto* eval = app.add_subcommand("eval", "Evaluate proposals or grounding results");
    eval->require_subcommand(1);
    eval->fallthrough();
    auto* hitrate = eval->add_subcommand("hitrate", "Hit rate of proposal boxes");
    auto* topk = eval->add_subcommand("topk", "Top-k retrieval accuracy of grounding results");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("cli.InvalidArgument", e.what());
        return 2;
    }

    try {
        const auto cfg = resolve(f);
        paxray::set_num_threads(cfg.threads);
        if (phantom->parsed()) {
            std::optional<paxray::fs::path> out;
            if (!f.phantom_out.empty()) out = f.phantom_out;
            paxray::pipeline::run_phantom(cfg, f.seed, f.size, out);
        } else if (derive->parsed()) {
            const auto d = paxray::pipeline::run_derive(cfg);
            std::cout << d.labels.entries.size() << " labels, " << d.warnings.size() << " warnings\n";
        } else if (project->parsed()) {
            for (auto v : views_of(f.view)) paxray::pipeline::run_project(cfg, v);
        } else if (ground->parsed()) {
            for (auto v : views_of(f.view)) (void)paxray::pipeline::run_ground(cfg, v);
        } else if (hitrate->parsed()) {
            std::cout << paxray::pipeline::run_eval_hitrate(cfg).dump(2) << "\n";
        } else if (topk->parsed()) {
            std::cout << paxray::pipeline::run_eval_topk(cfg).dump(2) << "\n";
        }
    } catch (const paxray::Error& e) {
        print_error(e.qualified(), e.detail());
        return 1;
    } catch (const std::exception& e) {
        print_error("cli.Internal", e.what());
        return 1;
    }
    return 0;
}
