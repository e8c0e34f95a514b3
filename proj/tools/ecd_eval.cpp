// ecd-eval: batch front end for entity-context divergence scoring, RAG-ability
// profiles, context building, preference mining, toy DPO-ECD training and
// weighted-alpha diagnostics.
//
// Exit codes: 0 ok, 1 internal error, 2 input error, 3 domain error,
// 4 degenerate data.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ecd/context_builder.hpp"
#include "ecd/error.hpp"
#include "ecd/io.hpp"
#include "ecd/metric.hpp"
#include "ecd/preference.hpp"
#include "ecd/ragability.hpp"
#include "ecd/report.hpp"
#include "ecd/spectral.hpp"

namespace fs = std::filesystem;

namespace {

struct SharedFlags {
    int window = ecd::kDefaultWindow;
    std::optional<double> sigma;
    std::string sigma_mode;
    std::string zero_common = "error";
    double fraction = ecd::kDefaultFraction;
    double gamma = 1.0;
    double lr = 0.1;
    int epochs = 20;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::string out;
};

ecd::EcdConfig ecd_config(const SharedFlags& f) {
    ecd::EcdConfig cfg;
    cfg.window_half_size = f.window;
    const std::string mode = f.sigma_mode.empty() ? (f.sigma ? "fixed" : "computed") : f.sigma_mode;
    if (mode == "fixed") {
        if (!f.sigma) throw ecd::InputError("--sigma-mode fixed needs --sigma");
        cfg.sigma_mode = ecd::SigmaMode::kFixed;
        cfg.fixed_sigma = *f.sigma;
    }
    cfg.zero_common_policy =
        f.zero_common == "sentinel" ? ecd::ZeroCommonPolicy::kSentinel : ecd::ZeroCommonPolicy::kError;
    cfg.validate();
    return cfg;
}

std::string dump(const ecd::json& j) { return j.dump(2) + "\n"; }

void warn_all(const std::vector<std::string>& messages) {
    for (const auto& m : messages) std::cerr << "warning: " << m << "\n";
}

class Context {
public:
    explicit Context(CLI::App& app) : app_(app) {}
    SharedFlags flags;

    /// Writes to --out/<name>, or to stdout when no --out was given and `stdout_ok`.
    void emit(const std::string& name, const std::string& content, bool stdout_ok = true) {
        if (flags.out.empty()) {
            if (stdout_ok) std::cout << content;
            return;
        }
        ecd::write_text_file(fs::path(flags.out) / name, content);
    }

    void require_out(const char* command) const {
        if (flags.out.empty()) throw ecd::InputError(std::string(command) + " needs --out <dir>");
    }

    /// Resolved global flags plus the options of the subcommand that ran.
    void snapshot() const {
        if (flags.out.empty()) return;
        const auto active = app_.get_subcommands().front()->get_name() + ".";
        std::istringstream all(app_.config_to_str(true, false));
        std::string kept, line;
        while (std::getline(all, line)) {
            const auto key = line.substr(0, line.find('='));
            if (key.find('.') == std::string::npos || key.rfind(active, 0) == 0) kept += line + "\n";
        }
        ecd::write_text_file(fs::path(flags.out) / "run_config.toml", kept);
    }

private:
    CLI::App& app_;
};

const ecd::AnnotationRecord* pick_record(const std::map<std::string, ecd::AnnotationRecord>& records,
                                         const std::string& doc_id) {
    if (auto it = records.find(doc_id); it != records.end()) return &it->second;
    if (records.size() == 1) return &records.begin()->second;
    return nullptr;
}

ecd::AnnotatedDocument load_single(const std::string& path, const std::string& annotations) {
    ecd::CorpusDoc doc{fs::path(path).stem().string(), ecd::read_text_file(path)};
    if (annotations.empty()) return ecd::annotate_document(doc, nullptr);
    const auto records = ecd::read_annotations_jsonl(annotations);
    const auto* rec = pick_record(records, doc.id);
    if (rec == nullptr) throw ecd::InputError("no annotation record for '" + doc.id + "' in " + annotations);
    std::vector<std::string> rejected;
    auto out = ecd::annotate_document(doc, rec, &rejected);
    warn_all(rejected);
    return out;
}

// Corpus documents annotated from the optional annotation file, keyed by id.
std::map<std::string, ecd::AnnotatedDocument> load_corpus(const std::string& corpus, const std::string& annotations) {
    const auto docs = ecd::read_corpus(corpus);
    std::map<std::string, ecd::AnnotationRecord> records;
    if (!annotations.empty()) records = ecd::read_annotations_jsonl(annotations);
    std::map<std::string, ecd::AnnotatedDocument> out;
    std::vector<std::string> rejected;
    for (const auto& d : docs) {
        const auto it = records.find(d.id);
        out.emplace(d.id, ecd::annotate_document(d, it == records.end() ? nullptr : &it->second, &rejected));
    }
    warn_all(rejected);
    return out;
}

ecd::ScenarioRun score_manifest(const std::string& manifest, const std::string& corpus, const std::string& annotations,
                                const std::string& scenario_filter, const SharedFlags& flags) {
    const auto entries = ecd::read_run_manifest(manifest);
    const auto docs = load_corpus(corpus, annotations);
    std::optional<ecd::Scenario> filter;
    if (!scenario_filter.empty()) {
        filter = ecd::parse_scenario(scenario_filter);
        if (!filter) throw ecd::InputError("unknown scenario '" + scenario_filter + "'");
    }
    std::vector<ecd::DocumentPair> pairs;
    ecd::Scenario scenario = filter.value_or(ecd::Scenario::kWebContext);
    for (const auto& e : entries) {
        if (filter && e.scenario != *filter) continue;
        const auto c = docs.find(e.context_id);
        const auto g = docs.find(e.generated_id);
        if (c == docs.end()) throw ecd::InputError("manifest references unknown document '" + e.context_id + "'");
        if (g == docs.end()) throw ecd::InputError("manifest references unknown document '" + e.generated_id + "'");
        if (pairs.empty()) scenario = e.scenario;
        pairs.push_back({&c->second, &g->second});
    }
    if (pairs.empty()) throw ecd::InputError("manifest has no pairs to score");
    return ecd::score_run(scenario, pairs, ecd_config(flags), flags.jobs);
}

// {"prompt_id", "prompt", "context", "candidates": [{"id", "text"}]}
std::vector<ecd::PromptCandidates> load_prompts(const std::string& path, const ecd::EcdConfig& cfg) {
    std::vector<ecd::PromptCandidates> groups;
    ecd::for_each_jsonl(path, [&](const ecd::json& j, std::size_t) {
        ecd::PromptCandidates g;
        g.prompt_id = j.at("prompt_id").get<std::string>();
        g.prompt = j.value("prompt", std::string());
        g.context = ecd::annotate_heuristic(j.at("context").get<std::string>(), g.prompt_id + ":context");
        for (const auto& c : j.at("candidates")) {
            const auto id = c.at("id").get<std::string>();
            ecd::add_candidate(g, id, ecd::annotate_heuristic(c.at("text").get<std::string>(), id), cfg);
        }
        groups.push_back(std::move(g));
    });
    return groups;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entity-context divergence evaluation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file (flags override it)")->envname("ECD_EVAL_CONFIG");

    Context ctx(app);
    auto& f = ctx.flags;
    app.add_option("--window", f.window, "Context window half-size in word tokens")->capture_default_str();
    app.add_option("--sigma", f.sigma, "Fixed penalty scale sigma (implies --sigma-mode fixed)");
    app.add_option("--sigma-mode", f.sigma_mode, "computed | fixed")->check(CLI::IsMember({"computed", "fixed"}));
    app.add_option("--zero-common", f.zero_common, "error | sentinel when no entity is shared")
        ->check(CLI::IsMember({"error", "sentinel"}))
        ->capture_default_str();
    app.add_option("--fraction", f.fraction, "Fraction of ranked sentences kept")->capture_default_str();
    app.add_option("--gamma", f.gamma, "ECD trade-off weight")->capture_default_str();
    app.add_option("--lr", f.lr, "Learning rate")->capture_default_str();
    app.add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
    app.add_option("--seed", f.seed, "Random seed")->capture_default_str();
    app.add_option("--jobs", f.jobs, "Parallel scoring threads")->capture_default_str();
    app.add_option("--out", f.out, "Output directory");

    // score
    std::string score_ctx, score_gen, score_ctx_ann, score_gen_ann;
    auto* score = app.add_subcommand("score", "Score one generated text against its context");
    score->fallthrough();
    score->add_option("context", score_ctx, "Context text file")->required();
    score->add_option("generated", score_gen, "Generated text file")->required();
    score->add_option("--context-annotations", score_ctx_ann, "Annotation JSON-lines for the context");
    score->add_option("--generated-annotations", score_gen_ann, "Annotation JSON-lines for the generation");
    score->callback([&] {
        const auto cfg = ecd_config(f);
        const auto c = load_single(score_ctx, score_ctx_ann);
        const auto g = load_single(score_gen, score_gen_ann);
        const auto out = dump(ecd::to_json(ecd::ecd_score(c, g, cfg)));
        std::cout << out;
        ctx.emit("breakdown.json", out, false);
        ctx.snapshot();
    });

    // batch-score
    std::string batch_manifest, batch_corpus, batch_ann, batch_scenario;
    auto* batch = app.add_subcommand("batch-score", "Score every pair of a run manifest");
    batch->fallthrough();
    batch->add_option("manifest", batch_manifest, "Run manifest JSON-lines")->required();
    batch->add_option("--corpus", batch_corpus, "Corpus JSON-lines or directory")->required();
    batch->add_option("--annotations", batch_ann, "Annotation JSON-lines");
    batch->add_option("--scenario", batch_scenario, "Only pairs with this scenario tag");
    batch->callback([&] {
        const auto run = score_manifest(batch_manifest, batch_corpus, batch_ann, batch_scenario, f);
        std::string lines;
        for (const auto& p : run.pairs) {
            ecd::json j;
            j["context"] = p.context_id;
            j["generated"] = p.generated_id;
            j["scenario"] = std::string(ecd::to_string(run.scenario));
            j["breakdown"] = ecd::to_json(p.breakdown);
            lines += j.dump() + "\n";
        }
        ctx.emit("scores.jsonl", lines);
        ctx.snapshot();
    });

    // profile
    std::string prof_manifest, prof_corpus, prof_ann, prof_scenario;
    std::optional<double> prof_bandwidth;
    std::size_t prof_grid = ecd::kDefaultGridSize;
    auto* prof = app.add_subcommand("profile", "Green/blue divergence densities of a run");
    prof->fallthrough();
    prof->add_option("manifest", prof_manifest, "Run manifest JSON-lines")->required();
    prof->add_option("--corpus", prof_corpus, "Corpus JSON-lines or directory")->required();
    prof->add_option("--annotations", prof_ann, "Annotation JSON-lines");
    prof->add_option("--scenario", prof_scenario, "Only pairs with this scenario tag");
    prof->add_option("--bandwidth", prof_bandwidth, "Fixed KDE bandwidth (default: Silverman)");
    prof->add_option("--grid-size", prof_grid, "KDE grid points")->capture_default_str();
    prof->callback([&] {
        ctx.require_out("profile");
        const auto run = score_manifest(prof_manifest, prof_corpus, prof_ann, prof_scenario, f);
        const auto profile = ecd::profile(run, ecd::ProfileOptions{prof_grid, prof_bandwidth});
        ctx.emit("profile.csv", ecd::profile_csv(profile));
        ctx.emit("profile.svg", ecd::profile_svg(profile, "RAG-ability: " + std::string(ecd::to_string(run.scenario))));
        auto peaks = ecd::peaks_json(profile);
        peaks["scenario"] = std::string(ecd::to_string(run.scenario));
        ctx.emit("peaks.json", dump(peaks));
        ctx.snapshot();
    });

    // build-context
    std::string bc_corpus, bc_query, bc_vectors;
    auto* bc = app.add_subcommand("build-context", "Select the top-ranked sentences of a local corpus");
    bc->fallthrough();
    bc->add_option("corpus", bc_corpus, "Directory of .txt files or JSON-lines corpus")->required();
    bc->add_option("--query", bc_query, "Ranking query")->required();
    bc->add_option("--vectors", bc_vectors, "Precomputed embeddings JSON-lines (default: TF-IDF)");
    bc->callback([&] {
        std::vector<ecd::RetrievedDoc> docs;
        for (auto& d : ecd::read_corpus(bc_corpus)) docs.push_back({d.id, bc_corpus, std::move(d.text)});
        const auto built = bc_vectors.empty()
                               ? ecd::build_context(bc_query, docs, f.fraction)
                               : ecd::build_context(bc_query, docs, f.fraction,
                                                    ecd::PrecomputedProvider::from_jsonl(bc_vectors));
        ctx.emit("context.txt", built.text() + "\n");
        ecd::json side;
        side["query"] = built.query;
        side["fraction"] = built.fraction;
        side["candidate_count"] = built.candidate_count;
        side["sentences"] = ecd::json::array();
        for (const auto& s : built.sentences) {
            side["sentences"].push_back({{"doc_id", s.doc_id},
                                         {"sentence_index", s.sentence_index},
                                         {"similarity", s.similarity},
                                         {"text", s.text}});
        }
        ctx.emit("context.json", dump(side), false);
        ctx.snapshot();
    });

    // corrupt
    std::string cor_doc, cor_ann;
    std::vector<std::string> cor_replace, cor_pool;
    std::size_t cor_count = 1;
    auto* cor = app.add_subcommand("corrupt", "Synthesize a factually corrupted context by entity replacement");
    cor->fallthrough();
    cor->add_option("document", cor_doc, "Context text file")->required();
    cor->add_option("--annotations", cor_ann, "Annotation JSON-lines for the document");
    cor->add_option("--replace", cor_replace, "KEY=SURFACE replacement (repeatable)");
    cor->add_option("--pool", cor_pool, "Replacement surfaces to sample from (repeatable)");
    cor->add_option("--count", cor_count, "Entities to replace when sampling from --pool")->capture_default_str();
    cor->callback([&] {
        const auto original = load_single(cor_doc, cor_ann);
        std::map<std::string, std::string> table;
        for (const auto& r : cor_replace) {
            const auto eq = r.find('=');
            if (eq == std::string::npos) throw ecd::InputError("--replace expects KEY=SURFACE, got '" + r + "'");
            table[ecd::canonicalize(r.substr(0, eq))] = r.substr(eq + 1);
        }
        if (!cor_pool.empty()) {
            for (auto& [k, v] : ecd::sample_replacements(original.entities, cor_pool, cor_count, f.seed)) table.emplace(k, v);
        }
        const auto corrupted = ecd::synthesize_corrupted_context(original, table);
        ctx.emit("corrupted.txt", corrupted.doc.raw_text, true);
        ecd::json report;
        report["replacements"] = table;
        try {
            report["ecd"] = ecd::to_json(ecd::ecd_score(original, corrupted, ecd_config(f)));
        } catch (const ecd::DomainError& e) {
            report["ecd_error"] = e.what();
        }
        ctx.emit("corruption.json", dump(report), false);
        ctx.snapshot();
    });

    // pairs
    std::string pairs_in;
    double min_gap = 0.0;
    auto* pairs = app.add_subcommand("pairs", "Mine ECD-ranked preference pairs");
    pairs->fallthrough();
    pairs->add_option("prompts", pairs_in, "Prompt/candidate JSON-lines")->required();
    pairs->add_option("--min-gap", min_gap, "Minimum ECD gap for a pair")->capture_default_str();
    pairs->callback([&] {
        const auto groups = load_prompts(pairs_in, ecd_config(f));
        const auto mined = ecd::build_pairs(groups, min_gap);
        std::string lines;
        for (const auto& p : mined.pairs) lines += ecd::preference_record(groups[p.group], p).dump() + "\n";
        ctx.emit("pairs.jsonl", lines);
        warn_all(mined.skipped);
        ctx.emit("skipped.json", dump(ecd::json(mined.skipped)), false);
        ctx.snapshot();
    });

    // train-toy
    std::string train_in;
    double train_min_gap = 0.0;
    std::size_t batch_size = 0;
    auto* train = app.add_subcommand("train-toy", "Train the toy DPO-ECD policy on mined pairs");
    train->fallthrough();
    train->add_option("prompts", train_in, "Prompt/candidate JSON-lines")->required();
    train->add_option("--min-gap", train_min_gap, "Minimum ECD gap for a training pair")->capture_default_str();
    train->add_option("--batch-size", batch_size, "Pairs per step (0 = full batch)")->capture_default_str();
    train->callback([&] {
        const auto groups = load_prompts(train_in, ecd_config(f));
        const auto mined = ecd::build_pairs(groups, train_min_gap);
        warn_all(mined.skipped);
        const auto set = ecd::make_training_set(groups, mined);
        const ecd::TrainConfig tc{f.gamma, f.lr, f.epochs, f.seed, batch_size};
        const auto result = ecd::train_toy(ecd::ToyPolicy{}, set, tc);
        std::string csv = "epoch,loss,mean_argmax_ecd\n";
        for (const auto& m : result.metrics) csv += fmt::format("{},{:.10g},{:.10g}\n", m.epoch, m.loss, m.mean_argmax_ecd);
        ctx.emit("metrics.csv", csv);
        ecd::json pol;
        pol["weights"] = result.policy.weights();
        pol["features"] = {"entity_overlap", "word_overlap", "bias"};
        pol["pairs"] = set.pairs.size();
        ctx.emit("policy.json", dump(pol), false);
        ctx.snapshot();
    });

    // alpha
    std::string alpha_manifest;
    auto* alpha = app.add_subcommand("alpha", "Weighted-alpha spectral diagnostic of layer weights");
    alpha->fallthrough();
    alpha->add_option("manifest", alpha_manifest, "Layer manifest JSON")->required();
    alpha->callback([&] {
        const auto layers = ecd::load_layer_manifest(alpha_manifest);
        const auto stats = ecd::weighted_alpha(layers, f.jobs);
        for (const auto& s : stats.skipped) std::cerr << "warning: skipped layer " << s.layer_id << ": " << s.reason << "\n";
        ctx.emit("stats.json", dump(ecd::to_json(stats)));
        ctx.snapshot();
    });

    // drift
    std::string drift_before, drift_after;
    double threshold = ecd::kDefaultDriftThreshold;
    auto* drift = app.add_subcommand("drift", "Compare weighted-alpha stats before and after alignment");
    drift->fallthrough();
    drift->add_option("before", drift_before, "Stats JSON before")->required();
    drift->add_option("after", drift_after, "Stats JSON after")->required();
    drift->add_option("--threshold", threshold, "Allowed relative drift")->capture_default_str();
    drift->callback([&] {
        auto parse = [](const std::string& path) {
            try {
                return ecd::spectral_stats_from_json(ecd::json::parse(ecd::read_text_file(path)));
            } catch (const ecd::json::parse_error& e) {
                throw ecd::InputError(path + ": " + e.what());
            }
        };
        const auto report = ecd::compare_stats(parse(drift_before), parse(drift_after), threshold);
        ctx.emit("drift.json", dump(ecd::to_json(report)));
        ctx.snapshot();
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ecd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const ecd::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
