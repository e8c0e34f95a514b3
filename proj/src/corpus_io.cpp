#include <algorithm>
#include <fstream>
#include <sstream>

#include "ecd/error.hpp"
#include "ecd/io.hpp"

namespace ecd {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
}

void for_each_jsonl(const fs::path& path, const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            fn(j, line_no);
        } catch (const json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::vector<CorpusDoc> read_corpus_jsonl(const fs::path& path) {
    std::vector<CorpusDoc> docs;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        docs.push_back(CorpusDoc{j.at("id").get<std::string>(), j.at("text").get<std::string>()});
    });
    return docs;
}

std::vector<CorpusDoc> read_corpus_dir(const fs::path& dir) {
    std::vector<CorpusDoc> docs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            docs.push_back(CorpusDoc{entry.path().stem().string(), read_text_file(entry.path())});
        }
    }
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return docs;
}

std::vector<CorpusDoc> read_corpus(const fs::path& path) {
    if (fs::is_directory(path)) return read_corpus_dir(path);
    if (!fs::exists(path)) throw InputError("no such corpus: " + path.string());
    return read_corpus_jsonl(path);
}

AnnotationRecord parse_annotation_record(const json& j) {
    AnnotationRecord rec;
    rec.doc_id = j.at("doc_id").get<std::string>();
    for (const auto& e : j.at("entities")) {
        AnnotatedSpan span;
        const auto start = e.at("start").get<long long>();
        const auto end = e.at("end").get<long long>();
        if (start < 0 || end < 0) throw InputError("negative span offset in annotations for " + rec.doc_id);
        span.start = static_cast<std::size_t>(start);
        span.end = static_cast<std::size_t>(end);
        span.key = e.at("key").get<std::string>();
        if (e.contains("rank") && !e.at("rank").is_null()) span.rank = e.at("rank").get<int>();
        rec.entities.push_back(std::move(span));
    }
    return rec;
}

std::map<std::string, AnnotationRecord> read_annotations_jsonl(const fs::path& path) {
    std::map<std::string, AnnotationRecord> out;
    for_each_jsonl(path, [&](const json& j, std::size_t) {
        AnnotationRecord rec = parse_annotation_record(j);
        auto& slot = out[rec.doc_id];
        slot.doc_id = rec.doc_id;
        slot.entities.insert(slot.entities.end(), rec.entities.begin(), rec.entities.end());
    });
    return out;
}

AnnotatedDocument annotate_document(const CorpusDoc& doc, const AnnotationRecord* record,
                                    std::vector<std::string>* rejected) {
    if (record == nullptr) return annotate_heuristic(doc.text, doc.id);
    AnnotatedDocument out;
    out.doc = tokenize(doc.text, doc.id);
    auto result = load_annotations(out.doc, record->entities);
    if (rejected) {
        for (auto& r : result.rejected) rejected->push_back(doc.id + ": " + r);
    }
    out.entities = std::move(result.entities);
    return out;
}

std::vector<ManifestEntry> read_run_manifest(const fs::path& path) {
    std::vector<ManifestEntry> entries;
    for_each_jsonl(path, [&](const json& j, std::size_t line) {
        ManifestEntry e;
        e.context_id = j.at("context").get<std::string>();
        e.generated_id = j.at("generated").get<std::string>();
        const auto tag = j.value("scenario", std::string(to_string(Scenario::kWebContext)));
        const auto scenario = parse_scenario(tag);
        if (!scenario) {
            throw InputError(path.string() + ":" + std::to_string(line) + ": unknown scenario '" + tag + "'");
        }
        e.scenario = *scenario;
        entries.push_back(std::move(e));
    });
    return entries;
}

json to_json(const EcdBreakdown& b) {
    json j;
    j["per_entity_divergence"] = b.per_entity_divergence;
    j["mean_common"] = b.mean_common;
    j["sigma"] = b.sigma;
    j["n_common"] = b.n_common;
    j["me_penalty"] = b.me_penalty;
    j["ae_penalty"] = b.ae_penalty;
    j["total"] = b.total;
    j["common"] = b.partition.common;
    j["missing"] = b.partition.missing;
    j["added"] = b.partition.added;
    return j;
}

json to_json(const EcdConfig& cfg) {
    json j;
    j["window_half_size"] = cfg.window_half_size;
    j["sigma_mode"] = cfg.sigma_mode == SigmaMode::kFixed ? "fixed" : "computed";
    if (cfg.sigma_mode == SigmaMode::kFixed) j["sigma"] = cfg.fixed_sigma;
    j["zero_common_policy"] = cfg.zero_common_policy == ZeroCommonPolicy::kError ? "error" : "sentinel";
    return j;
}

}  // namespace ecd
