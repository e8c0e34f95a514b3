#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecd/metric.hpp"
#include "ecd/preference.hpp"
#include "ecd/spectral.hpp"
#include "ecd/ragability.hpp"
#include "ecd/text.hpp"

namespace ecd {

using json = nlohmann::json;

/// Reads a whole file. Throws InputError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Calls fn for every non-blank line parsed as JSON. Parse failures throw
/// InputError naming the file and line number.
void for_each_jsonl(const std::filesystem::path& path, const std::function<void(const json&, std::size_t)>& fn);

/// {"id": string, "text": string}
struct CorpusDoc {
    std::string id;
    std::string text;
};

std::vector<CorpusDoc> read_corpus_jsonl(const std::filesystem::path& path);
/// Every *.txt file in the directory, id = file stem, sorted by id.
std::vector<CorpusDoc> read_corpus_dir(const std::filesystem::path& dir);
/// Directory or JSON-lines file.
std::vector<CorpusDoc> read_corpus(const std::filesystem::path& path);

/// {"doc_id": string, "entities": [{"start": int, "end": int, "key": string, "rank": int?}]}
/// Records for the same doc_id are merged.
std::map<std::string, AnnotationRecord> read_annotations_jsonl(const std::filesystem::path& path);
AnnotationRecord parse_annotation_record(const json& j);

/// Annotated via the record when given, else by the heuristic tagger.
/// Rejected annotation spans are appended to `rejected`.
AnnotatedDocument annotate_document(const CorpusDoc& doc, const AnnotationRecord* record,
                                    std::vector<std::string>* rejected = nullptr);

/// {"context": id, "generated": id, "scenario": tag}
struct ManifestEntry {
    std::string context_id;
    std::string generated_id;
    Scenario scenario = Scenario::kWebContext;
};
std::vector<ManifestEntry> read_run_manifest(const std::filesystem::path& path);

json to_json(const EcdBreakdown& b);
json to_json(const EcdConfig& cfg);

json to_json(const SpectralStats& stats);
/// Inverse of to_json(SpectralStats); throws InputError on a malformed object.
SpectralStats spectral_stats_from_json(const json& j);
json to_json(const DriftReport& report);

/// Export record consumed by external DPO trainers:
/// {"prompt", "context", "chosen", "rejected", "ecd_chosen", "ecd_rejected"}.
json preference_record(const PromptCandidates& group, const PreferencePair& pair);

}  // namespace ecd
