#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecd/text.hpp"

namespace ecd {

struct RetrievedDoc {
    std::string id;
    std::string source_uri;
    std::string text;
};

struct Sentence {
    std::string text;    // trimmed
    std::size_t start = 0;  // byte range of the trimmed sentence in the source text
    std::size_t end = 0;
};

struct SplitOptions {
    /// Treat "X." (a single capital letter) as an initial, not a sentence end.
    bool guard_single_letter = true;
};

/// Splits on '.', '!' or '?' (plus trailing quotes/brackets) followed by
/// whitespace or end of text. Known abbreviations ("Mr.", "Dr.", "e.g.", ...)
/// never end a sentence.
std::vector<Sentence> split_sentences(std::string_view text, const SplitOptions& options = {});

/// a·b / (‖a‖‖b‖); 0 when either vector is zero. Throws InputError on a
/// dimension mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
};

/// TF-IDF over the word tokens of a fitted sentence collection, L2-normalized.
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1. The vocabulary is sorted, so
/// vectors do not depend on the order of the fitted texts.
class TfidfProvider final : public EmbeddingProvider {
public:
    explicit TfidfProvider(std::span<const std::string> corpus);

    std::vector<double> embed(std::string_view text) const override;
    std::size_t dimension() const override { return idf_.size(); }

private:
    std::map<std::string, std::size_t> vocabulary_;
    std::vector<double> idf_;
};

/// Vectors produced elsewhere, looked up by exact (trimmed) text.
/// File format: JSON-lines {"key": string, "vector": [float, ...]}.
class PrecomputedProvider final : public EmbeddingProvider {
public:
    static PrecomputedProvider from_jsonl(const std::filesystem::path& path);
    explicit PrecomputedProvider(std::unordered_map<std::string, std::vector<double>> vectors);

    /// Throws InputError for an unknown key.
    std::vector<double> embed(std::string_view text) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::unordered_map<std::string, std::vector<double>> vectors_;
    std::size_t dimension_ = 0;
};

struct RankedSentence {
    std::string doc_id;
    std::size_t sentence_index = 0;
    std::string text;
    double similarity = 0.0;
};

struct BuiltContext {
    std::string query;
    std::vector<RankedSentence> sentences;  // similarity descending, ties by (doc_id, sentence_index)
    double fraction = 0.3;
    std::size_t candidate_count = 0;

    /// Selected sentences joined by single spaces.
    std::string text() const;
};

inline constexpr double kDefaultFraction = 0.30;

/// ceil(fraction · n), robust to binary rounding (0.3 · 10 selects 3).
std::size_t top_fraction_count(double fraction, std::size_t n);

/// Ranks every sentence of every document against the query and keeps the
/// top ceil(fraction · N). Throws InputError on an empty corpus, a document
/// with blank text, or fraction outside (0, 1].
BuiltContext build_context(std::string_view query, std::span<const RetrievedDoc> docs, double fraction,
                           const EmbeddingProvider& provider);

/// Same, with a TF-IDF provider fitted on the corpus sentences.
BuiltContext build_context(std::string_view query, std::span<const RetrievedDoc> docs,
                           double fraction = kDefaultFraction);

/// Replaces every mention of each listed entity with the given surface and
/// leaves all other bytes untouched. Replaced mentions take the canonical key
/// of the new surface and keep the original entity's rank; when two entities
/// merge into one key the smaller rank wins, and auto-ranked (1..n) inputs are
/// re-densified. Throws DomainError for a key that is not an entity of the text.
AnnotatedDocument synthesize_corrupted_context(const AnnotatedDocument& context,
                                               const std::map<std::string, std::string>& replacements);

/// Draws `count` distinct entity keys of the context (ascending rank order
/// shuffled under seed) and pairs each with a distinct pool surface.
std::map<std::string, std::string> sample_replacements(const EntitySet& entities,
                                                       std::span<const std::string> pool, std::size_t count,
                                                       std::uint64_t seed);

}  // namespace ecd
