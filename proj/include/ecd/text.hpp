#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ecd {

/// One lexical token. Offsets are UTF-8 byte offsets into the parent
/// Document's raw_text, half-open: raw_text.substr(start, end - start) == surface.
struct Token {
    std::string surface;
    std::size_t start = 0;
    std::size_t end = 0;
    std::string normalized;  // case-folded surface

    bool operator==(const Token&) const = default;
};

struct Document {
    std::string id;
    std::string raw_text;
    std::vector<Token> tokens;
};

/// True when the token carries at least one letter or digit.
bool is_word_token(const Token& token);

/// ASCII case folding; bytes >= 0x80 pass through unchanged.
std::string case_fold(std::string_view text);

/// Whitespace-normalized, case-folded entity key.
std::string canonicalize(std::string_view surface);

/// Splits text into word, clitic ("'s", "'re") and single-character
/// punctuation tokens. Hyphens and apostrophes between word characters
/// stay inside the word ("post-pandemic", "O'Neil"). Bytes >= 0x80 count as
/// word characters so non-ASCII letters are never split.
Document tokenize(std::string raw_text, std::string id = {});

struct TokenSpan {
    std::size_t first = 0;  // inclusive
    std::size_t last = 0;   // inclusive

    bool operator==(const TokenSpan&) const = default;
};

struct EntityMention {
    std::string surface;
    TokenSpan token_span;
    std::string canonical;
};

struct Entity {
    std::string key;
    int rank = 0;
    std::vector<EntityMention> mentions;  // in document order
};

/// Canonical entities of one document, ordered by rank.
///
/// Ranks are positive and unique. Auto-assigned ranks are 1..n in order of
/// first mention; annotations may inject arbitrary explicit ranks.
class EntitySet {
public:
    EntitySet() = default;

    /// Validates keys (non-empty, unique) and ranks (positive, unique).
    /// Throws InputError on violation.
    explicit EntitySet(std::vector<Entity> entities);

    /// Groups mentions by canonical key and ranks keys by first occurrence.
    static EntitySet from_mentions(std::vector<EntityMention> mentions);

    const std::vector<Entity>& entities() const { return entities_; }
    std::size_t size() const { return entities_.size(); }
    bool empty() const { return entities_.empty(); }

    const Entity* find(std::string_view key) const;
    bool contains(std::string_view key) const { return find(key) != nullptr; }
    std::set<std::string> keys() const;

private:
    std::vector<Entity> entities_;
};

struct AnnotatedDocument {
    Document doc;
    EntitySet entities;
};

/// Capitalization-based fallback NER.
///
/// A mention is a maximal run of capitalized tokens. A run that starts a
/// sentence is kept when it spans several tokens or when its first word is
/// also seen capitalized mid-sentence elsewhere; a leading closed-class word
/// ("The", "In", ...) is stripped from sentence-initial runs first.
EntitySet extract_entities_heuristic(const Document& doc);

/// Tokenizes and runs the heuristic tagger.
AnnotatedDocument annotate_heuristic(std::string raw_text, std::string id = {});

/// One annotated entity span. start/end are Unicode code point offsets
/// (half-open), matching what Python string slicing produces.
struct AnnotatedSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string key;
    std::optional<int> rank;
};

struct AnnotationRecord {
    std::string doc_id;
    std::vector<AnnotatedSpan> entities;
};

struct AnnotationResult {
    EntitySet entities;
    std::vector<std::string> rejected;  // one diagnostic per dropped span
};

/// Maps annotated character spans onto tokens and builds the EntitySet.
///
/// Out-of-range or empty spans and empty keys are rejected with a diagnostic.
/// Explicit ranks are used verbatim; entities without one are ranked after
/// the largest explicit rank, in first-occurrence order. Two entities sharing
/// an explicit rank, or one entity given two different ranks, throw InputError.
AnnotationResult load_annotations(const Document& doc, std::span<const AnnotatedSpan> spans);

struct ContextWindow {
    std::string entity;
    std::set<std::string> words;
};

/// Default window half-size in word tokens.
inline constexpr int kDefaultWindow = 10;

/// Union over every mention of `key` of the normalized word tokens within
/// `half_size` word positions before and after the mention. Positions count
/// word tokens only (punctuation is skipped entirely). Tokens belonging to any
/// mention of the entity occupy positions but never enter the set.
///
/// Throws DomainError for an unknown key and InputError for half_size < 1.
ContextWindow context_window(const AnnotatedDocument& adoc, std::string_view key, int half_size);

}  // namespace ecd
