#include "ecd/context_builder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "ecd/error.hpp"

namespace ecd {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}'; }

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> kAbbrev = {
        "mr",  "mrs", "ms",  "dr",   "prof", "sr",  "jr",  "st",   "mt",   "gen", "gov", "sen", "rep",
        "col", "lt",  "sgt", "capt", "cmdr", "adm", "rev", "hon",  "pres", "inc", "ltd", "co",  "corp",
        "vs",  "etc", "e.g", "i.e",  "no",   "jan", "feb", "aug",  "sept", "sep", "oct", "nov", "dec",
        "approx", "dept", "est", "fig", "al",
    };
    return kAbbrev;
}

// Word ending right before text[dot] (letters, digits and inner periods).
std::string_view word_before(std::string_view text, std::size_t dot) {
    std::size_t b = dot;
    while (b > 0 && !is_space(text[b - 1]) && text[b - 1] != '(' && text[b - 1] != '"') --b;
    return text.substr(b, dot - b);
}

bool ends_with_abbreviation(std::string_view text, std::size_t dot, const SplitOptions& options) {
    const std::string_view word = word_before(text, dot);
    if (word.empty()) return false;
    if (options.guard_single_letter && word.size() == 1 && word[0] >= 'A' && word[0] <= 'Z') return true;
    if (word.find('.') != std::string_view::npos) return true;  // "U.S", "e.g"
    return abbreviations().contains(case_fold(word));
}

void push_trimmed(std::string_view text, std::size_t begin, std::size_t end, std::vector<Sentence>& out) {
    while (begin < end && is_space(text[begin])) ++begin;
    while (end > begin && is_space(text[end - 1])) --end;
    if (begin < end) out.push_back(Sentence{std::string(text.substr(begin, end - begin)), begin, end});
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

}  // namespace

std::vector<Sentence> split_sentences(std::string_view text, const SplitOptions& options) {
    std::vector<Sentence> out;
    std::size_t begin = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_terminal(text[i])) {
            ++i;
            continue;
        }
        const std::size_t first = i;
        while (i < text.size() && is_terminal(text[i])) ++i;
        const bool single_period = i == first + 1 && text[first] == '.';
        while (i < text.size() && is_closer(text[i])) ++i;
        if (i < text.size() && !is_space(text[i])) continue;
        if (single_period && ends_with_abbreviation(text, first, options)) continue;
        push_trimmed(text, begin, i, out);
        begin = i;
    }
    push_trimmed(text, begin, text.size(), out);
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InputError("cosine of vectors with different dimensions (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

std::vector<std::string> word_terms(std::string_view text) {
    std::vector<std::string> terms;
    for (auto& tok : tokenize(std::string(text)).tokens) {
        if (is_word_token(tok)) terms.push_back(std::move(tok.normalized));
    }
    return terms;
}

}  // namespace

TfidfProvider::TfidfProvider(std::span<const std::string> corpus) {
    std::map<std::string, std::size_t> df;
    for (const auto& text : corpus) {
        const auto terms = word_terms(text);
        for (const auto& t : std::set<std::string>(terms.begin(), terms.end())) ++df[t];
    }
    const auto n = static_cast<double>(corpus.size());
    idf_.reserve(df.size());
    for (const auto& [term, count] : df) {
        vocabulary_.emplace(term, idf_.size());
        idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
}

std::vector<double> TfidfProvider::embed(std::string_view text) const {
    std::vector<double> v(idf_.size(), 0.0);
    for (const auto& t : word_terms(text)) {
        if (auto it = vocabulary_.find(t); it != vocabulary_.end()) v[it->second] += 1.0;
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] *= idf_[i];
        norm += v[i] * v[i];
    }
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

PrecomputedProvider::PrecomputedProvider(std::unordered_map<std::string, std::vector<double>> vectors)
    : vectors_(std::move(vectors)) {
    bool first = true;
    for (const auto& [key, v] : vectors_) {
        if (first) {
            dimension_ = v.size();
            first = false;
        } else if (v.size() != dimension_) {
            throw InputError("embedding for '" + key + "' has dimension " + std::to_string(v.size()) + ", expected " +
                             std::to_string(dimension_));
        }
    }
}

PrecomputedProvider PrecomputedProvider::from_jsonl(const std::filesystem::path& path) {
    std::unordered_map<std::string, std::vector<double>> vectors;
    std::ifstream probe(path);
    if (!probe) throw InputError("cannot read " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(probe, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            vectors[trim(j.at("key").get<std::string>())] = j.at("vector").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return PrecomputedProvider(std::move(vectors));
}

std::vector<double> PrecomputedProvider::embed(std::string_view text) const {
    const auto it = vectors_.find(trim(text));
    if (it == vectors_.end()) throw InputError("no precomputed embedding for: " + std::string(text.substr(0, 60)));
    return it->second;
}

std::string BuiltContext::text() const {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out += ' ';
        out += s.text;
    }
    return out;
}

std::size_t top_fraction_count(double fraction, std::size_t n) {
    if (n == 0) return 0;
    const double x = fraction * static_cast<double>(n);
    const double nearest = std::round(x);
    const double k = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
    return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n);
}

namespace {

struct SentenceCandidate {
    std::string doc_id;
    std::size_t index;
    std::string text;
};

std::vector<SentenceCandidate> collect_candidates(std::span<const RetrievedDoc> docs, double fraction) {
    if (docs.empty()) throw InputError("empty corpus");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must be in (0, 1]");
    std::set<std::string> ids;
    std::vector<SentenceCandidate> out;
    for (const auto& d : docs) {
        if (trim(d.text).empty()) throw InputError("document '" + d.id + "' has no text");
        if (!ids.insert(d.id).second) throw InputError("duplicate document id '" + d.id + "'");
        const auto sentences = split_sentences(d.text);
        for (std::size_t i = 0; i < sentences.size(); ++i) out.push_back(SentenceCandidate{d.id, i, sentences[i].text});
    }
    return out;
}

BuiltContext rank_and_select(std::string_view query, const std::vector<SentenceCandidate>& candidates, double fraction,
                             const EmbeddingProvider& provider) {
    const auto q = provider.embed(query);
    std::vector<RankedSentence> ranked;
    ranked.reserve(candidates.size());
    for (const auto& c : candidates) {
        ranked.push_back(RankedSentence{c.doc_id, c.index, c.text, cosine(q, provider.embed(c.text))});
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedSentence& a, const RankedSentence& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
        return a.sentence_index < b.sentence_index;
    });
    BuiltContext out;
    out.query = std::string(query);
    out.fraction = fraction;
    out.candidate_count = ranked.size();
    ranked.resize(top_fraction_count(fraction, ranked.size()));
    out.sentences = std::move(ranked);
    return out;
}

}  // namespace

BuiltContext build_context(std::string_view query, std::span<const RetrievedDoc> docs, double fraction,
                           const EmbeddingProvider& provider) {
    return rank_and_select(query, collect_candidates(docs, fraction), fraction, provider);
}

BuiltContext build_context(std::string_view query, std::span<const RetrievedDoc> docs, double fraction) {
    const auto candidates = collect_candidates(docs, fraction);
    std::vector<std::string> texts;
    texts.reserve(candidates.size());
    for (const auto& c : candidates) texts.push_back(c.text);
    const TfidfProvider provider(texts);
    return rank_and_select(query, candidates, fraction, provider);
}

AnnotatedDocument synthesize_corrupted_context(const AnnotatedDocument& context,
                                               const std::map<std::string, std::string>& replacements) {
    for (const auto& [key, surface] : replacements) {
        if (!context.entities.contains(key)) throw DomainError("replacement key is not an entity: " + key);
        if (canonicalize(surface).empty()) throw InputError("replacement surface for '" + key + "' is blank");
    }

    struct Span {
        std::size_t start;
        std::size_t end;
        const Entity* entity;
        const std::string* replacement;  // null when kept
    };
    const auto& tokens = context.doc.tokens;
    std::vector<Span> spans;
    for (const auto& e : context.entities.entities()) {
        const auto it = replacements.find(e.key);
        for (const auto& m : e.mentions) {
            spans.push_back(Span{tokens[m.token_span.first].start, tokens[m.token_span.last].end, &e,
                                 it == replacements.end() ? nullptr : &it->second});
        }
    }
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.start < b.start; });

    const std::string& raw = context.doc.raw_text;
    std::string text;
    std::size_t cursor = 0;
    std::vector<std::pair<std::size_t, std::size_t>> new_ranges(spans.size());
    std::size_t replaced_until = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const Span& s = spans[i];
        if (s.replacement && s.start < replaced_until) throw DomainError("overlapping entity mentions cannot be replaced");
        if (s.replacement) {
            text.append(raw, cursor, s.start - cursor);
            const std::size_t begin = text.size();
            text += *s.replacement;
            new_ranges[i] = {begin, text.size()};
            cursor = s.end;
            replaced_until = s.end;
        } else {
            if (s.start < cursor) throw DomainError("entity mention overlaps a replaced mention");
            const std::size_t shift_begin = text.size() + (s.start - cursor);
            new_ranges[i] = {shift_begin, shift_begin + (s.end - s.start)};
        }
    }
    text.append(raw, cursor, std::string::npos);

    AnnotatedDocument out;
    out.doc = tokenize(std::move(text), context.doc.id);
    const auto& new_tokens = out.doc.tokens;

    struct Pending {
        int rank;
        std::vector<EntityMention> mentions;
    };
    std::map<std::string, Pending> grouped;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto [begin, end] = new_ranges[i];
        std::optional<std::size_t> first;
        std::size_t last = 0;
        for (std::size_t t = 0; t < new_tokens.size(); ++t) {
            if (new_tokens[t].start < end && new_tokens[t].end > begin) {
                if (!first) first = t;
                last = t;
            }
        }
        if (!first) continue;
        EntityMention m;
        m.token_span = {*first, last};
        m.surface = out.doc.raw_text.substr(new_tokens[*first].start, new_tokens[last].end - new_tokens[*first].start);
        m.canonical = spans[i].replacement ? canonicalize(*spans[i].replacement) : spans[i].entity->key;
        auto [it, inserted] = grouped.try_emplace(m.canonical, Pending{spans[i].entity->rank, {}});
        it->second.rank = std::min(it->second.rank, spans[i].entity->rank);
        it->second.mentions.push_back(std::move(m));
    }

    std::vector<Entity> entities;
    for (auto& [key, p] : grouped) entities.push_back(Entity{key, p.rank, std::move(p.mentions)});

    bool dense = true;
    for (std::size_t i = 0; i < context.entities.size(); ++i) {
        dense = dense && context.entities.entities()[i].rank == static_cast<int>(i) + 1;
    }
    if (dense) {
        std::sort(entities.begin(), entities.end(), [](const Entity& a, const Entity& b) { return a.rank < b.rank; });
        for (std::size_t i = 0; i < entities.size(); ++i) entities[i].rank = static_cast<int>(i) + 1;
    }
    out.entities = EntitySet(std::move(entities));
    return out;
}

std::map<std::string, std::string> sample_replacements(const EntitySet& entities, std::span<const std::string> pool,
                                                       std::size_t count, std::uint64_t seed) {
    std::vector<std::string> keys;
    for (const auto& e : entities.entities()) keys.push_back(e.key);
    std::vector<std::string> surfaces;
    std::set<std::string> seen;
    for (const auto& s : pool) {
        const auto key = canonicalize(s);
        if (key.empty() || entities.contains(key) || !seen.insert(key).second) continue;
        surfaces.push_back(s);
    }
    if (count > keys.size()) throw InputError("cannot replace more entities than the context has");
    if (count > surfaces.size()) throw InputError("replacement pool has too few novel surfaces");

    std::mt19937_64 rng(seed);
    std::shuffle(keys.begin(), keys.end(), rng);
    std::shuffle(surfaces.begin(), surfaces.end(), rng);
    std::map<std::string, std::string> table;
    for (std::size_t i = 0; i < count; ++i) table.emplace(keys[i], surfaces[i]);
    return table;
}

}  // namespace ecd
