#include "ecd/text.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <unordered_set>

#include "ecd/error.hpp"

namespace ecd {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_ascii_letter(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// True when text[pos] is an apostrophe starting an English clitic that ends
// the word ("'s", "'re", "'ve", "'ll", "'d", "'m", "'t").
bool clitic_at(std::string_view text, std::size_t pos, std::size_t* clitic_end) {
    if (pos >= text.size() || text[pos] != '\'') return false;
    std::size_t k = pos + 1;
    while (k < text.size() && is_ascii_letter(static_cast<unsigned char>(text[k]))) ++k;
    if (k < text.size() && is_word_byte(static_cast<unsigned char>(text[k]))) return false;
    static const std::array<std::string_view, 7> kClitics = {"s", "re", "ve", "ll", "d", "m", "t"};
    const std::string suffix = case_fold(text.substr(pos + 1, k - pos - 1));
    if (std::find(kClitics.begin(), kClitics.end(), suffix) == kClitics.end()) return false;
    if (clitic_end) *clitic_end = k;
    return true;
}

bool is_capitalized(const Token& token) {
    const auto c = static_cast<unsigned char>(token.surface.front());
    return c >= 'A' && c <= 'Z';
}

bool is_sentence_terminal(const Token& token) {
    return token.surface == "." || token.surface == "!" || token.surface == "?";
}

const std::unordered_set<std::string>& closed_class_words() {
    static const std::unordered_set<std::string> kWords = {
        "a",        "an",     "the",     "in",      "on",        "at",     "for",    "of",
        "to",       "from",   "by",      "with",    "as",        "and",    "but",    "or",
        "if",       "when",   "while",   "after",   "before",    "this",   "that",   "these",
        "those",    "it",     "its",     "he",      "she",       "they",   "we",     "i",
        "you",      "his",    "her",     "their",   "our",       "my",     "there",  "here",
        "then",     "however", "meanwhile", "yesterday", "today", "also", "so",    "yet",
        "although", "though", "because", "since",   "despite",   "during", "what",   "who",
        "why",      "how",    "where",   "is",      "was",       "are",    "were",   "not",
    };
    return kWords;
}

}  // namespace

bool is_word_token(const Token& token) {
    return std::any_of(token.surface.begin(), token.surface.end(),
                       [](char c) { return is_word_byte(static_cast<unsigned char>(c)); });
}

std::string case_fold(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string canonicalize(std::string_view surface) {
    std::string out;
    bool pending_space = false;
    for (char c : surface) {
        if (is_space(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return case_fold(out);
}

Document tokenize(std::string raw_text, std::string id) {
    Document doc{std::move(id), std::move(raw_text), {}};
    const std::string_view text = doc.raw_text;
    const std::size_t n = text.size();

    auto emit = [&](std::size_t start, std::size_t end) {
        std::string surface(text.substr(start, end - start));
        std::string normalized = case_fold(surface);
        doc.tokens.push_back(Token{std::move(surface), start, end, std::move(normalized)});
    };

    std::size_t i = 0;
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            std::size_t j = i + 1;
            for (;;) {
                while (j < n && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
                const bool joiner = j + 1 < n && (text[j] == '-' || text[j] == '\'') &&
                                    is_word_byte(static_cast<unsigned char>(text[j + 1]));
                if (!joiner || clitic_at(text, j, nullptr)) break;
                j += 1;
            }
            emit(i, j);
            i = j;
            continue;
        }
        std::size_t clitic_end = 0;
        if (c == '\'' && i > 0 && is_word_byte(static_cast<unsigned char>(text[i - 1])) &&
            clitic_at(text, i, &clitic_end)) {
            emit(i, clitic_end);
            i = clitic_end;
            continue;
        }
        emit(i, i + 1);
        ++i;
    }
    return doc;
}

EntitySet::EntitySet(std::vector<Entity> entities) : entities_(std::move(entities)) {
    std::sort(entities_.begin(), entities_.end(),
              [](const Entity& a, const Entity& b) { return a.rank < b.rank; });
    std::set<std::string> seen;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        const Entity& e = entities_[i];
        if (e.key.empty()) throw InputError("entity key must be non-empty");
        if (e.rank < 1) throw InputError("entity rank must be positive: " + e.key);
        if (i > 0 && entities_[i - 1].rank == e.rank) {
            throw InputError("duplicate entity rank " + std::to_string(e.rank));
        }
        if (!seen.insert(e.key).second) throw InputError("duplicate entity key: " + e.key);
    }
}

EntitySet EntitySet::from_mentions(std::vector<EntityMention> mentions) {
    std::stable_sort(mentions.begin(), mentions.end(), [](const auto& a, const auto& b) {
        return a.token_span.first < b.token_span.first;
    });
    std::vector<Entity> entities;
    std::map<std::string, std::size_t> index;
    for (auto& m : mentions) {
        auto [it, inserted] = index.emplace(m.canonical, entities.size());
        if (inserted) {
            entities.push_back(Entity{m.canonical, static_cast<int>(entities.size()) + 1, {}});
        }
        entities[it->second].mentions.push_back(std::move(m));
    }
    return EntitySet(std::move(entities));
}

const Entity* EntitySet::find(std::string_view key) const {
    for (const auto& e : entities_) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

std::set<std::string> EntitySet::keys() const {
    std::set<std::string> out;
    for (const auto& e : entities_) out.insert(e.key);
    return out;
}

EntitySet extract_entities_heuristic(const Document& doc) {
    const auto& tokens = doc.tokens;
    std::vector<bool> sentence_start(tokens.size(), false);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        sentence_start[i] = i == 0 || is_sentence_terminal(tokens[i - 1]);
    }

    std::unordered_set<std::string> mid_sentence_caps;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!sentence_start[i] && is_capitalized(tokens[i])) {
            mid_sentence_caps.insert(tokens[i].normalized);
        }
    }

    const auto& closed = closed_class_words();
    std::vector<EntityMention> mentions;
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (!is_capitalized(tokens[i])) {
            ++i;
            continue;
        }
        std::size_t first = i;
        std::size_t end = i;
        while (end < tokens.size() && is_capitalized(tokens[end])) ++end;
        i = end;

        if (sentence_start[first]) {
            if (closed.contains(tokens[first].normalized)) {
                ++first;
            } else if (end - first < 2 && !mid_sentence_caps.contains(tokens[first].normalized)) {
                continue;
            }
        }
        if (first == end) continue;
        if (end - first == 1 && closed.contains(tokens[first].normalized)) continue;

        EntityMention m;
        m.token_span = {first, end - 1};
        m.surface = doc.raw_text.substr(tokens[first].start, tokens[end - 1].end - tokens[first].start);
        m.canonical = canonicalize(m.surface);
        mentions.push_back(std::move(m));
    }
    return EntitySet::from_mentions(std::move(mentions));
}

AnnotatedDocument annotate_heuristic(std::string raw_text, std::string id) {
    AnnotatedDocument out;
    out.doc = tokenize(std::move(raw_text), std::move(id));
    out.entities = extract_entities_heuristic(out.doc);
    return out;
}

ContextWindow context_window(const AnnotatedDocument& adoc, std::string_view key, int half_size) {
    if (half_size < 1) throw InputError("window half-size must be >= 1");
    const Entity* entity = adoc.entities.find(key);
    if (entity == nullptr) throw DomainError("unknown entity key: " + std::string(key));

    const auto& tokens = adoc.doc.tokens;
    std::vector<std::size_t> word_positions;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (is_word_token(tokens[t])) word_positions.push_back(t);
    }
    std::vector<bool> own(tokens.size(), false);
    for (const auto& m : entity->mentions) {
        for (std::size_t t = m.token_span.first; t <= m.token_span.last && t < tokens.size(); ++t) {
            own[t] = true;
        }
    }

    ContextWindow window{entity->key, {}};
    const auto w = static_cast<std::size_t>(half_size);
    auto take = [&](std::size_t t) {
        if (!own[t]) window.words.insert(tokens[t].normalized);
    };
    for (const auto& m : entity->mentions) {
        const auto left = std::lower_bound(word_positions.begin(), word_positions.end(), m.token_span.first);
        const auto left_begin = left - std::min<std::ptrdiff_t>(w, left - word_positions.begin());
        for (auto it = left_begin; it != left; ++it) take(*it);

        const auto right = std::upper_bound(word_positions.begin(), word_positions.end(), m.token_span.last);
        const auto right_end = right + std::min<std::ptrdiff_t>(w, word_positions.end() - right);
        for (auto it = right; it != right_end; ++it) take(*it);
    }
    return window;
}

}  // namespace ecd
