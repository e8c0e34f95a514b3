#include <algorithm>
#include <map>

#include "ecd/error.hpp"
#include "ecd/text.hpp"

namespace ecd {

namespace {

// byte offset of every code point boundary, plus the end of text
std::vector<std::size_t> code_point_offsets(std::string_view text) {
    std::vector<std::size_t> offsets;
    offsets.reserve(text.size() + 1);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) offsets.push_back(i);
    }
    offsets.push_back(text.size());
    return offsets;
}

}  // namespace

AnnotationResult load_annotations(const Document& doc, std::span<const AnnotatedSpan> spans) {
    AnnotationResult result;
    const auto offsets = code_point_offsets(doc.raw_text);
    const std::size_t length = offsets.size() - 1;

    struct Pending {
        std::optional<int> rank;
        std::size_t first_token = 0;
        std::vector<EntityMention> mentions;
    };
    std::map<std::string, Pending> grouped;

    for (const auto& span : spans) {
        const std::string key = canonicalize(span.key);
        const std::string where = "[" + std::to_string(span.start) + "," + std::to_string(span.end) + ")";
        if (span.start >= span.end || span.end > length) {
            result.rejected.push_back("span out of bounds " + where + " for doc '" + doc.id + "' of length " +
                                      std::to_string(length));
            continue;
        }
        if (key.empty()) {
            result.rejected.push_back("empty entity key at " + where);
            continue;
        }
        const std::size_t begin_byte = offsets[span.start];
        const std::size_t end_byte = offsets[span.end];
        std::optional<std::size_t> first;
        std::size_t last = 0;
        for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
            const Token& tok = doc.tokens[t];
            if (tok.start < end_byte && tok.end > begin_byte) {
                if (!first) first = t;
                last = t;
            }
        }
        if (!first) {
            result.rejected.push_back("span " + where + " covers no tokens");
            continue;
        }

        Pending& p = grouped[key];
        if (span.rank) {
            if (p.rank && *p.rank != *span.rank) {
                throw InputError("entity '" + key + "' given conflicting ranks " + std::to_string(*p.rank) +
                                 " and " + std::to_string(*span.rank));
            }
            p.rank = span.rank;
        }
        EntityMention m;
        m.token_span = {*first, last};
        m.surface = doc.raw_text.substr(doc.tokens[*first].start, doc.tokens[last].end - doc.tokens[*first].start);
        m.canonical = key;
        if (p.mentions.empty() || *first < p.first_token) p.first_token = *first;
        p.mentions.push_back(std::move(m));
    }

    int max_explicit = 0;
    std::vector<std::pair<std::size_t, std::string>> unranked;
    for (const auto& [key, p] : grouped) {
        if (p.rank) {
            max_explicit = std::max(max_explicit, *p.rank);
        } else {
            unranked.emplace_back(p.first_token, key);
        }
    }
    std::sort(unranked.begin(), unranked.end());
    int next_rank = max_explicit;
    for (const auto& [pos, key] : unranked) grouped[key].rank = ++next_rank;

    std::vector<Entity> entities;
    for (auto& [key, p] : grouped) {
        std::sort(p.mentions.begin(), p.mentions.end(),
                  [](const auto& a, const auto& b) { return a.token_span.first < b.token_span.first; });
        entities.push_back(Entity{key, *p.rank, std::move(p.mentions)});
    }
    result.entities = EntitySet(std::move(entities));
    return result;
}

}  // namespace ecd
