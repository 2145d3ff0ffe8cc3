#include "patwa/metrics.hpp"

#include "patwa/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <sstream>

namespace patwa {

namespace {

bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalnum(u) != 0 || u >= 0x80;
}

// Folds the typographic marks that show up in scraped lyrics to ASCII so the
// apostrophe rule sees them. Everything else passes through unchanged.
void fold_typographic(std::string_view text, std::string& out) {
    out.clear();
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c == 0xE2 && i + 2 < text.size()) {
            unsigned char c1 = static_cast<unsigned char>(text[i + 1]);
            unsigned char c2 = static_cast<unsigned char>(text[i + 2]);
            if (c1 == 0x80) {
                switch (c2) {
                    case 0x98: case 0x99: // curly single quotes
                        out.push_back('\'');
                        i += 3;
                        continue;
                    case 0x9C: case 0x9D: // curly double quotes
                        out.push_back('"');
                        i += 3;
                        continue;
                    case 0x93: case 0x94: // en / em dash
                        out.push_back('-');
                        i += 3;
                        continue;
                    case 0xA6: // ellipsis
                        out.append("...");
                        i += 3;
                        continue;
                    default:
                        break;
                }
            }
        }
        out.push_back(static_cast<char>(c));
        ++i;
    }
}

void append_token(std::string_view raw, TokenSeq& out) {
    std::string token;
    token.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (is_word_char(c)) {
            unsigned char u = static_cast<unsigned char>(c);
            token.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
        } else if (c == '\'') {
            // Keep the apostrophe only between two word characters.
            if (i > 0 && i + 1 < raw.size() && is_word_char(raw[i - 1]) && is_word_char(raw[i + 1])) {
                token.push_back('\'');
            }
        }
        // Any other punctuation is dropped.
    }
    if (!token.empty()) {
        out.push_back(std::move(token));
    }
}

} // namespace

TokenSeq tokenize(std::string_view text) {
    std::string folded;
    fold_typographic(text, folded);

    TokenSeq tokens;
    std::size_t start = std::string::npos;
    for (std::size_t i = 0; i <= folded.size(); ++i) {
        bool is_space = i == folded.size() || std::isspace(static_cast<unsigned char>(folded[i])) != 0;
        if (is_space) {
            if (start != std::string::npos) {
                append_token(std::string_view(folded).substr(start, i - start), tokens);
                start = std::string::npos;
            }
        } else if (start == std::string::npos) {
            start = i;
        }
    }
    return tokens;
}

std::string join_tokens(const TokenSeq& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

WerBreakdown wer_positional(const TokenSeq& hyp, const TokenSeq& ref) {
    if (ref.empty()) {
        throw DataError("empty reference");
    }
    WerBreakdown b;
    b.mode = WerMode::positional;
    b.n_ref = ref.size();

    const std::size_t common = std::min(hyp.size(), ref.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (hyp[i] != ref[i]) ++b.substitutions;
    }
    if (hyp.size() > ref.size()) {
        b.insertions = hyp.size() - ref.size();
    } else {
        b.deletions = ref.size() - hyp.size();
    }
    b.wer = static_cast<double>(b.errors()) / static_cast<double>(b.n_ref);
    return b;
}

WerResult wer_levenshtein(const TokenSeq& hyp, const TokenSeq& ref) {
    if (ref.empty()) {
        throw DataError("empty reference");
    }
    const std::size_t lh = hyp.size();
    const std::size_t lr = ref.size();

    // dist[i][j]: edit distance between hyp[0..i) and ref[0..j).
    std::vector<std::uint32_t> dist((lh + 1) * (lr + 1));
    auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return dist[i * (lr + 1) + j]; };
    for (std::size_t i = 0; i <= lh; ++i) at(i, 0) = static_cast<std::uint32_t>(i);
    for (std::size_t j = 0; j <= lr; ++j) at(0, j) = static_cast<std::uint32_t>(j);
    for (std::size_t i = 1; i <= lh; ++i) {
        for (std::size_t j = 1; j <= lr; ++j) {
            std::uint32_t diag = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
            std::uint32_t del = at(i, j - 1) + 1; // ref token unmatched
            std::uint32_t ins = at(i - 1, j) + 1; // hyp token extra
            at(i, j) = std::min({diag, del, ins});
        }
    }

    // Backtrace with tie preference match > substitute > deletion > insertion.
    Alignment alignment;
    alignment.reserve(lh + lr);
    std::size_t i = lh, j = lr;
    WerResult result;
    WerBreakdown& b = result.breakdown;
    b.mode = WerMode::levenshtein;
    b.n_ref = lr;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && hyp[i - 1] == ref[j - 1] && at(i, j) == at(i - 1, j - 1)) {
            alignment.push_back({EditOp::match, static_cast<int>(i - 1), static_cast<int>(j - 1)});
            --i; --j;
        } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
            alignment.push_back({EditOp::substitute, static_cast<int>(i - 1), static_cast<int>(j - 1)});
            ++b.substitutions;
            --i; --j;
        } else if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
            alignment.push_back({EditOp::deletion, -1, static_cast<int>(j - 1)});
            ++b.deletions;
            --j;
        } else {
            alignment.push_back({EditOp::insertion, static_cast<int>(i - 1), -1});
            ++b.insertions;
            --i;
        }
    }
    std::reverse(alignment.begin(), alignment.end());
    result.alignment = std::move(alignment);
    b.wer = static_cast<double>(b.errors()) / static_cast<double>(b.n_ref);
    return result;
}

TokenSeq replay_alignment(const Alignment& alignment, const TokenSeq& hyp, const TokenSeq& ref) {
    TokenSeq out;
    out.reserve(ref.size());
    for (const AlignmentStep& step : alignment) {
        switch (step.op) {
            case EditOp::match:
                out.push_back(hyp.at(static_cast<std::size_t>(step.hyp_index)));
                break;
            case EditOp::substitute:
            case EditOp::deletion:
                out.push_back(ref.at(static_cast<std::size_t>(step.ref_index)));
                break;
            case EditOp::insertion:
                break; // hypothesis token dropped
        }
    }
    return out;
}

CorpusWer corpus_wer(std::span<const std::pair<TokenSeq, TokenSeq>> hyp_ref_pairs, WerMode mode) {
    if (hyp_ref_pairs.empty()) {
        throw DataError("empty pair list");
    }
    CorpusWer agg;
    agg.totals.mode = mode;
    double wer_sum = 0.0;
    for (const auto& [hyp, ref] : hyp_ref_pairs) {
        WerBreakdown b = mode == WerMode::positional ? wer_positional(hyp, ref)
                                                     : wer_levenshtein(hyp, ref).breakdown;
        agg.totals.substitutions += b.substitutions;
        agg.totals.deletions += b.deletions;
        agg.totals.insertions += b.insertions;
        agg.totals.n_ref += b.n_ref;
        wer_sum += b.wer;
        agg.per_pair.push_back(b);
    }
    agg.pooled = static_cast<double>(agg.totals.errors()) / static_cast<double>(agg.totals.n_ref);
    agg.mean_per_utterance = wer_sum / static_cast<double>(hyp_ref_pairs.size());
    agg.totals.wer = agg.pooled;
    return agg;
}

const char* wer_mode_name(WerMode mode) {
    return mode == WerMode::positional ? "positional" : "levenshtein";
}

const char* edit_op_name(EditOp op) {
    switch (op) {
        case EditOp::match: return "match";
        case EditOp::substitute: return "substitute";
        case EditOp::deletion: return "delete";
        case EditOp::insertion: return "insert";
    }
    return "unknown";
}

} // namespace patwa
