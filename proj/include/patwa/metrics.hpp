#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace patwa {

using TokenSeq = std::vector<std::string>;

// Normalize raw transcript text into scoring tokens: typographic quotes and
// dashes are folded to their ASCII equivalents, ASCII letters are lowercased,
// punctuation is stripped except apostrophes joining two word characters, and
// the result is split on whitespace. Idempotent: re-tokenizing the joined
// token sequence yields the same tokens.
TokenSeq tokenize(std::string_view text);

std::string join_tokens(const TokenSeq& tokens);

enum class WerMode {
    positional,  // index-by-index comparison plus a length-difference penalty
    levenshtein, // minimal uniform-cost edit distance
};

struct WerBreakdown {
    std::size_t substitutions = 0;
    std::size_t deletions = 0;  // reference words with no hypothesis counterpart
    std::size_t insertions = 0; // hypothesis words with no reference counterpart
    std::size_t n_ref = 0;
    double wer = 0.0; // (S + D + I) / n_ref; may exceed 1.0
    WerMode mode = WerMode::levenshtein;

    std::size_t errors() const { return substitutions + deletions + insertions; }
};

enum class EditOp { match, substitute, deletion, insertion };

// One step of an edit script. hyp_index / ref_index are -1 when the operation
// consumes no token on that side (deletion has no hyp token, insertion no ref
// token). Replaying the script over the hypothesis yields the reference.
struct AlignmentStep {
    EditOp op;
    int hyp_index;
    int ref_index;
};

using Alignment = std::vector<AlignmentStep>;

struct WerResult {
    WerBreakdown breakdown;
    Alignment alignment;
};

// The positional variant: words are compared index-by-index over the common
// prefix length and the length difference is counted as additional errors.
WerBreakdown wer_positional(const TokenSeq& hyp, const TokenSeq& ref);

// Standard WER via dynamic programming. Backtrace ties are broken in the
// fixed order match > substitute > deletion > insertion so alignments are
// reproducible.
WerResult wer_levenshtein(const TokenSeq& hyp, const TokenSeq& ref);

// Applies an edit script to the hypothesis. Used to verify alignments.
TokenSeq replay_alignment(const Alignment& alignment, const TokenSeq& hyp, const TokenSeq& ref);

enum class Aggregation { pooled, mean_per_utterance };

struct CorpusWer {
    double pooled = 0.0;             // sum of errors / sum of reference words
    double mean_per_utterance = 0.0; // arithmetic mean of per-pair WER
    WerBreakdown totals;
    std::vector<WerBreakdown> per_pair;

    double value(Aggregation agg) const {
        return agg == Aggregation::pooled ? pooled : mean_per_utterance;
    }
};

CorpusWer corpus_wer(std::span<const std::pair<TokenSeq, TokenSeq>> hyp_ref_pairs, WerMode mode);

const char* wer_mode_name(WerMode mode);
const char* edit_op_name(EditOp op);

} // namespace patwa
