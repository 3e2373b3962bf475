#pragma once

#include "sigver/ingest.hpp"
#include "sigver/vlm_client.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sigver {

// Token vocabularies for the two verdict classes. Providers tokenize
// differently, so these are configuration; the defaults cover the leading
// word of each permitted verdict string.
struct TokenClassSets {
    std::set<std::string> same_tokens{"same"};
    std::set<std::string> diff_tokens{"different"};

    // lowercase + strip surrounding whitespace and quote characters
    static std::string normalize(std::string_view token);
    void validate() const; // disjoint and non-empty, else InvalidParams
};

enum class TokenClass { Same, Diff, Unknown };

TokenClass classify_token(std::string_view token_text, const TokenClassSets& sets);

// Similarity from a verdict token: exp(L) for the Same class, 1 - exp(L) for
// Diff, clamped to [0,1] against provider rounding pushing L above 0.
// Throws UnknownToken when the token is in neither class.
double score_from_logprob(const TokenLogProb& token, const TokenClassSets& sets);

// Similarity from the self-reported certainty: certainty/100, inverted when
// the final verdict is Different Identity so that 1.0 always means a genuine
// match. Throws RangeError outside 0..100.
double score_from_certainty(Verdict final_verdict, int certainty);

struct ScoreTriple {
    std::string pair_id;
    std::optional<double> s_v1; // initial-impression verdict token
    std::optional<double> s_v2; // reflective verdict token
    double s_text = 0;          // certainty channel; always computable from verdicts
    std::vector<std::string> warnings;
};

// s_v1/s_v2 from the initial/final verdict tokens (absent without logprobs or
// when token alignment fails, with a warning), s_text always from the parsed
// verdict + certainty.
ScoreTriple assemble_scores(const VerificationExchange& exchange, const TokenClassSets& sets);

// ---------------------------------------------------------------------------
// Scores CSV: header "pair_id,task,label,<channel...>", one row per pair,
// absent scores as empty fields. Shared by the VLM channels and s_dtw.
// ---------------------------------------------------------------------------

struct ScoreRow {
    std::string pair_id;
    TaskKind task = TaskKind::Task3Combined;
    PairLabel label = PairLabel::Unlabeled;
    std::map<std::string, std::optional<double>> channels;
    bool operator==(const ScoreRow&) const = default;
};

inline const std::vector<std::string> kCanonicalChannels{"s_v1", "s_v2", "s_text", "s_dtw"};

// Channels present anywhere in rows, canonical ones first, others appended
// alphabetically.
std::vector<std::string> collect_channels(const std::vector<ScoreRow>& rows);

std::string write_scores_csv(const std::vector<ScoreRow>& rows,
                             std::vector<std::string> channel_order = {});
std::vector<ScoreRow> parse_scores_csv(std::string_view text);

} // namespace sigver
