#include "sigver/scoring.hpp"

#include "sigver/errors.hpp"
#include "sigver/util.hpp"

#include <algorithm>
#include <cmath>

namespace sigver {

std::string TokenClassSets::normalize(std::string_view token) {
    std::size_t b = 0, e = token.size();
    const auto is_junk = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '"' || c == '\'' ||
               c == '`';
    };
    while (b < e && is_junk(token[b]))
        ++b;
    while (e > b && is_junk(token[e - 1]))
        --e;
    return to_lower(token.substr(b, e - b));
}

void TokenClassSets::validate() const {
    if (same_tokens.empty() || diff_tokens.empty())
        throw InvalidParams("token class sets must be non-empty");
    for (const std::string& t : same_tokens)
        if (diff_tokens.count(t))
            throw InvalidParams("token '" + t + "' appears in both classes");
}

TokenClass classify_token(std::string_view token_text, const TokenClassSets& sets) {
    const std::string norm = TokenClassSets::normalize(token_text);
    if (sets.same_tokens.count(norm))
        return TokenClass::Same;
    if (sets.diff_tokens.count(norm))
        return TokenClass::Diff;
    return TokenClass::Unknown;
}

double score_from_logprob(const TokenLogProb& token, const TokenClassSets& sets) {
    const TokenClass cls = classify_token(token.token_text, sets);
    if (cls == TokenClass::Unknown)
        throw UnknownToken("token '" + token.token_text + "' is in neither verdict class");
    const double p = std::exp(token.logprob);
    const double score = cls == TokenClass::Same ? p : 1.0 - p;
    return std::clamp(score, 0.0, 1.0);
}

double score_from_certainty(Verdict final_verdict, int certainty) {
    if (certainty < 0 || certainty > 100)
        throw RangeError("certainty " + std::to_string(certainty) + " outside 0..100");
    const double c = certainty / 100.0;
    return final_verdict == Verdict::SameIdentity ? c : 1.0 - c;
}

ScoreTriple assemble_scores(const VerificationExchange& exchange, const TokenClassSets& sets) {
    sets.validate();
    ScoreTriple triple;
    triple.pair_id = exchange.pair_id;

    const auto token_score = [&](VerdictSlot slot) -> std::optional<double> {
        if (exchange.token_logprobs.empty())
            return std::nullopt; // provider without logprobs: absent, no warning
        const char* name = slot == VerdictSlot::InitialVerdict ? "s_v1" : "s_v2";
        try {
            return score_from_logprob(extract_verdict_token(exchange, slot), sets);
        } catch (const Error& e) {
            triple.warnings.push_back(std::string(name) + " unscoreable for pair " +
                                      exchange.pair_id + ": " + e.what());
            return std::nullopt;
        }
    };
    triple.s_v1 = token_score(VerdictSlot::InitialVerdict);
    triple.s_v2 = token_score(VerdictSlot::FinalVerdict);
    triple.s_text = score_from_certainty(exchange.verdicts.final_verdict,
                                         exchange.verdicts.certainty);
    return triple;
}

std::vector<std::string> collect_channels(const std::vector<ScoreRow>& rows) {
    std::set<std::string> present;
    for (const ScoreRow& row : rows)
        for (const auto& [name, _] : row.channels)
            present.insert(name);
    std::vector<std::string> ordered;
    for (const std::string& c : kCanonicalChannels)
        if (present.erase(c))
            ordered.push_back(c);
    ordered.insert(ordered.end(), present.begin(), present.end());
    return ordered;
}

std::string write_scores_csv(const std::vector<ScoreRow>& rows,
                             std::vector<std::string> channel_order) {
    if (channel_order.empty())
        channel_order = collect_channels(rows);
    std::string out = "pair_id,task,label";
    for (const std::string& c : channel_order)
        out += "," + c;
    out += '\n';
    for (const ScoreRow& row : rows) {
        out += row.pair_id + "," + task_name(row.task) + "," + label_name(row.label);
        for (const std::string& c : channel_order) {
            out += ',';
            const auto it = row.channels.find(c);
            if (it != row.channels.end() && it->second)
                out += format_double(*it->second);
        }
        out += '\n';
    }
    return out;
}

std::vector<ScoreRow> parse_scores_csv(std::string_view text) {
    const auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]).empty())
        throw EmptyFile("scores CSV has no header");
    const auto header = split(trim(lines[0]), ',');
    if (header.size() < 3 || header[0] != "pair_id" || header[1] != "task" ||
        header[2] != "label")
        throw MalformedLine(1, "scores CSV header must start with pair_id,task,label");
    std::vector<std::string> channels;
    for (std::size_t i = 3; i < header.size(); ++i)
        channels.emplace_back(header[i]);

    std::vector<ScoreRow> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::string_view line = trim(lines[li]);
        if (line.empty())
            continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3 + channels.size())
            throw MalformedLine(li + 1, "expected " + std::to_string(3 + channels.size()) +
                                            " fields, got " + std::to_string(fields.size()));
        ScoreRow row;
        row.pair_id = std::string(fields[0]);
        row.task = task_from_name(fields[1]);
        row.label = label_from_name(fields[2]);
        for (std::size_t c = 0; c < channels.size(); ++c) {
            const std::string_view field = trim(fields[3 + c]);
            if (field.empty())
                row.channels[channels[c]] = std::nullopt;
            else {
                const double v = parse_double(field);
                if (!std::isfinite(v))
                    throw MalformedLine(li + 1, "non-finite score");
                row.channels[channels[c]] = v;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace sigver
