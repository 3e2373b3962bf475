#include "sigver/vlm_client.hpp"

#include "sigver/errors.hpp"
#include "sigver/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

namespace sigver {

std::string verdict_text(Verdict v) {
    return v == Verdict::SameIdentity ? kSameIdentityText : kDifferentIdentityText;
}

std::string PromptBundle::digest() const {
    std::vector<std::uint8_t> buf;
    const auto put = [&buf](std::string_view s) {
        const std::string len = std::to_string(s.size()) + ":";
        buf.insert(buf.end(), len.begin(), len.end());
        buf.insert(buf.end(), s.begin(), s.end());
    };
    put("system");
    put(system_text);
    put("user");
    put(user_text);
    put("decoding");
    put(format_double(decoding.temperature) + "/" + std::to_string(decoding.seed) + "/" +
        (decoding.want_logprobs ? "1" : "0"));
    for (const LabeledImage& img : images) {
        put(img.label);
        const std::string len = std::to_string(img.png.size()) + ":";
        buf.insert(buf.end(), len.begin(), len.end());
        buf.insert(buf.end(), img.png.begin(), img.png.end());
    }
    return sha256_hex(buf);
}

PromptBundle build_prompt(const std::vector<std::vector<std::uint8_t>>& pair_pngs,
                          const PromptConfig& cfg) {
    if (pair_pngs.size() != 1 && pair_pngs.size() != 2)
        throw ConfigInvalid("build_prompt: expected 1 or 2 images, got " +
                            std::to_string(pair_pngs.size()));

    PromptBundle bundle;
    bundle.decoding = cfg.decoding;
    bundle.system_text =
        "You are a Forensic Document Examiner specializing in handwritten signature "
        "verification. You will compare a Reference signature with a Questioned signature "
        "and decide whether they were written by the same person.\n"
        "\n"
        "The images are AI-generated renderings of signature strokes. This labeling is a "
        "technical processing note only; it carries no information about whether the "
        "signatures are authentic or forged.\n"
        "\n"
        "Examine stroke shapes, proportions, slant, connections between letters, line "
        "quality, and pen pressure where stroke darkness encodes it.\n"
        "\n"
        "Respond with a single strict JSON object and nothing else, using exactly these "
        "keys:\n"
        "  \"initial_verdict\": your immediate impression before any detailed analysis; "
        "must be exactly \"Same Identity\" or \"Different Identity\"\n"
        "  \"reasoning\": your step-by-step forensic analysis of the similarities and "
        "differences\n"
        "  \"final_verdict\": your decision after the reasoning step; must be exactly "
        "\"Same Identity\" or \"Different Identity\"\n"
        "  \"certainty\": an integer from 0 to 100 stating your confidence in the final "
        "verdict\n";

    if (pair_pngs.size() == 2) {
        bundle.user_text =
            "The first attached image is the Reference signature. The second attached image "
            "is the Questioned signature. Compare them and respond with the strict JSON "
            "object only.";
        bundle.images.push_back({"Reference", pair_pngs[0]});
        bundle.images.push_back({"Questioned", pair_pngs[1]});
    } else {
        bundle.user_text =
            "The attached image shows the Reference signature on the left and the "
            "Questioned signature on the right, separated by a blank column. Compare them "
            "and respond with the strict JSON object only.";
        bundle.images.push_back({"Reference|Questioned", pair_pngs[0]});
    }
    return bundle;
}

namespace {

// Lowercase, trim, collapse internal whitespace runs to one space.
std::string normalize_verdict_string(std::string_view s) {
    std::string out;
    bool in_space = true;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space)
                out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ')
        out.pop_back();
    return out;
}

Verdict verdict_from_string(std::string_view s) {
    const std::string norm = normalize_verdict_string(s);
    if (norm == "same identity")
        return Verdict::SameIdentity;
    if (norm == "different identity")
        return Verdict::DifferentIdentity;
    throw ResponseMalformed("verdict value '" + std::string(s) +
                            "' is not one of the two permitted identity strings");
}

// First balanced {...} object in raw, tolerating text and code fences around it.
std::string_view first_json_object(std::string_view raw) {
    const std::size_t open = raw.find('{');
    if (open == std::string_view::npos)
        throw ResponseMalformed("no JSON object in response: '" +
                                std::string(raw.substr(0, 120)) + "'");
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = open; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                in_string = false;
            continue;
        }
        if (c == '"')
            in_string = true;
        else if (c == '{')
            ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0)
                return raw.substr(open, i - open + 1);
        }
    }
    throw ResponseMalformed("unterminated JSON object: '" + std::string(raw.substr(open, 120)) +
                            "'");
}

// Strip surrounding whitespace and quote characters from a token.
std::string normalize_token(std::string_view tok) {
    std::size_t b = 0, e = tok.size();
    const auto is_junk = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '"' || c == '\'' ||
               c == '`';
    };
    while (b < e && is_junk(tok[b]))
        ++b;
    while (e > b && is_junk(tok[e - 1]))
        --e;
    return to_lower(tok.substr(b, e - b));
}

// Offset of the first character of the quoted value for `key`, or npos.
std::size_t value_start_offset(std::string_view raw, std::string_view key) {
    const std::string quoted = "\"" + std::string(key) + "\"";
    const std::size_t key_pos = raw.find(quoted);
    if (key_pos == std::string_view::npos)
        return std::string_view::npos;
    std::size_t i = key_pos + quoted.size();
    while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\n' || raw[i] == ':'))
        ++i;
    if (i >= raw.size() || raw[i] != '"')
        return std::string_view::npos;
    return i + 1;
}

} // namespace

VerdictJson parse_verdict_json(std::string_view raw) {
    const std::string_view fragment = first_json_object(raw);
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(fragment);
    } catch (const nlohmann::json::exception& e) {
        throw ResponseMalformed(std::string("unparseable JSON: ") + e.what() + ": '" +
                                std::string(fragment.substr(0, 120)) + "'");
    }
    if (!obj.is_object())
        throw ResponseMalformed("response JSON is not an object");
    if (!obj.contains("initial_verdict") || !obj.contains("final_verdict"))
        throw ResponseMalformed("missing verdict keys in: '" +
                                std::string(fragment.substr(0, 120)) + "'");
    if (!obj.contains("certainty") || !obj["certainty"].is_number())
        throw ResponseMalformed("missing or non-numeric certainty");

    VerdictJson v;
    if (!obj["initial_verdict"].is_string() || !obj["final_verdict"].is_string())
        throw ResponseMalformed("verdict values must be strings");
    v.initial_verdict = verdict_from_string(obj["initial_verdict"].get<std::string>());
    v.final_verdict = verdict_from_string(obj["final_verdict"].get<std::string>());
    const double c = obj["certainty"].get<double>();
    if (c != std::floor(c) || c < 0 || c > 100)
        throw ResponseMalformed("certainty " + format_double(c) + " outside integer 0..100");
    v.certainty = static_cast<int>(c);
    if (obj.contains("reasoning") && obj["reasoning"].is_string())
        v.reasoning = obj["reasoning"].get<std::string>();
    return v;
}

TokenLogProb extract_verdict_token(const VerificationExchange& exchange, VerdictSlot slot) {
    const auto& tokens = exchange.token_logprobs;
    if (tokens.empty())
        throw LogprobsUnavailable("no token logprobs recorded for pair " + exchange.pair_id);

    for (const TokenLogProb& t : tokens)
        if (t.position_tag == slot)
            return t;

    const std::string_view raw = exchange.raw_response_text;
    std::string concat;
    for (const TokenLogProb& t : tokens)
        concat += t.token_text;

    if (concat == raw || raw.find(concat) != std::string_view::npos) {
        // token stream reconstructs the text: align by character offset
        const std::size_t base = concat == raw ? 0 : raw.find(concat);
        const char* key = slot == VerdictSlot::InitialVerdict ? "initial_verdict" : "final_verdict";
        const std::size_t value_start = value_start_offset(raw, key);
        if (value_start == std::string_view::npos)
            throw TokenNotFound(std::string("could not locate the ") + key +
                                " value in the response text");
        std::size_t offset = base;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const std::size_t end = offset + tokens[i].token_text.size();
            if (offset <= value_start && value_start < end) {
                // skip pure-quote/whitespace tokens covering the value start
                for (std::size_t j = i; j < tokens.size(); ++j)
                    if (!normalize_token(tokens[j].token_text).empty())
                        return tokens[j];
                break;
            }
            offset = end;
        }
        throw TokenNotFound(std::string("no token aligns with the ") + key + " value");
    }

    // sparse stream (e.g. hand-authored cassette): match verdict words in order
    const std::size_t want_index = slot == VerdictSlot::InitialVerdict ? 0 : 1;
    std::size_t seen = 0;
    for (const TokenLogProb& t : tokens) {
        const std::string norm = normalize_token(t.token_text);
        if (norm == "same" || norm == "different") {
            if (seen == want_index)
                return t;
            ++seen;
        }
    }
    throw TokenNotFound("verdict token not present in sparse logprob stream");
}

VerificationExchange send(const PromptBundle& bundle, Transport& transport, std::string pair_id) {
    TransportReply reply = transport.exchange(bundle);
    if (reply.refusal)
        throw SafetyRefusal("provider declined the comparison" +
                            (pair_id.empty() ? std::string() : " for pair " + pair_id));

    VerdictJson verdicts;
    bool parsed = false;
    std::string first_error;
    try {
        verdicts = parse_verdict_json(reply.raw_text);
        parsed = true;
    } catch (const ResponseMalformed& e) {
        first_error = e.what();
    }
    if (!parsed) {
        // one bounded repair turn
        PromptBundle repair = bundle;
        repair.user_text += "\n\nYour previous reply was not a valid JSON object. Respond "
                            "again with the strict JSON object only.";
        TransportReply second;
        try {
            second = transport.exchange(repair);
        } catch (const CassetteMiss&) {
            // the recorded session ended malformed; report that, not the miss
            throw ResponseMalformed(first_error);
        }
        if (second.refusal)
            throw SafetyRefusal("provider declined the repair turn" +
                                (pair_id.empty() ? std::string() : " for pair " + pair_id));
        verdicts = parse_verdict_json(second.raw_text); // throws ResponseMalformed on failure
        reply = std::move(second);
    }

    VerificationExchange exchange;
    exchange.pair_id = std::move(pair_id);
    exchange.prompt_digest = bundle.digest();
    exchange.raw_response_text = reply.raw_text;
    exchange.verdicts = verdicts;
    if (reply.logprobs_supported)
        exchange.token_logprobs = std::move(reply.tokens);
    exchange.provider_tag = reply.provider_tag.empty() ? transport.tag() : reply.provider_tag;
    exchange.request_ms = reply.request_ms;
    return exchange;
}

TransportReply make_verdict_reply(Verdict initial, double initial_logprob, Verdict final,
                                  double final_logprob, int certainty,
                                  std::string_view reasoning, std::string_view provider_tag) {
    nlohmann::json obj;
    obj["initial_verdict"] = verdict_text(initial);
    obj["reasoning"] = std::string(reasoning);
    obj["final_verdict"] = verdict_text(final);
    obj["certainty"] = certainty;
    const std::string raw = obj.dump(2);

    TransportReply reply;
    reply.raw_text = raw;
    reply.provider_tag = std::string(provider_tag);

    // naive word tokenization whose concatenation reproduces the text
    std::vector<TokenLogProb> tokens;
    std::size_t i = 0;
    const auto is_word = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    };
    while (i < raw.size()) {
        std::size_t j = i;
        if (raw[j] == ' ' && j + 1 < raw.size() && is_word(raw[j + 1]))
            ++j; // BPE-style leading space
        if (j < raw.size() && is_word(raw[j])) {
            while (j < raw.size() && is_word(raw[j]))
                ++j;
        } else {
            j = i + 1;
        }
        tokens.push_back({raw.substr(i, j - i), -0.01, std::nullopt});
        i = j;
    }

    const auto set_logprob_at = [&](std::string_view key, double lp) {
        const std::size_t value_start = value_start_offset(raw, key);
        std::size_t offset = 0;
        for (TokenLogProb& t : tokens) {
            const std::size_t end = offset + t.token_text.size();
            if (offset <= value_start && value_start < end) {
                t.logprob = lp;
                return;
            }
            offset = end;
        }
    };
    set_logprob_at("initial_verdict", initial_logprob);
    set_logprob_at("final_verdict", final_logprob);
    reply.tokens = std::move(tokens);
    return reply;
}

} // namespace sigver
