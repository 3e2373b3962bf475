#pragma once

#include "sigver/render.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sigver {

enum class Verdict { SameIdentity, DifferentIdentity };
enum class VerdictSlot { InitialVerdict, FinalVerdict };

// Exact strings the prompt permits as verdict values.
inline constexpr const char* kSameIdentityText = "Same Identity";
inline constexpr const char* kDifferentIdentityText = "Different Identity";

struct DecodingParams {
    double temperature = 0.0;
    std::uint64_t seed = 42;
    bool want_logprobs = true;
    bool operator==(const DecodingParams&) const = default;
};

struct PromptConfig {
    DecodingParams decoding;
};

struct LabeledImage {
    std::string label; // "Reference" / "Questioned"
    std::vector<std::uint8_t> png;
};

struct PromptBundle {
    std::string system_text;
    std::string user_text;
    std::vector<LabeledImage> images;
    DecodingParams decoding;

    // Stable content hash over every field; cassette lookup key.
    std::string digest() const;
};

struct VerdictJson {
    Verdict initial_verdict = Verdict::DifferentIdentity;
    std::string reasoning;
    Verdict final_verdict = Verdict::DifferentIdentity;
    int certainty = 0; // 0..100
    bool operator==(const VerdictJson&) const = default;
};

struct TokenLogProb {
    std::string token_text;
    double logprob = 0; // natural log, <= 0 up to provider rounding
    std::optional<VerdictSlot> position_tag;
    bool operator==(const TokenLogProb&) const = default;
};

struct VerificationExchange {
    std::string pair_id;
    std::string prompt_digest;
    std::string raw_response_text;
    VerdictJson verdicts;
    std::vector<TokenLogProb> token_logprobs; // empty when the provider has none
    std::string provider_tag;
    double request_ms = 0;
};

// What a transport hands back before verdict parsing.
struct TransportReply {
    std::string raw_text;
    std::vector<TokenLogProb> tokens;
    bool logprobs_supported = true;
    bool refusal = false;
    std::string provider_tag;
    double request_ms = 0;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportReply exchange(const PromptBundle& bundle) = 0;
    virtual std::string tag() const = 0;
};

// Build the forensic examiner prompt around 1 (side-by-side) or 2 (reference
// + questioned) PNG attachments. The system text fixes the output contract:
// strict JSON with initial_verdict / reasoning / final_verdict / certainty,
// verdicts restricted to the two identity strings, and the task-neutral
// AI-generated labeling clause that keeps provider safety filters quiet.
PromptBundle build_prompt(const std::vector<std::vector<std::uint8_t>>& pair_pngs,
                          const PromptConfig& cfg);

// Extract and validate the first JSON object found in raw model output,
// tolerating code-fence wrappers. Verdict strings match case-insensitively
// after whitespace normalization. Throws ResponseMalformed.
VerdictJson parse_verdict_json(std::string_view raw);

// Locate the leading token of the requested verdict's JSON value. Explicitly
// tagged tokens win; otherwise tokens are aligned to the response text by
// cumulative offset, falling back to in-order matching when the stream does
// not reconstruct the text. Throws LogprobsUnavailable / TokenNotFound.
TokenLogProb extract_verdict_token(const VerificationExchange& exchange, VerdictSlot slot);

// Run one comparison through a transport: detects refusals, parses the
// verdict JSON (with a single "strict JSON only" repair turn on malformed
// output), and assembles the exchange. Throws TransportError, CassetteMiss,
// ResponseMalformed, SafetyRefusal.
VerificationExchange send(const PromptBundle& bundle, Transport& transport,
                          std::string pair_id = {});

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

struct MockPolicy {
    std::uint64_t seed = 42;
    double p_malformed = 0.0;
    double p_refusal = 0.0;
    double p_same = 0.5;
};

// Deterministic stand-in provider: verdicts, logprobs and failure modes are
// drawn from a hash of the stable bundle parts (system text + images) and the
// policy seed, so a given pair behaves identically across runs and a
// malformed response stays malformed through the repair turn.
std::unique_ptr<Transport> make_mock_transport(const MockPolicy& policy);

// Fixed reply sequence for tests; throws TransportError when exhausted.
std::unique_ptr<Transport> make_scripted_transport(std::vector<TransportReply> replies);

// Replies looked up by prompt digest from a cassette file; throws
// CassetteMiss naming the digest on a miss.
std::unique_ptr<Transport> make_replay_transport(const std::string& cassette_path);

// Decorator that appends every exchange of the inner transport to a cassette.
std::unique_ptr<Transport> make_recording_transport(std::unique_ptr<Transport> inner,
                                                    const std::string& cassette_path);

struct LiveConfig {
    std::string endpoint_url; // chat-completions style endpoint
    std::string model;
    std::string credential_env = "SIGVER_API_KEY"; // variable NAME; value never stored
    int max_in_flight = 4;
    int requests_per_minute = 60;
    int max_attempts = 5;
    double backoff_base_ms = 500;
    bool operator==(const LiveConfig&) const = default;
};

// HTTPS transport with bounded in-flight concurrency, a per-minute rate cap
// and exponential backoff on transient failures.
std::unique_ptr<Transport> make_live_transport(const LiveConfig& cfg);

// One cassette line. bundle_summary_json is informational (image labels,
// decoding params); lookup uses prompt_digest only. Credentials never appear.
struct CassetteEntry {
    std::string prompt_digest;
    std::string bundle_summary_json;
    std::string raw_response_text;
    std::vector<TokenLogProb> tokens;
    bool logprobs_supported = true;
    bool refusal = false;
    std::string provider_tag;
};

std::string cassette_entry_to_line(const CassetteEntry& entry);
CassetteEntry cassette_entry_from_line(std::string_view line);
std::vector<CassetteEntry> read_cassette(const std::string& path);

// Helper for tests and fixtures: a well-formed verdict reply whose token
// stream is a naive whitespace/word tokenization of the response text, with
// the two verdict leading tokens carrying the given logprobs.
TransportReply make_verdict_reply(Verdict initial, double initial_logprob, Verdict final,
                                  double final_logprob, int certainty,
                                  std::string_view reasoning = "stroke comparison",
                                  std::string_view provider_tag = "scripted");

std::string verdict_text(Verdict v);

} // namespace sigver
