#pragma once

// Chat-completions wire format helpers, split out of the live transport so
// request construction and response parsing are testable without a network.

#include "sigver/vlm_client.hpp"

#include <json.hpp>

namespace sigver {

// Messages array with the system prompt, the user text, and the PNGs as
// base64 data URLs; decoding params and the logprobs switch ride alongside.
nlohmann::json build_chat_request(const PromptBundle& bundle, const std::string& model);

// Reads choices[0]: message content, refusal markers (an explicit refusal
// field or a content_filter finish reason), and the token logprob stream.
TransportReply parse_chat_response(const nlohmann::json& response);

} // namespace sigver
