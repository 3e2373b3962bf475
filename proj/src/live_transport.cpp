#include "sigver/chat_api.hpp"
#include "sigver/errors.hpp"
#include "sigver/util.hpp"
#include "sigver/vlm_client.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>

namespace sigver {

nlohmann::json build_chat_request(const PromptBundle& bundle, const std::string& model) {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", bundle.user_text}});
    for (const LabeledImage& img : bundle.images) {
        const std::string url =
            "data:image/png;base64," +
            base64_encode(std::span<const std::uint8_t>(img.png.data(), img.png.size()));
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }

    nlohmann::json req;
    req["model"] = model;
    req["temperature"] = bundle.decoding.temperature;
    req["seed"] = bundle.decoding.seed;
    req["logprobs"] = bundle.decoding.want_logprobs;
    req["messages"] = nlohmann::json::array({
        nlohmann::json{{"role", "system"}, {"content", bundle.system_text}},
        nlohmann::json{{"role", "user"}, {"content", std::move(content)}},
    });
    return req;
}

TransportReply parse_chat_response(const nlohmann::json& response) {
    if (!response.contains("choices") || response["choices"].empty())
        throw TransportError("response has no choices: " + response.dump().substr(0, 200));
    const nlohmann::json& choice = response["choices"][0];
    const nlohmann::json& message = choice.at("message");

    TransportReply reply;
    if (response.contains("model"))
        reply.provider_tag = response["model"].get<std::string>();
    if ((message.contains("refusal") && !message["refusal"].is_null()) ||
        choice.value("finish_reason", std::string()) == "content_filter") {
        reply.refusal = true;
        if (message.contains("refusal") && message["refusal"].is_string())
            reply.raw_text = message["refusal"].get<std::string>();
        return reply;
    }
    if (message.contains("content") && message["content"].is_string())
        reply.raw_text = message["content"].get<std::string>();

    reply.logprobs_supported = false;
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
        reply.logprobs_supported = true;
        for (const auto& t : choice["logprobs"]["content"])
            reply.tokens.push_back(
                {t.at("token").get<std::string>(), t.at("logprob").get<double>(), std::nullopt});
    }
    return reply;
}

namespace {

struct ParsedUrl {
    bool https = true;
    std::string host_port; // scheme://host[:port] for httplib
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    ParsedUrl out;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        rest = url.substr(8);
        out.https = true;
    } else if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
        out.https = false;
    } else {
        throw TransportError("endpoint URL must start with http:// or https://: " + url);
    }
    const std::size_t slash = rest.find('/');
    const std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    out.host_port = (out.https ? "https://" : "http://") + host;
    return out;
}

class LiveTransport final : public Transport {
public:
    explicit LiveTransport(const LiveConfig& cfg) : cfg_(cfg), url_(parse_url(cfg.endpoint_url)) {
        if (cfg_.model.empty())
            throw TransportError("live transport needs a model name");
        const char* key = std::getenv(cfg_.credential_env.c_str());
        if (!key || !*key)
            throw TransportError("credential environment variable " + cfg_.credential_env +
                                 " is not set");
        credential_ = key;
    }

    TransportReply exchange(const PromptBundle& bundle) override {
        const nlohmann::json request = build_chat_request(bundle, cfg_.model);
        const std::string body = request.dump();

        InFlightSlot slot(*this);
        std::string last_error;
        for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
            if (attempt > 0) {
                const double delay = cfg_.backoff_base_ms * static_cast<double>(1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(delay)));
            }
            wait_for_rate_slot();

            httplib::Client client(url_.host_port);
            client.set_read_timeout(120, 0);
            client.set_connection_timeout(30, 0);
            httplib::Headers headers{{"Authorization", "Bearer " + credential_}};

            const auto started = std::chrono::steady_clock::now();
            auto res = client.Post(url_.path, headers, body, "application/json");
            const double elapsed_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          started)
                    .count();

            if (!res) {
                last_error = "connection failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue; // transient; retry with backoff
            }
            if (res->status != 200)
                throw TransportError("HTTP " + std::to_string(res->status) + ": " +
                                     res->body.substr(0, 300));
            nlohmann::json parsed;
            try {
                parsed = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw TransportError(std::string("response is not JSON: ") + e.what());
            }
            TransportReply reply = parse_chat_response(parsed);
            reply.request_ms = elapsed_ms;
            return reply;
        }
        throw TransportError("giving up after " + std::to_string(cfg_.max_attempts) +
                             " attempts; last error: " + last_error);
    }

    std::string tag() const override { return "live:" + cfg_.model; }

private:
    // bounded in-flight requests
    struct InFlightSlot {
        explicit InFlightSlot(LiveTransport& t) : transport(t) {
            std::unique_lock lock(t.mutex_);
            t.cv_.wait(lock, [&t] { return t.in_flight_ < t.cfg_.max_in_flight; });
            ++t.in_flight_;
        }
        ~InFlightSlot() {
            {
                std::lock_guard lock(transport.mutex_);
                --transport.in_flight_;
            }
            transport.cv_.notify_one();
        }
        LiveTransport& transport;
    };

    void wait_for_rate_slot() {
        using clock = std::chrono::steady_clock;
        while (true) {
            clock::time_point wake;
            {
                std::lock_guard lock(mutex_);
                const auto now = clock::now();
                while (!request_times_.empty() &&
                       now - request_times_.front() > std::chrono::minutes(1))
                    request_times_.pop_front();
                if (static_cast<int>(request_times_.size()) < cfg_.requests_per_minute) {
                    request_times_.push_back(now);
                    return;
                }
                wake = request_times_.front() + std::chrono::minutes(1);
            }
            std::this_thread::sleep_until(wake);
        }
    }

    LiveConfig cfg_;
    ParsedUrl url_;
    std::string credential_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    std::deque<std::chrono::steady_clock::time_point> request_times_;
};

} // namespace

std::unique_ptr<Transport> make_live_transport(const LiveConfig& cfg) {
    return std::make_unique<LiveTransport>(cfg);
}

} // namespace sigver
