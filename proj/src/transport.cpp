#include "sigver/errors.hpp"
#include "sigver/util.hpp"
#include "sigver/vlm_client.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <mutex>

#include <json.hpp>

namespace sigver {

namespace {

const char* slot_name(VerdictSlot slot) {
    return slot == VerdictSlot::InitialVerdict ? "initial" : "final";
}

VerdictSlot slot_from_name(std::string_view name) {
    if (name == "initial")
        return VerdictSlot::InitialVerdict;
    if (name == "final")
        return VerdictSlot::FinalVerdict;
    throw Error("unknown verdict slot tag '" + std::string(name) + "'");
}

nlohmann::json tokens_to_json(const std::vector<TokenLogProb>& tokens) {
    nlohmann::json arr = nlohmann::json::array();
    for (const TokenLogProb& t : tokens) {
        nlohmann::json o;
        o["token"] = t.token_text;
        o["logprob"] = t.logprob;
        if (t.position_tag)
            o["tag"] = slot_name(*t.position_tag);
        arr.push_back(std::move(o));
    }
    return arr;
}

std::vector<TokenLogProb> tokens_from_json(const nlohmann::json& arr) {
    std::vector<TokenLogProb> tokens;
    for (const auto& o : arr) {
        TokenLogProb t;
        t.token_text = o.at("token").get<std::string>();
        t.logprob = o.at("logprob").get<double>();
        if (o.contains("tag"))
            t.position_tag = slot_from_name(o["tag"].get<std::string>());
        tokens.push_back(std::move(t));
    }
    return tokens;
}

} // namespace

std::string cassette_entry_to_line(const CassetteEntry& entry) {
    nlohmann::json o;
    o["prompt_digest"] = entry.prompt_digest;
    o["bundle_summary"] = entry.bundle_summary_json.empty()
                              ? nlohmann::json::object()
                              : nlohmann::json::parse(entry.bundle_summary_json);
    o["raw_response_text"] = entry.raw_response_text;
    o["token_logprobs"] = tokens_to_json(entry.tokens);
    o["logprobs_supported"] = entry.logprobs_supported;
    o["refusal"] = entry.refusal;
    o["provider_tag"] = entry.provider_tag;
    return o.dump();
}

CassetteEntry cassette_entry_from_line(std::string_view line) {
    nlohmann::json o;
    try {
        o = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad cassette line: ") + e.what());
    }
    CassetteEntry entry;
    entry.prompt_digest = o.at("prompt_digest").get<std::string>();
    if (o.contains("bundle_summary"))
        entry.bundle_summary_json = o["bundle_summary"].dump();
    entry.raw_response_text = o.at("raw_response_text").get<std::string>();
    if (o.contains("token_logprobs"))
        entry.tokens = tokens_from_json(o["token_logprobs"]);
    entry.logprobs_supported = o.value("logprobs_supported", true);
    entry.refusal = o.value("refusal", false);
    entry.provider_tag = o.value("provider_tag", std::string());
    return entry;
}

std::vector<CassetteEntry> read_cassette(const std::string& path) {
    const std::string text = read_file_text(path);
    std::vector<CassetteEntry> entries;
    for (std::string_view line : split(text, '\n')) {
        line = trim(line);
        if (line.empty())
            continue;
        entries.push_back(cassette_entry_from_line(line));
    }
    return entries;
}

// ---------------------------------------------------------------------------
// Mock transport
// ---------------------------------------------------------------------------

namespace {

double unit_from_hash(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

class MockTransport final : public Transport {
public:
    explicit MockTransport(const MockPolicy& policy) : policy_(policy) {}

    TransportReply exchange(const PromptBundle& bundle) override {
        // hash only the parts the repair turn does not touch, so a pair keeps
        // its behavior through the retry
        std::uint64_t h = fnv1a64(bundle.system_text);
        for (const LabeledImage& img : bundle.images) {
            h = fnv1a64(img.label, h);
            h = fnv1a64(std::span<const std::uint8_t>(img.png.data(), img.png.size()), h);
        }
        std::uint64_t s = splitmix64(h ^ splitmix64(policy_.seed));
        const auto draw = [&s] {
            s = splitmix64(s);
            return unit_from_hash(s);
        };

        const double u_fail = draw();
        if (u_fail < policy_.p_malformed) {
            TransportReply reply;
            reply.raw_text = "On reflection the strokes look broadly comparable, though the "
                             "pressure profile is hard to read.";
            reply.logprobs_supported = true;
            reply.provider_tag = "mock";
            return reply;
        }
        if (u_fail < policy_.p_malformed + policy_.p_refusal) {
            TransportReply reply;
            reply.raw_text = "I can't assist with identifying or verifying people.";
            reply.refusal = true;
            reply.provider_tag = "mock";
            return reply;
        }

        const bool initial_same = draw() < policy_.p_same;
        const bool flip = draw() < 0.15;
        const bool final_same = flip ? !initial_same : initial_same;
        const double lp_initial = std::log(0.55 + 0.44 * draw());
        const double lp_final = std::log(0.60 + 0.39 * draw());
        const int certainty = static_cast<int>(std::lround(55.0 + 44.0 * draw()));
        TransportReply reply = make_verdict_reply(
            initial_same ? Verdict::SameIdentity : Verdict::DifferentIdentity, lp_initial,
            final_same ? Verdict::SameIdentity : Verdict::DifferentIdentity, lp_final, certainty,
            "visual stroke comparison", "mock");
        if (!bundle.decoding.want_logprobs) {
            reply.tokens.clear();
            reply.logprobs_supported = false;
        }
        return reply;
    }

    std::string tag() const override { return "mock"; }

private:
    MockPolicy policy_;
};

class ScriptedTransport final : public Transport {
public:
    explicit ScriptedTransport(std::vector<TransportReply> replies)
        : replies_(std::move(replies)) {}

    TransportReply exchange(const PromptBundle&) override {
        std::lock_guard lock(mutex_);
        if (next_ >= replies_.size())
            throw TransportError("scripted transport exhausted after " +
                                 std::to_string(replies_.size()) + " replies");
        return replies_[next_++];
    }

    std::string tag() const override { return "scripted"; }

private:
    std::vector<TransportReply> replies_;
    std::size_t next_ = 0;
    std::mutex mutex_;
};

class ReplayTransport final : public Transport {
public:
    explicit ReplayTransport(const std::string& path) : path_(path) {
        for (CassetteEntry& e : read_cassette(path))
            entries_[e.prompt_digest] = std::move(e); // last recording wins
    }

    TransportReply exchange(const PromptBundle& bundle) override {
        const std::string digest = bundle.digest();
        const auto it = entries_.find(digest);
        if (it == entries_.end())
            throw CassetteMiss("no entry for prompt digest " + digest + " in " + path_);
        const CassetteEntry& e = it->second;
        TransportReply reply;
        reply.raw_text = e.raw_response_text;
        reply.tokens = e.tokens;
        reply.logprobs_supported = e.logprobs_supported;
        reply.refusal = e.refusal;
        reply.provider_tag = e.provider_tag;
        return reply;
    }

    std::string tag() const override { return "replay"; }

private:
    std::string path_;
    std::map<std::string, CassetteEntry> entries_;
};

class RecordingTransport final : public Transport {
public:
    RecordingTransport(std::unique_ptr<Transport> inner, const std::string& path)
        : inner_(std::move(inner)), out_(path, std::ios::app) {
        if (!out_)
            throw Error("cannot open cassette for append: " + path);
    }

    TransportReply exchange(const PromptBundle& bundle) override {
        const TransportReply reply = inner_->exchange(bundle);
        CassetteEntry entry;
        entry.prompt_digest = bundle.digest();
        nlohmann::json summary;
        summary["n_images"] = bundle.images.size();
        nlohmann::json labels = nlohmann::json::array();
        for (const LabeledImage& img : bundle.images)
            labels.push_back(img.label);
        summary["image_labels"] = std::move(labels);
        summary["temperature"] = bundle.decoding.temperature;
        summary["seed"] = bundle.decoding.seed;
        summary["want_logprobs"] = bundle.decoding.want_logprobs;
        entry.bundle_summary_json = summary.dump();
        entry.raw_response_text = reply.raw_text;
        entry.tokens = reply.tokens;
        entry.logprobs_supported = reply.logprobs_supported;
        entry.refusal = reply.refusal;
        entry.provider_tag = reply.provider_tag;
        {
            std::lock_guard lock(mutex_);
            out_ << cassette_entry_to_line(entry) << '\n';
            out_.flush();
        }
        return reply;
    }

    std::string tag() const override { return inner_->tag() + "+record"; }

private:
    std::unique_ptr<Transport> inner_;
    std::ofstream out_;
    std::mutex mutex_;
};

} // namespace

std::unique_ptr<Transport> make_mock_transport(const MockPolicy& policy) {
    return std::make_unique<MockTransport>(policy);
}

std::unique_ptr<Transport> make_scripted_transport(std::vector<TransportReply> replies) {
    return std::make_unique<ScriptedTransport>(std::move(replies));
}

std::unique_ptr<Transport> make_replay_transport(const std::string& cassette_path) {
    return std::make_unique<ReplayTransport>(cassette_path);
}

std::unique_ptr<Transport> make_recording_transport(std::unique_ptr<Transport> inner,
                                                    const std::string& cassette_path) {
    return std::make_unique<RecordingTransport>(std::move(inner), cassette_path);
}

} // namespace sigver
