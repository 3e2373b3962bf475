#include "sigver/cli.hpp"

#include "sigver/errors.hpp"
#include "sigver/util.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

namespace fs = std::filesystem;

namespace sigver {

// ---------------------------------------------------------------------------
// Config file form
// ---------------------------------------------------------------------------

namespace {

std::string column_name(Column c) {
    switch (c) {
    case Column::X: return "x";
    case Column::Y: return "y";
    case Column::T: return "t";
    case Column::P: return "p";
    case Column::PenState: return "pen";
    case Column::Ignore: return "skip";
    }
    return "skip";
}

Column column_from_name(std::string_view name) {
    const std::string n = to_lower(trim(name));
    if (n == "x") return Column::X;
    if (n == "y") return Column::Y;
    if (n == "t") return Column::T;
    if (n == "p") return Column::P;
    if (n == "pen") return Column::PenState;
    if (n == "skip") return Column::Ignore;
    throw InvalidParams("unknown column '" + n + "'");
}

std::string transport_kind_name(TransportKind k) {
    switch (k) {
    case TransportKind::Live: return "live";
    case TransportKind::Replay: return "replay";
    case TransportKind::Mock: return "mock";
    }
    return "mock";
}

TransportKind transport_kind_from_name(std::string_view name) {
    const std::string n = to_lower(trim(name));
    if (n == "live") return TransportKind::Live;
    if (n == "replay") return TransportKind::Replay;
    if (n == "mock") return TransportKind::Mock;
    throw InvalidParams("unknown transport '" + n + "'");
}

} // namespace

nlohmann::json run_config_to_json(const RunConfig& config) {
    nlohmann::json j;

    nlohmann::json columns = nlohmann::json::array();
    for (Column c : config.dataset.schema.column_order)
        columns.push_back(column_name(c));
    j["dataset"] = {
        {"protocol", config.dataset.protocol_path},
        {"signatures_dir", config.dataset.signatures_dir},
        {"task", config.dataset.task ? nlohmann::json(static_cast<int>(*config.dataset.task))
                                     : nlohmann::json(nullptr)},
        {"schema",
         {{"columns", std::move(columns)},
          {"count_header", config.dataset.schema.has_count_header},
          {"delimiter", config.dataset.schema.delimiter == ColumnSchema::Delimiter::Comma
                            ? "comma"
                            : "whitespace"}}},
    };
    j["render"] = {
        {"canvas_px", config.render.canvas_px},
        {"margin_fraction", config.render.margin_fraction},
        {"stroke_width_px", config.render.stroke_width_px},
        {"ink_floor", config.render.ink_floor},
        {"background_value", config.render.background_value},
        {"antialias", config.render.antialias},
    };
    j["pair_layout"] =
        config.pair_layout == PairLayout::SideBySide ? "side_by_side" : "two_attachments";
    j["gap_policy"] = {{"max_gap_ms", config.gap_policy.max_gap_ms}};
    j["transport"] = {
        {"kind", transport_kind_name(config.transport.kind)},
        {"cassette", config.transport.cassette_path},
        {"record", config.transport.record},
        {"mock",
         {{"seed", config.transport.mock.seed},
          {"p_malformed", config.transport.mock.p_malformed},
          {"p_refusal", config.transport.mock.p_refusal},
          {"p_same", config.transport.mock.p_same}}},
        {"live",
         {{"endpoint", config.transport.live.endpoint_url},
          {"model", config.transport.live.model},
          {"credential_env", config.transport.live.credential_env},
          {"max_in_flight", config.transport.live.max_in_flight},
          {"requests_per_minute", config.transport.live.requests_per_minute},
          {"max_attempts", config.transport.live.max_attempts},
          {"backoff_base_ms", config.transport.live.backoff_base_ms}}},
    };
    j["prompt"] = {
        {"temperature", config.prompt.decoding.temperature},
        {"seed", config.prompt.decoding.seed},
        {"want_logprobs", config.prompt.decoding.want_logprobs},
    };
    j["token_sets"] = {
        {"same", config.token_sets.same_tokens},
        {"diff", config.token_sets.diff_tokens},
    };
    j["output_dir"] = config.output_dir;
    j["workers"] = config.workers;
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig config;
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        config.dataset.protocol_path = d.value("protocol", std::string());
        config.dataset.signatures_dir = d.value("signatures_dir", std::string());
        if (d.contains("task") && !d["task"].is_null())
            config.dataset.task = task_from_name(std::to_string(d["task"].get<int>()));
        if (d.contains("schema")) {
            const auto& s = d["schema"];
            if (s.contains("columns")) {
                config.dataset.schema.column_order.clear();
                for (const auto& c : s["columns"])
                    config.dataset.schema.column_order.push_back(
                        column_from_name(c.get<std::string>()));
            }
            config.dataset.schema.has_count_header =
                s.value("count_header", config.dataset.schema.has_count_header);
            if (s.contains("delimiter"))
                config.dataset.schema.delimiter =
                    to_lower(s["delimiter"].get<std::string>()) == "comma"
                        ? ColumnSchema::Delimiter::Comma
                        : ColumnSchema::Delimiter::Whitespace;
        }
        config.dataset.schema.validate();
    }
    if (j.contains("render")) {
        const auto& r = j["render"];
        config.render.canvas_px = r.value("canvas_px", config.render.canvas_px);
        config.render.margin_fraction = r.value("margin_fraction", config.render.margin_fraction);
        config.render.stroke_width_px = r.value("stroke_width_px", config.render.stroke_width_px);
        config.render.ink_floor = r.value("ink_floor", config.render.ink_floor);
        config.render.background_value =
            r.value("background_value", config.render.background_value);
        config.render.antialias = r.value("antialias", config.render.antialias);
    }
    if (j.contains("pair_layout"))
        config.pair_layout = to_lower(j["pair_layout"].get<std::string>()) == "side_by_side"
                                 ? PairLayout::SideBySide
                                 : PairLayout::TwoAttachments;
    if (j.contains("gap_policy"))
        config.gap_policy.max_gap_ms =
            j["gap_policy"].value("max_gap_ms", config.gap_policy.max_gap_ms);
    if (j.contains("transport")) {
        const auto& t = j["transport"];
        if (t.contains("kind"))
            config.transport.kind = transport_kind_from_name(t["kind"].get<std::string>());
        config.transport.cassette_path = t.value("cassette", std::string());
        config.transport.record = t.value("record", false);
        if (t.contains("mock")) {
            const auto& m = t["mock"];
            config.transport.mock.seed = m.value("seed", config.transport.mock.seed);
            config.transport.mock.p_malformed =
                m.value("p_malformed", config.transport.mock.p_malformed);
            config.transport.mock.p_refusal =
                m.value("p_refusal", config.transport.mock.p_refusal);
            config.transport.mock.p_same = m.value("p_same", config.transport.mock.p_same);
        }
        if (t.contains("live")) {
            const auto& l = t["live"];
            config.transport.live.endpoint_url = l.value("endpoint", std::string());
            config.transport.live.model = l.value("model", std::string());
            config.transport.live.credential_env =
                l.value("credential_env", config.transport.live.credential_env);
            config.transport.live.max_in_flight =
                l.value("max_in_flight", config.transport.live.max_in_flight);
            config.transport.live.requests_per_minute =
                l.value("requests_per_minute", config.transport.live.requests_per_minute);
            config.transport.live.max_attempts =
                l.value("max_attempts", config.transport.live.max_attempts);
            config.transport.live.backoff_base_ms =
                l.value("backoff_base_ms", config.transport.live.backoff_base_ms);
        }
    }
    if (j.contains("prompt")) {
        const auto& p = j["prompt"];
        config.prompt.decoding.temperature =
            p.value("temperature", config.prompt.decoding.temperature);
        config.prompt.decoding.seed = p.value("seed", config.prompt.decoding.seed);
        config.prompt.decoding.want_logprobs =
            p.value("want_logprobs", config.prompt.decoding.want_logprobs);
    }
    if (j.contains("token_sets")) {
        const auto& t = j["token_sets"];
        if (t.contains("same"))
            config.token_sets.same_tokens =
                std::set<std::string>(t["same"].begin(), t["same"].end());
        if (t.contains("diff"))
            config.token_sets.diff_tokens =
                std::set<std::string>(t["diff"].begin(), t["diff"].end());
        config.token_sets.validate();
    }
    config.output_dir = j.value("output_dir", config.output_dir);
    config.workers = j.value("workers", config.workers);
    if (config.workers < 1)
        throw InvalidParams("workers must be >= 1");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParams("config " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Dataset loading and shared helpers
// ---------------------------------------------------------------------------

Dataset load_dataset(const DatasetConfig& config) {
    const std::string protocol_text = read_file_text(config.protocol_path);
    Dataset dataset;
    dataset.pairs =
        parse_comparison_list(protocol_text, config.task.value_or(TaskKind::Task3Combined));

    std::set<std::string> paths;
    for (const ComparisonPair& p : dataset.pairs) {
        paths.insert(p.reference_path);
        paths.insert(p.probe_path);
    }
    for (const std::string& path : paths) {
        const fs::path full = fs::path(config.signatures_dir) / path;
        dataset.records[path] =
            parse_signature_file(read_file_text(full.string()), config.schema, path);
    }
    if (config.task)
        dataset.recount_tasks();
    else
        assign_tasks_from_kinds(dataset);
    dataset.validate();
    return dataset;
}

namespace {

// Run jobs 0..n-1 on a small pool and hand results to `flush` strictly in
// index order as soon as each prefix completes (keeps output files ordered
// and resume-safe).
template <typename Result, typename Work, typename Flush>
void ordered_parallel_for(std::size_t n, int workers, Work&& work, Flush&& flush) {
    if (n == 0)
        return;
    std::atomic<std::size_t> next_job{0};
    std::mutex mutex;
    std::condition_variable cv;
    std::map<std::size_t, Result> ready;

    const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next_job.fetch_add(1);
                if (i >= n)
                    return;
                Result r = work(i);
                {
                    std::lock_guard lock(mutex);
                    ready.emplace(i, std::move(r));
                }
                cv.notify_one();
            }
        });
    }
    for (std::size_t want = 0; want < n; ++want) {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return ready.count(want) != 0; });
        Result r = std::move(ready.at(want));
        ready.erase(want);
        lock.unlock();
        flush(want, std::move(r));
    }
    for (std::thread& t : pool)
        t.join();
}

std::string image_name_for(const std::string& signature_path) {
    return fs::path(signature_path).stem().string() + ".png";
}

} // namespace

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(const SynthOptions& options, std::ostream& log) {
    Dataset dataset;
    try {
        dataset = synth_dataset(options.params);
    } catch (const InvalidParams& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    write_dataset(dataset, options.out_dir);

    std::map<PairLabel, int> label_counts;
    for (const ComparisonPair& p : dataset.pairs)
        ++label_counts[p.label];
    log << "wrote " << dataset.records.size() << " signature files and " << dataset.pairs.size()
        << " pairs to " << options.out_dir << "\n";
    log << "  genuine=" << label_counts[PairLabel::Genuine]
        << " skilled=" << label_counts[PairLabel::SkilledForgery]
        << " random=" << label_counts[PairLabel::RandomForgery] << "\n";
    for (const auto& [task, count] : dataset.task_counts)
        log << "  task " << task_name(task) << ": " << count << " pairs\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// render
// ---------------------------------------------------------------------------

int cmd_render(const RunConfig& config, std::ostream& log) {
    config.render.validate();
    std::vector<ComparisonPair> pairs;
    try {
        pairs = parse_comparison_list(read_file_text(config.dataset.protocol_path));
    } catch (const Error& e) {
        log << "error reading protocol: " << e.what() << "\n";
        return kExitData;
    }

    std::set<std::string> paths;
    for (const ComparisonPair& p : pairs) {
        paths.insert(p.reference_path);
        paths.insert(p.probe_path);
    }

    int rendered = 0, up_to_date = 0;
    std::vector<std::string> failures;
    for (const std::string& path : paths) {
        try {
            const fs::path full = fs::path(config.dataset.signatures_dir) / path;
            const SignatureRecord record =
                parse_signature_file(read_file_text(full.string()), config.dataset.schema, path);
            const NormalizedRecord normalized = normalize_record(record, config.gap_policy);
            const RenderedImage image =
                render_signature(normalized, record.kind, config.render, path);
            const std::vector<std::uint8_t> png = encode_png(image);
            const fs::path out = fs::path(config.output_dir) / "images" / image_name_for(path);
            if (fs::exists(out) && read_file_bytes(out.string()) == png) {
                ++up_to_date;
            } else {
                write_file_bytes(out.string(), png);
                ++rendered;
            }
        } catch (const Error& e) {
            failures.push_back(path + ": " + e.what());
        }
    }

    log << "rendered " << rendered << " image(s), " << up_to_date << " already up to date\n";
    if (!failures.empty()) {
        log << failures.size() << " file(s) failed:\n";
        for (const std::string& f : failures)
            log << "  " << f << "\n";
        return kExitData;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

namespace {

struct PairOutcome {
    std::string outcome; // scored | malformed | refused | transport_error
    VerificationExchange exchange;
    std::string error;
    bool reused = false; // replayed from the resume log, nothing to append
};

nlohmann::json exchange_to_json(const PairOutcome& o) {
    nlohmann::json j;
    j["pair_id"] = o.exchange.pair_id;
    j["outcome"] = o.outcome;
    j["prompt_digest"] = o.exchange.prompt_digest;
    j["provider_tag"] = o.exchange.provider_tag;
    j["request_ms"] = o.exchange.request_ms;
    if (o.outcome == "scored") {
        j["raw_response_text"] = o.exchange.raw_response_text;
        j["verdicts"] = {
            {"initial_verdict", verdict_text(o.exchange.verdicts.initial_verdict)},
            {"reasoning", o.exchange.verdicts.reasoning},
            {"final_verdict", verdict_text(o.exchange.verdicts.final_verdict)},
            {"certainty", o.exchange.verdicts.certainty},
        };
        nlohmann::json tokens = nlohmann::json::array();
        for (const TokenLogProb& t : o.exchange.token_logprobs) {
            nlohmann::json tok{{"token", t.token_text}, {"logprob", t.logprob}};
            if (t.position_tag)
                tok["tag"] = *t.position_tag == VerdictSlot::InitialVerdict ? "initial" : "final";
            tokens.push_back(std::move(tok));
        }
        j["token_logprobs"] = std::move(tokens);
    } else {
        j["error"] = o.error;
    }
    return j;
}

PairOutcome exchange_from_json(const nlohmann::json& j) {
    PairOutcome o;
    o.reused = true;
    o.outcome = j.at("outcome").get<std::string>();
    o.exchange.pair_id = j.at("pair_id").get<std::string>();
    o.exchange.prompt_digest = j.value("prompt_digest", std::string());
    o.exchange.provider_tag = j.value("provider_tag", std::string());
    o.exchange.request_ms = j.value("request_ms", 0.0);
    o.error = j.value("error", std::string());
    if (o.outcome == "scored") {
        o.exchange.raw_response_text = j.value("raw_response_text", std::string());
        const auto& v = j.at("verdicts");
        o.exchange.verdicts.initial_verdict =
            to_lower(v.at("initial_verdict").get<std::string>()) == "same identity"
                ? Verdict::SameIdentity
                : Verdict::DifferentIdentity;
        o.exchange.verdicts.final_verdict =
            to_lower(v.at("final_verdict").get<std::string>()) == "same identity"
                ? Verdict::SameIdentity
                : Verdict::DifferentIdentity;
        o.exchange.verdicts.reasoning = v.value("reasoning", std::string());
        o.exchange.verdicts.certainty = v.at("certainty").get<int>();
        if (j.contains("token_logprobs"))
            for (const auto& t : j["token_logprobs"]) {
                TokenLogProb tok;
                tok.token_text = t.at("token").get<std::string>();
                tok.logprob = t.at("logprob").get<double>();
                if (t.contains("tag"))
                    tok.position_tag = t["tag"].get<std::string>() == "initial"
                                           ? VerdictSlot::InitialVerdict
                                           : VerdictSlot::FinalVerdict;
                o.exchange.token_logprobs.push_back(std::move(tok));
            }
    }
    return o;
}

std::unique_ptr<Transport> make_transport(const TransportConfig& config) {
    switch (config.kind) {
    case TransportKind::Mock:
        return make_mock_transport(config.mock);
    case TransportKind::Replay:
        if (config.cassette_path.empty())
            throw InvalidParams("replay transport needs a cassette path");
        return make_replay_transport(config.cassette_path);
    case TransportKind::Live: {
        auto live = make_live_transport(config.live);
        if (config.record) {
            if (config.cassette_path.empty())
                throw InvalidParams("recording needs a cassette path");
            return make_recording_transport(std::move(live), config.cassette_path);
        }
        return live;
    }
    }
    throw InvalidParams("unknown transport kind");
}

// Rebuild scores.csv from the complete exchange map, preserving channels a
// previous dtw run may have added.
void write_scores_from_exchanges(const RunConfig& config, const Dataset& dataset,
                                 const std::map<std::string, PairOutcome>& outcomes,
                                 std::ostream& log) {
    const fs::path scores_path = fs::path(config.output_dir) / "scores.csv";
    std::map<std::string, ScoreRow> existing;
    std::vector<std::string> existing_order;
    if (fs::exists(scores_path)) {
        for (ScoreRow& row : parse_scores_csv(read_file_text(scores_path.string()))) {
            existing_order.push_back(row.pair_id);
            existing[row.pair_id] = std::move(row);
        }
    }

    std::vector<ScoreRow> rows;
    std::set<std::string> emitted;
    for (const ComparisonPair& pair : dataset.pairs) {
        ScoreRow row;
        const auto prev = existing.find(pair.pair_id);
        if (prev != existing.end())
            row = prev->second;
        row.pair_id = pair.pair_id;
        row.task = pair.task;
        row.label = pair.label;
        row.channels["s_v1"] = std::nullopt;
        row.channels["s_v2"] = std::nullopt;
        row.channels["s_text"] = std::nullopt;
        const auto it = outcomes.find(pair.pair_id);
        if (it != outcomes.end() && it->second.outcome == "scored") {
            const ScoreTriple triple = assemble_scores(it->second.exchange, config.token_sets);
            row.channels["s_v1"] = triple.s_v1;
            row.channels["s_v2"] = triple.s_v2;
            row.channels["s_text"] = triple.s_text;
            for (const std::string& w : triple.warnings)
                log << "warning: " << w << "\n";
        }
        rows.push_back(std::move(row));
        emitted.insert(pair.pair_id);
    }
    // keep rows for pairs outside this protocol untouched
    for (const std::string& id : existing_order)
        if (!emitted.count(id))
            rows.push_back(existing.at(id));

    write_file_text(scores_path.string(), write_scores_csv(rows));
}

} // namespace

RunSummary run_batch(const RunConfig& config, std::ostream& log) {
    config.render.validate();
    config.token_sets.validate();
    const Dataset dataset = load_dataset(config.dataset);
    if (dataset.pairs.empty())
        throw EmptyFile("protocol lists no pairs");

    std::unique_ptr<Transport> transport = make_transport(config.transport);

    // resume log
    const fs::path exchanges_path = fs::path(config.output_dir) / "exchanges.jsonl";
    std::map<std::string, PairOutcome> outcomes;
    if (fs::exists(exchanges_path)) {
        const std::string log_text = read_file_text(exchanges_path.string());
        for (std::string_view line : split(log_text, '\n')) {
            line = trim(line);
            if (line.empty())
                continue;
            PairOutcome o = exchange_from_json(nlohmann::json::parse(line));
            outcomes[o.exchange.pair_id] = std::move(o);
        }
    }

    // render every referenced signature once
    std::map<std::string, RenderedImage> images;
    for (const auto& [path, record] : dataset.records)
        images[path] = render_signature(normalize_record(record, config.gap_policy), record.kind,
                                        config.render, path);

    std::vector<const ComparisonPair*> todo;
    RunSummary summary;
    for (const ComparisonPair& pair : dataset.pairs) {
        if (outcomes.count(pair.pair_id))
            ++summary.skipped;
        else
            todo.push_back(&pair);
    }

    fs::create_directories(config.output_dir);
    std::ofstream exchange_log(exchanges_path, std::ios::app);
    if (!exchange_log)
        throw Error("cannot append to " + exchanges_path.string());

    const auto process = [&](std::size_t i) -> PairOutcome {
        const ComparisonPair& pair = *todo[i];
        const std::vector<RenderedImage> composed =
            compose_pair(images.at(pair.reference_path), images.at(pair.probe_path),
                         config.pair_layout);
        std::vector<std::vector<std::uint8_t>> pngs;
        pngs.reserve(composed.size());
        for (const RenderedImage& img : composed)
            pngs.push_back(encode_png(img));
        const PromptBundle bundle = build_prompt(pngs, config.prompt);

        PairOutcome out;
        out.exchange.pair_id = pair.pair_id;
        out.exchange.prompt_digest = bundle.digest();
        try {
            out.exchange = send(bundle, *transport, pair.pair_id);
            out.outcome = "scored";
        } catch (const SafetyRefusal& e) {
            out.outcome = "refused";
            out.error = e.what();
        } catch (const ResponseMalformed& e) {
            out.outcome = "malformed";
            out.error = e.what();
        } catch (const CassetteMiss& e) {
            out.outcome = "transport_error";
            out.error = e.what();
        } catch (const TransportError& e) {
            out.outcome = "transport_error";
            out.error = e.what();
        } catch (const std::exception& e) {
            // anything unexpected still lands in the accounting; a worker
            // thread must never die with an exception in flight
            out.outcome = "transport_error";
            out.error = std::string("unexpected: ") + e.what();
        }
        return out;
    };

    ordered_parallel_for<PairOutcome>(
        todo.size(), config.workers, process, [&](std::size_t, PairOutcome o) {
            exchange_log << exchange_to_json(o).dump() << '\n';
            exchange_log.flush();
            if (o.outcome == "scored")
                ++summary.scored;
            else if (o.outcome == "malformed")
                ++summary.malformed;
            else if (o.outcome == "refused")
                ++summary.refused;
            else
                ++summary.failed;
            outcomes[o.exchange.pair_id] = std::move(o);
        });

    write_scores_from_exchanges(config, dataset, outcomes, log);

    log << "pairs " << dataset.pairs.size() << ": scored " << summary.scored << ", malformed "
        << summary.malformed << ", refused " << summary.refused << ", failed " << summary.failed
        << ", previously done " << summary.skipped << "\n";
    return summary;
}

int cmd_run(const RunConfig& config, std::ostream& log) {
    try {
        const RunSummary summary = run_batch(config, log);
        if (summary.processed() > 0 && summary.failed == summary.processed()) {
            log << "error: every attempted pair failed at the transport\n";
            return kExitTransport;
        }
        return kExitOk;
    } catch (const TransportError& e) {
        log << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const InvalidParams& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigInvalid& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitData;
    }
}

// ---------------------------------------------------------------------------
// dtw
// ---------------------------------------------------------------------------

int cmd_dtw(const RunConfig& config, std::ostream& log) {
    Dataset dataset;
    try {
        dataset = load_dataset(config.dataset);
    } catch (const Error& e) {
        log << "error loading dataset: " << e.what() << "\n";
        return kExitData;
    }
    if (dataset.pairs.empty()) {
        log << "no pairs in protocol " << config.dataset.protocol_path << "\n";
        return kExitData;
    }

    // features are per record; compute once
    std::map<std::string, FeatureSeries> features;
    std::map<std::string, std::string> feature_errors;
    for (const auto& [path, record] : dataset.records) {
        try {
            features[path] = derive_features(normalize_record(record, config.gap_policy));
        } catch (const Error& e) {
            feature_errors[path] = e.what();
        }
    }

    struct DtwOutcome {
        std::optional<double> score;
        std::string error;
    };
    std::vector<DtwOutcome> results(dataset.pairs.size());
    ordered_parallel_for<DtwOutcome>(
        dataset.pairs.size(), config.workers,
        [&](std::size_t i) -> DtwOutcome {
            const ComparisonPair& pair = dataset.pairs[i];
            const auto bad_ref = feature_errors.find(pair.reference_path);
            if (bad_ref != feature_errors.end())
                return {std::nullopt, pair.reference_path + ": " + bad_ref->second};
            const auto bad_probe = feature_errors.find(pair.probe_path);
            if (bad_probe != feature_errors.end())
                return {std::nullopt, pair.probe_path + ": " + bad_probe->second};
            try {
                const DtwResult d =
                    dtw_distance(features.at(pair.reference_path), features.at(pair.probe_path));
                return {std::exp(-d.normalized_distance), {}};
            } catch (const std::exception& e) {
                return {std::nullopt, e.what()};
            }
        },
        [&](std::size_t i, DtwOutcome o) { results[i] = std::move(o); });

    const fs::path scores_path = fs::path(config.output_dir) / "scores.csv";
    std::map<std::string, ScoreRow> existing;
    std::vector<std::string> existing_order;
    if (fs::exists(scores_path)) {
        for (ScoreRow& row : parse_scores_csv(read_file_text(scores_path.string()))) {
            existing_order.push_back(row.pair_id);
            existing[row.pair_id] = std::move(row);
        }
    }

    int failed = 0;
    std::vector<ScoreRow> rows;
    std::set<std::string> emitted;
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
        const ComparisonPair& pair = dataset.pairs[i];
        ScoreRow row;
        const auto prev = existing.find(pair.pair_id);
        if (prev != existing.end())
            row = prev->second;
        row.pair_id = pair.pair_id;
        row.task = pair.task;
        row.label = pair.label;
        row.channels["s_dtw"] = results[i].score;
        if (!results[i].score) {
            ++failed;
            log << "warning: pair " << pair.pair_id << " unscoreable: " << results[i].error
                << "\n";
        }
        rows.push_back(std::move(row));
        emitted.insert(pair.pair_id);
    }
    for (const std::string& id : existing_order)
        if (!emitted.count(id))
            rows.push_back(existing.at(id));

    write_file_text(scores_path.string(), write_scores_csv(rows));
    log << "s_dtw scored " << (dataset.pairs.size() - failed) << "/" << dataset.pairs.size()
        << " pairs into " << scores_path.string() << "\n";
    return failed == static_cast<int>(dataset.pairs.size()) ? kExitData : kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const EvalOptions& options, std::ostream& log) {
    std::vector<ScoreRow> score_rows;
    std::vector<ComparisonPair> pairs;
    try {
        score_rows = parse_scores_csv(read_file_text(options.scores_csv));
        pairs = parse_comparison_list(read_file_text(options.protocol_path),
                                      options.task.value_or(TaskKind::Task3Combined));
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitData;
    }

    std::map<std::string, const ComparisonPair*> by_id;
    for (const ComparisonPair& p : pairs)
        by_id[p.pair_id] = &p;

    std::vector<std::string> orphans;
    std::map<std::string, ScoreRow*> row_by_id;
    for (ScoreRow& row : score_rows) {
        if (!by_id.count(row.pair_id))
            orphans.push_back(row.pair_id);
        row_by_id[row.pair_id] = &row;
    }
    if (!orphans.empty()) {
        log << "error: " << orphans.size()
            << " score row(s) have no matching protocol pair:";
        for (const std::string& id : orphans)
            log << " " << id;
        log << "\n";
        return kExitJoin;
    }

    // protocol is authoritative for labels; score rows carry the task tag the
    // pipeline assigned at run time
    std::vector<ScoreRow> joined;
    for (const ComparisonPair& pair : pairs) {
        const auto it = row_by_id.find(pair.pair_id);
        ScoreRow row;
        if (it != row_by_id.end())
            row = *it->second;
        else
            row.task = pair.task; // never run: counts as excluded everywhere
        row.pair_id = pair.pair_id;
        row.label = pair.label;
        joined.push_back(std::move(row));
    }

    const EvalReport report = breakdown(joined);

    const fs::path out(options.out_dir);
    write_file_text((out / "report.csv").string(), emit_report(report, ReportFormat::Csv));
    write_file_text((out / "report.json").string(), emit_report(report, ReportFormat::Json));
    write_file_text((out / "report.md").string(),
                    emit_report(report, ReportFormat::MarkdownTable));
    for (const ReportCell& cell : report.cells) {
        if (!cell.result.populated)
            continue;
        std::string det_csv = "fmr,fnmr\n";
        for (const DetPoint& p : cell.result.det)
            det_csv += format_double(p.fmr) + "," + format_double(p.fnmr) + "\n";
        const std::string name = "task" + task_name(cell.task) + "_" +
                                 scenario_name(cell.scenario) + "_" + cell.channel + ".csv";
        write_file_text((out / "det" / name).string(), det_csv);
    }

    log << emit_report(report, options.print_format);
    if (report.n_unlabeled > 0)
        log << "note: " << report.n_unlabeled << " unlabeled row(s) were not evaluated\n";
    return kExitOk;
}

} // namespace sigver
