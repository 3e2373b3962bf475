#pragma once

#include "sigver/dtw.hpp"
#include "sigver/eval.hpp"
#include "sigver/ingest.hpp"
#include "sigver/render.hpp"
#include "sigver/scoring.hpp"
#include "sigver/vlm_client.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>

namespace sigver {

// Exit code taxonomy shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;     // bad parameters / config
inline constexpr int kExitData = 3;      // unreadable or malformed input files
inline constexpr int kExitJoin = 4;      // scores/protocol join failure
inline constexpr int kExitTransport = 5; // total transport failure

enum class TransportKind { Live, Replay, Mock };

struct TransportConfig {
    TransportKind kind = TransportKind::Mock;
    MockPolicy mock;
    std::string cassette_path; // replay source; recording sink when record=true
    bool record = false;       // wrap the live transport in a cassette recorder
    LiveConfig live;
};

struct DatasetConfig {
    std::string protocol_path;
    std::string signatures_dir;
    ColumnSchema schema;
    // Task tag applied to every pair of this protocol; unset infers per pair
    // from the endpoint record kinds (stylus/stylus -> 1, finger/finger -> 2,
    // mixed -> 3).
    std::optional<TaskKind> task;
};

struct RunConfig {
    DatasetConfig dataset;
    RenderConfig render;
    PairLayout pair_layout = PairLayout::TwoAttachments;
    StrokeGapPolicy gap_policy;
    TransportConfig transport;
    PromptConfig prompt;
    TokenClassSets token_sets;
    std::string output_dir = "out";
    int workers = 4;
};

// Lossless config file form: run_config_from_json(run_config_to_json(c))
// reproduces c exactly.
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code and logs human output to `log`.
// ---------------------------------------------------------------------------

struct SynthOptions {
    SynthParams params;
    std::string out_dir;
};
int cmd_synth(const SynthOptions& options, std::ostream& log);

// Renders every signature referenced by the protocol to
// <output_dir>/images/<stem>.png, skipping files whose bytes are already
// current.
int cmd_render(const RunConfig& config, std::ostream& log);

struct RunSummary {
    int scored = 0;
    int malformed = 0;
    int refused = 0;
    int failed = 0;  // transport errors
    int skipped = 0; // already persisted before this run
    int processed() const { return scored + malformed + refused + failed; }
};

// One comparison batch: render, prompt, exchange, score. Exchanges append to
// <output_dir>/exchanges.jsonl as they complete (the resume log); scores.csv
// is rebuilt from all persisted exchanges at the end of the run.
RunSummary run_batch(const RunConfig& config, std::ostream& log);
int cmd_run(const RunConfig& config, std::ostream& log);

// DTW baseline scores for every pair, merged into scores.csv as channel
// s_dtw.
int cmd_dtw(const RunConfig& config, std::ostream& log);

struct EvalOptions {
    std::string scores_csv;
    std::string protocol_path;
    std::string out_dir;
    ReportFormat print_format = ReportFormat::MarkdownTable;
    std::optional<TaskKind> task; // fallback for protocol pairs without score rows
};
int cmd_eval(const EvalOptions& options, std::ostream& log);

// Shared by run/dtw: protocol + records, with per-pair task tags resolved.
Dataset load_dataset(const DatasetConfig& config);

} // namespace sigver
