// sigver - online signature verification harness
//
// synth   generate a deterministic synthetic dataset
// render  rasterize signatures referenced by a protocol to PNG
// run     drive comparisons through a VLM transport (mock/replay/live)
// dtw     score pairs with the DTW baseline verifier
// eval    compute EER/DET reports from a scores CSV

#include "sigver/cli.hpp"
#include "sigver/errors.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace sigver;

struct CommonFlags {
    std::string config_path;
    std::string protocol;
    std::string signatures;
    std::string out_dir;
    int task = 0; // 0 = infer from record kinds
    int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file (flags override it)");
    cmd->add_option("--protocol", flags.protocol, "comparison protocol file");
    cmd->add_option("--signatures", flags.signatures, "directory holding signature files");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--task", flags.task, "tag every pair with this task (1|2|3)")
        ->check(CLI::Range(1, 3));
    cmd->add_option("--workers", flags.workers, "worker threads");
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig config;
    if (!flags.config_path.empty())
        config = load_run_config(flags.config_path);
    if (!flags.protocol.empty())
        config.dataset.protocol_path = flags.protocol;
    if (!flags.signatures.empty())
        config.dataset.signatures_dir = flags.signatures;
    if (!flags.out_dir.empty())
        config.output_dir = flags.out_dir;
    if (flags.task != 0)
        config.dataset.task = static_cast<TaskKind>(flags.task);
    if (flags.workers != 0)
        config.workers = flags.workers;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"online signature verification harness"};
    app.require_subcommand(1);

    // --- synth ---
    SynthOptions synth;
    std::string synth_config;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    synth_cmd->add_option("--config", synth_config,
                          "JSON config; the dataset protocol's directory becomes the "
                          "default --out");
    synth_cmd->add_option("--seed", synth.params.seed, "generator seed");
    synth_cmd->add_option("--subjects", synth.params.n_subjects, "number of subjects");
    synth_cmd->add_option("--genuine", synth.params.genuine_per_subject,
                          "genuine samples per subject");
    synth_cmd->add_option("--skilled", synth.params.skilled_per_subject,
                          "skilled forgeries per subject");
    synth_cmd->add_option("--out", synth.out_dir, "output directory");

    // --- render ---
    CommonFlags render_flags;
    RenderConfig render_overrides;
    bool have_canvas = false, have_stroke = false, have_margin = false, have_floor = false;
    CLI::App* render_cmd = app.add_subcommand("render", "rasterize signatures to PNG");
    add_common(render_cmd, render_flags);
    render_cmd->add_option("--canvas", render_overrides.canvas_px, "canvas size in pixels")
        ->each([&](const std::string&) { have_canvas = true; });
    render_cmd->add_option("--stroke-width", render_overrides.stroke_width_px, "stroke width")
        ->each([&](const std::string&) { have_stroke = true; });
    render_cmd->add_option("--margin", render_overrides.margin_fraction, "margin fraction")
        ->each([&](const std::string&) { have_margin = true; });
    render_cmd->add_option("--ink-floor", render_overrides.ink_floor, "minimum ink opacity")
        ->each([&](const std::string&) { have_floor = true; });

    // --- run ---
    CommonFlags run_flags;
    std::string run_transport, run_cassette, run_layout;
    std::optional<std::uint64_t> run_mock_seed;
    CLI::App* run_cmd = app.add_subcommand("run", "drive comparisons through a VLM transport");
    add_common(run_cmd, run_flags);
    run_cmd->add_option("--transport", run_transport, "mock|replay|live");
    run_cmd->add_option("--cassette", run_cassette, "cassette path (replay/record)");
    run_cmd->add_option("--mock-seed", run_mock_seed, "mock transport seed");
    run_cmd->add_option("--layout", run_layout, "two_attachments|side_by_side");

    // --- dtw ---
    CommonFlags dtw_flags;
    CLI::App* dtw_cmd = app.add_subcommand("dtw", "score pairs with the DTW baseline");
    add_common(dtw_cmd, dtw_flags);

    // --- eval ---
    EvalOptions eval_options;
    std::string eval_format = "md";
    int eval_task = 0;
    CLI::App* eval_cmd = app.add_subcommand("eval", "compute EER/DET reports");
    eval_cmd->add_option("--scores", eval_options.scores_csv, "scores CSV")->required();
    eval_cmd->add_option("--protocol", eval_options.protocol_path, "protocol file")->required();
    eval_cmd->add_option("--out", eval_options.out_dir, "output directory")->required();
    eval_cmd->add_option("--format", eval_format, "stdout format: md|csv|json");
    eval_cmd->add_option("--task", eval_task, "fallback task for pairs without score rows")
        ->check(CLI::Range(1, 3));

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            if (synth.out_dir.empty() && !synth_config.empty()) {
                const RunConfig config = load_run_config(synth_config);
                synth.out_dir = std::filesystem::path(config.dataset.protocol_path)
                                    .parent_path()
                                    .string();
            }
            if (synth.out_dir.empty()) {
                std::cerr << "error: synth needs --out or --config\n";
                return kExitUsage;
            }
            return cmd_synth(synth, std::cout);
        }

        if (render_cmd->parsed()) {
            RunConfig config = resolve_config(render_flags);
            if (have_canvas)
                config.render.canvas_px = render_overrides.canvas_px;
            if (have_stroke)
                config.render.stroke_width_px = render_overrides.stroke_width_px;
            if (have_margin)
                config.render.margin_fraction = render_overrides.margin_fraction;
            if (have_floor)
                config.render.ink_floor = render_overrides.ink_floor;
            return cmd_render(config, std::cout);
        }

        if (run_cmd->parsed()) {
            RunConfig config = resolve_config(run_flags);
            if (!run_transport.empty()) {
                if (run_transport == "mock")
                    config.transport.kind = TransportKind::Mock;
                else if (run_transport == "replay")
                    config.transport.kind = TransportKind::Replay;
                else if (run_transport == "live")
                    config.transport.kind = TransportKind::Live;
                else
                    throw InvalidParams("unknown transport '" + run_transport + "'");
            }
            if (!run_cassette.empty())
                config.transport.cassette_path = run_cassette;
            if (run_mock_seed)
                config.transport.mock.seed = *run_mock_seed;
            if (!run_layout.empty())
                config.pair_layout = run_layout == "side_by_side" ? PairLayout::SideBySide
                                                                  : PairLayout::TwoAttachments;
            return cmd_run(config, std::cout);
        }

        if (dtw_cmd->parsed())
            return cmd_dtw(resolve_config(dtw_flags), std::cout);

        if (eval_cmd->parsed()) {
            if (eval_format == "csv")
                eval_options.print_format = ReportFormat::Csv;
            else if (eval_format == "json")
                eval_options.print_format = ReportFormat::Json;
            else
                eval_options.print_format = ReportFormat::MarkdownTable;
            if (eval_task != 0)
                eval_options.task = static_cast<TaskKind>(eval_task);
            return cmd_eval(eval_options, std::cout);
        }
    } catch (const InvalidParams& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigInvalid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
