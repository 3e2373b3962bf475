// Acceptance suite. Each numbered criterion runs at its stated tolerance and
// prints exactly one PASS/FAIL line; the process exits nonzero if any fail.
//
//   ./sigver_acceptance <tests/data dir>

#include "sigver/cli.hpp"
#include "sigver/errors.hpp"
#include "sigver/util.hpp"

#include "oracles.hpp"
#include "replay_fixture.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace sigver;

namespace {

struct Checker {
    std::vector<std::string> failures;
    void require(bool ok, const std::string& what) {
        if (!ok)
            failures.push_back(what);
    }
};

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sigver_acc_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = {}) const {
        return sub.empty() ? path.string() : (path / sub).string();
    }
};

fs::path g_data_dir;
bool g_all_passed = true;

void run_criterion(int id, const std::string& name, double budget_seconds,
                   const std::function<void(Checker&)>& body) {
    Checker checker;
    const auto started = std::chrono::steady_clock::now();
    try {
        body(checker);
    } catch (const std::exception& e) {
        checker.failures.push_back(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (budget_seconds > 0 && elapsed > budget_seconds)
        checker.failures.push_back("runtime " + format_double(elapsed) + "s exceeds " +
                                   format_double(budget_seconds) + "s budget");
    const bool passed = checker.failures.empty();
    g_all_passed = g_all_passed && passed;
    std::printf("%s  criterion %d: %s (%.2fs)\n", passed ? "PASS" : "FAIL", id, name.c_str(),
                elapsed);
    for (const std::string& f : checker.failures)
        std::printf("      - %s\n", f.c_str());
    std::fflush(stdout);
}

const TokenClassSets kSets;

// -------------------------------------------------------------------------
// 1: Eq. 1 unit suite
// -------------------------------------------------------------------------
void criterion_eq1(Checker& c) {
    Rng rng(1001);
    std::vector<double> logprobs;
    for (int i = 0; i < 1000; ++i) {
        const double l = -30.0 * rng.uniform();
        logprobs.push_back(l);
        const bool is_same = rng.uniform() < 0.5;
        const TokenLogProb token{is_same ? "Same" : "Different", l, std::nullopt};
        const double score = score_from_logprob(token, kSets);
        const double closed = is_same ? std::exp(l) : 1.0 - std::exp(l);
        c.require(std::abs(score - closed) <= 1e-12,
                  "closed form mismatch at L=" + format_double(l));
        // complementarity holds exactly for every sampled L
        const double same = score_from_logprob({"same", l, std::nullopt}, kSets);
        const double diff = score_from_logprob({"different", l, std::nullopt}, kSets);
        c.require(same + diff == 1.0, "complementarity broken at L=" + format_double(l));
        c.require(score >= 0.0 && score <= 1.0, "score outside [0,1]");
    }
    std::sort(logprobs.begin(), logprobs.end());
    for (std::size_t i = 1; i < logprobs.size(); ++i) {
        const double lo = logprobs[i - 1], hi = logprobs[i];
        if (std::exp(lo) == std::exp(hi))
            continue;
        const double same_lo = score_from_logprob({"same", lo, std::nullopt}, kSets);
        const double same_hi = score_from_logprob({"same", hi, std::nullopt}, kSets);
        const double diff_lo = score_from_logprob({"different", lo, std::nullopt}, kSets);
        const double diff_hi = score_from_logprob({"different", hi, std::nullopt}, kSets);
        c.require(same_lo < same_hi, "same-class score not strictly increasing in L");
        c.require(diff_lo > diff_hi, "diff-class score not strictly decreasing in L");
    }
}

// -------------------------------------------------------------------------
// 2: EER sweep equals the O(n^2) brute-force oracle
// -------------------------------------------------------------------------
void criterion_eer_oracle(Checker& c) {
    Rng rng(2002);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> genuine, impostor;
        const auto ng = static_cast<std::size_t>(rng.uniform_int(1, 200));
        const auto ni = static_cast<std::size_t>(rng.uniform_int(1, 200));
        for (std::size_t i = 0; i < ng; ++i) {
            double v = rng.uniform(0.15, 1.0);
            if (rng.uniform() < 0.35)
                v = std::round(v * 25.0) / 25.0; // inject ties
            genuine.push_back(v);
        }
        for (std::size_t i = 0; i < ni; ++i) {
            double v = rng.uniform(0.0, 0.85);
            if (rng.uniform() < 0.35)
                v = std::round(v * 25.0) / 25.0;
            impostor.push_back(v);
        }
        const EerResult sweep = compute_eer(genuine, impostor);
        const oracles::BruteEer brute = oracles::eer_brute_force(genuine, impostor);
        c.require(std::abs(sweep.eer_percent - brute.eer_percent) <= 1e-9,
                  "set " + std::to_string(rep) + ": sweep " + format_double(sweep.eer_percent) +
                      " vs brute " + format_double(brute.eer_percent));
    }
}

// -------------------------------------------------------------------------
// 3: DTW DP equals recursive path enumeration, exhaustively
// -------------------------------------------------------------------------
void criterion_dtw_oracle(Checker& c) {
    std::vector<std::vector<int>> all_series;
    for (int len = 1; len <= 6; ++len) {
        std::vector<int> digits(static_cast<std::size_t>(len), 0);
        while (true) {
            all_series.push_back(digits);
            int i = len - 1;
            while (i >= 0 && digits[static_cast<std::size_t>(i)] == 2) {
                digits[static_cast<std::size_t>(i)] = 0;
                --i;
            }
            if (i < 0)
                break;
            ++digits[static_cast<std::size_t>(i)];
        }
    }

    std::vector<FeatureSeries> as_features(all_series.size());
    for (std::size_t i = 0; i < all_series.size(); ++i)
        for (int v : all_series[i])
            as_features[i].rows.push_back({static_cast<double>(v)});

    const unsigned n_threads = std::max(2u, std::thread::hardware_concurrency());
    std::vector<std::string> first_failure(n_threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < all_series.size(); i += n_threads) {
                for (std::size_t j = 0; j < all_series.size(); ++j) {
                    const double dp = dtw_distance(as_features[i], as_features[j]).distance;
                    const double brute =
                        static_cast<double>(oracles::dtw_brute_force(all_series[i], all_series[j]));
                    if (dp != brute && first_failure[w].empty())
                        first_failure[w] = "pair (" + std::to_string(i) + "," +
                                           std::to_string(j) + "): dp " + format_double(dp) +
                                           " vs brute " + format_double(brute);
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (const std::string& f : first_failure)
        c.require(f.empty(), f);
}

// -------------------------------------------------------------------------
// 4: render determinism, golden image, binary finger strokes, monotonicity
// -------------------------------------------------------------------------
void criterion_render(Checker& c) {
    SynthParams params;
    params.seed = 1;
    params.n_subjects = 2;
    params.genuine_per_subject = 2;
    params.skilled_per_subject = 0;
    const Dataset d = synth_dataset(params);

    const SignatureRecord& stylus = d.records.at("u01_g01.txt");
    const RenderedImage once =
        render_signature(normalize_record(stylus), stylus.kind, RenderConfig{}, "u01_g01.txt");
    const RenderedImage twice =
        render_signature(normalize_record(stylus), stylus.kind, RenderConfig{}, "u01_g01.txt");
    const auto png_once = encode_png(once);
    c.require(once.pixels == twice.pixels, "two renders differ");
    c.require(png_once == encode_png(twice), "two encodings differ");

    const auto golden_path = g_data_dir / "golden" / "stylus_seed1.png";
    const auto golden = read_file_bytes(golden_path.string());
    c.require(png_once == golden, "render differs from committed golden image");

    // finger renders stay binary, checked through the encoded file
    const SignatureRecord& finger = d.records.at("u02_g01.txt");
    c.require(finger.kind == InputKind::Finger, "fixture subject u02 should be finger input");
    const auto decoded = oracles::png_decode_gray(
        encode_png(render_signature(normalize_record(finger), finger.kind, RenderConfig{})));
    std::set<std::uint8_t> values(decoded.pixels.begin(), decoded.pixels.end());
    for (std::uint8_t v : values)
        c.require(v == 0 || v == 255, "finger pixel value " + std::to_string(v));
    c.require(values.count(0) == 1, "finger render has no ink");

    // pressure monotonicity on 50 seeded single-stroke records
    Rng rng(4004);
    for (int rep = 0; rep < 50; ++rep) {
        NormalizedRecord high;
        const auto n = static_cast<std::size_t>(rng.uniform_int(5, 40));
        for (std::size_t i = 0; i < n; ++i)
            high.points.push_back({rng.uniform(), rng.uniform(), 0, rng.uniform(0.05, 1.0)});
        high.pen_strokes.push_back({0, n});
        NormalizedRecord low = high;
        const double shrink = rng.uniform(0.2, 0.95);
        for (auto& p : low.points)
            p.p *= shrink;
        const RenderedImage darker = render_signature(high, InputKind::Stylus, RenderConfig{});
        const RenderedImage lighter = render_signature(low, InputKind::Stylus, RenderConfig{});
        bool ok = true;
        for (std::size_t i = 0; i < darker.pixels.size(); ++i)
            ok = ok && darker.pixels[i] <= lighter.pixels[i];
        c.require(ok, "monotonicity violated at record " + std::to_string(rep));
    }
}

// -------------------------------------------------------------------------
// 5: S_text inversion table
// -------------------------------------------------------------------------
void criterion_s_text(Checker& c) {
    for (int certainty = 0; certainty <= 100; ++certainty) {
        const double same = score_from_certainty(Verdict::SameIdentity, certainty);
        const double diff = score_from_certainty(Verdict::DifferentIdentity, certainty);
        c.require(same == certainty / 100.0,
                  "Same Identity at certainty " + std::to_string(certainty));
        c.require(diff == 1.0 - certainty / 100.0,
                  "Different Identity at certainty " + std::to_string(certainty));
    }
}

// -------------------------------------------------------------------------
// 6: committed cassette replays into exactly the oracle-precomputed report
// -------------------------------------------------------------------------
void criterion_replay(Checker& c) {
    const fs::path replay_dir = g_data_dir / "replay";
    const auto cassette = read_cassette((replay_dir / "cassette.jsonl").string());
    c.require(cassette.size() >= 20,
              "cassette holds " + std::to_string(cassette.size()) + " exchanges, need >= 20");

    TempDir out;
    RunConfig config;
    config.dataset.protocol_path = (replay_dir / "protocol.txt").string();
    config.dataset.signatures_dir = (replay_dir / "signatures").string();
    config.output_dir = out.str("run");
    config.transport.kind = TransportKind::Replay;
    config.transport.cassette_path = (replay_dir / "cassette.jsonl").string();
    config.workers = 2;

    std::ostringstream log;
    const RunSummary summary = run_batch(config, log);
    const Dataset dataset = load_dataset(config.dataset);
    c.require(summary.scored == static_cast<int>(dataset.pairs.size()),
              "replay scored " + std::to_string(summary.scored) + " of " +
                  std::to_string(dataset.pairs.size()) + " pairs");

    // expected per-pair scores straight from the planned response table
    const auto plan = fixture::planned_responses(dataset.pairs.size());
    struct Expected {
        double s_v1, s_v2, s_text;
        TaskKind task;
        PairLabel label;
    };
    std::map<std::string, Expected> expected;
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
        const fixture::PlannedResponse& r = plan[i];
        expected[dataset.pairs[i].pair_id] = {
            fixture::expected_token_score(r.initial, r.lp_initial),
            fixture::expected_token_score(r.final, r.lp_final),
            fixture::expected_text_score(r.final, r.certainty),
            dataset.pairs[i].task,
            dataset.pairs[i].label,
        };
    }

    const auto rows = parse_scores_csv(read_file_text(out.str("run/scores.csv")));
    c.require(rows.size() == dataset.pairs.size(), "scores.csv row count mismatch");
    for (const ScoreRow& row : rows) {
        const Expected& e = expected.at(row.pair_id);
        c.require(row.channels.at("s_v1") == e.s_v1, "s_v1 mismatch at " + row.pair_id);
        c.require(row.channels.at("s_v2") == e.s_v2, "s_v2 mismatch at " + row.pair_id);
        c.require(row.channels.at("s_text") == e.s_text, "s_text mismatch at " + row.pair_id);
    }

    EvalOptions eval;
    eval.scores_csv = out.str("run/scores.csv");
    eval.protocol_path = config.dataset.protocol_path;
    eval.out_dir = out.str("report");
    std::ostringstream eval_log;
    c.require(cmd_eval(eval, eval_log) == kExitOk, "cmd_eval failed");
    const EvalReport report = report_from_json(read_file_text(out.str("report/report.json")));

    const auto channel_of = [](const Expected& e, const std::string& name) {
        return name == "s_v1" ? e.s_v1 : name == "s_v2" ? e.s_v2 : e.s_text;
    };
    for (TaskKind task :
         {TaskKind::Task1Stylus, TaskKind::Task2Finger, TaskKind::Task3Combined}) {
        for (Scenario scenario : {Scenario::Random, Scenario::Skilled, Scenario::All}) {
            for (const std::string channel : {"s_v1", "s_v2", "s_text"}) {
                std::vector<double> genuine, impostor;
                for (const auto& [id, e] : expected) {
                    if (task != TaskKind::Task3Combined && e.task != task)
                        continue;
                    const bool in_scope =
                        e.label == PairLabel::Genuine ||
                        (scenario != Scenario::Skilled && e.label == PairLabel::RandomForgery) ||
                        (scenario != Scenario::Random && e.label == PairLabel::SkilledForgery);
                    if (!in_scope)
                        continue;
                    (e.label == PairLabel::Genuine ? genuine : impostor)
                        .push_back(channel_of(e, channel));
                }
                const CellResult* cell = report.find(task, scenario, channel);
                const std::string where = "task " + task_name(task) + "/" +
                                          scenario_name(scenario) + "/" + channel;
                if (genuine.empty() || impostor.empty()) {
                    c.require(cell && !cell->populated, where + " should be unpopulated");
                    continue;
                }
                c.require(cell && cell->populated, where + " missing from report");
                if (!cell || !cell->populated)
                    continue;
                const oracles::BruteEer brute = oracles::eer_brute_force(genuine, impostor);
                c.require(cell->eer_percent == brute.eer_percent,
                          where + ": report " + format_double(cell->eer_percent) +
                              " != oracle " + format_double(brute.eer_percent));
                c.require(cell->n_genuine == static_cast<int>(genuine.size()) &&
                              cell->n_impostor == static_cast<int>(impostor.size()),
                          where + ": class counts drifted");
            }
        }
    }
}

// -------------------------------------------------------------------------
// 7: synthetic pipeline sanity for the DTW channel
// -------------------------------------------------------------------------
void criterion_pipeline_sanity(Checker& c) {
    TempDir dir;
    SynthOptions synth;
    synth.params.seed = 42;
    synth.params.n_subjects = 8;
    synth.out_dir = dir.str("data");
    std::ostringstream log;
    c.require(cmd_synth(synth, log) == kExitOk, "synth failed");

    RunConfig config;
    config.dataset.protocol_path = dir.str("data/protocol.txt");
    config.dataset.signatures_dir = dir.str("data/signatures");
    config.output_dir = dir.str("out");
    config.workers = 2;
    c.require(cmd_dtw(config, log) == kExitOk, "dtw failed");

    const auto rows = parse_scores_csv(read_file_text(dir.str("out/scores.csv")));
    const EvalReport report = breakdown(rows);
    for (TaskKind task :
         {TaskKind::Task1Stylus, TaskKind::Task2Finger, TaskKind::Task3Combined}) {
        const CellResult* random_cell = report.find(task, Scenario::Random, "s_dtw");
        const CellResult* skilled_cell = report.find(task, Scenario::Skilled, "s_dtw");
        if (!random_cell || !skilled_cell || !random_cell->populated ||
            !skilled_cell->populated)
            continue;
        const std::string where = "task " + task_name(task);
        c.require(random_cell->eer_percent <= skilled_cell->eer_percent,
                  where + ": random EER " + format_double(random_cell->eer_percent) +
                      " > skilled EER " + format_double(skilled_cell->eer_percent));
        c.require(random_cell->eer_percent <= 15.0,
                  where + ": random EER " + format_double(random_cell->eer_percent) + " > 15%");
    }
    const CellResult* combined = report.find(TaskKind::Task3Combined, Scenario::Random, "s_dtw");
    c.require(combined && combined->populated, "combined random cell missing");
}

// -------------------------------------------------------------------------
// 8: end-to-end byte determinism of synth -> render -> dtw -> eval
// -------------------------------------------------------------------------
void criterion_determinism(Checker& c) {
    TempDir a, b;
    for (const TempDir* dir : {&a, &b}) {
        std::ostringstream log;
        SynthOptions synth;
        synth.params.seed = 42;
        synth.params.n_subjects = 8;
        synth.out_dir = dir->str("data");
        c.require(cmd_synth(synth, log) == kExitOk, "synth failed");
        RunConfig config;
        config.dataset.protocol_path = dir->str("data/protocol.txt");
        config.dataset.signatures_dir = dir->str("data/signatures");
        config.output_dir = dir->str("out");
        config.workers = 2;
        c.require(cmd_render(config, log) == kExitOk, "render failed");
        c.require(cmd_dtw(config, log) == kExitOk, "dtw failed");
        EvalOptions eval;
        eval.scores_csv = dir->str("out/scores.csv");
        eval.protocol_path = dir->str("data/protocol.txt");
        eval.out_dir = dir->str("out/report");
        c.require(cmd_eval(eval, log) == kExitOk, "eval failed");
    }
    for (const std::string name :
         {"out/scores.csv", "out/report/report.csv", "out/report/report.json",
          "out/report/report.md", "out/images/u01_g01.png",
          "out/report/det/task3_all_s_dtw.csv"}) {
        c.require(fs::exists(a.str(name)) && fs::exists(b.str(name)), name + " missing");
        if (fs::exists(a.str(name)) && fs::exists(b.str(name)))
            c.require(read_file_bytes(a.str(name)) == read_file_bytes(b.str(name)),
                      name + " differs between identical runs");
    }
}

// -------------------------------------------------------------------------
// 9: failure accounting through mock malformed/refusal fractions
// -------------------------------------------------------------------------
void criterion_failure_accounting(Checker& c) {
    TempDir dir;
    std::ostringstream log;
    SynthOptions synth;
    synth.params.seed = 42;
    synth.params.n_subjects = 8;
    synth.out_dir = dir.str("data");
    c.require(cmd_synth(synth, log) == kExitOk, "synth failed");

    RunConfig config;
    config.dataset.protocol_path = dir.str("data/protocol.txt");
    config.dataset.signatures_dir = dir.str("data/signatures");
    config.output_dir = dir.str("out");
    config.workers = 2;
    config.transport.mock.p_malformed = 0.10;
    config.transport.mock.p_refusal = 0.05;

    const RunSummary summary = run_batch(config, log);
    const auto pairs = parse_comparison_list(read_file_text(config.dataset.protocol_path));
    c.require(summary.scored + summary.malformed + summary.refused ==
                  static_cast<int>(pairs.size()),
              "scored+malformed+refused != pair count");
    c.require(summary.failed == 0, "mock transport produced transport errors");
    c.require(summary.malformed > 0 && summary.refused > 0,
              "fractions produced no failures to account for");

    EvalOptions eval;
    eval.scores_csv = dir.str("out/scores.csv");
    eval.protocol_path = dir.str("data/protocol.txt");
    eval.out_dir = dir.str("out/report");
    std::ostringstream eval_log;
    c.require(cmd_eval(eval, eval_log) == kExitOk, "eval failed");
    const EvalReport report = report_from_json(read_file_text(dir.str("out/report/report.json")));
    const CellResult* cell = report.find(TaskKind::Task3Combined, Scenario::All, "s_text");
    c.require(cell != nullptr, "combined s_text cell missing");
    if (cell) {
        c.require(cell->n_excluded == summary.malformed + summary.refused,
                  "exclusions " + std::to_string(cell->n_excluded) + " != malformed+refused " +
                      std::to_string(summary.malformed + summary.refused));
        c.require(cell->n_genuine + cell->n_impostor + cell->n_excluded ==
                      static_cast<int>(pairs.size()),
                  "cell counts do not sum to the pair count");
    }
}

} // namespace

int main(int argc, char** argv) {
    g_data_dir = argc > 1 ? fs::path(argv[1]) : fs::path("tests/data");
    std::printf("acceptance suite (fixtures: %s)\n", g_data_dir.string().c_str());

    run_criterion(1, "Eq. 1 token-score closed form, complementarity, monotonicity", 1.0,
                  criterion_eq1);
    run_criterion(2, "EER sweep equals brute-force threshold oracle (1e-9)", 10.0,
                  criterion_eer_oracle);
    run_criterion(3, "DTW DP equals exhaustive path enumeration (exact)", 60.0,
                  criterion_dtw_oracle);
    run_criterion(4, "render determinism, golden PNG, binary finger, monotonicity", 0.0,
                  criterion_render);
    run_criterion(5, "S_text certainty table with Different-verdict inversion", 0.0,
                  criterion_s_text);
    run_criterion(6, "committed cassette replays to oracle-exact EER cells", 0.0,
                  criterion_replay);
    run_criterion(7, "synthetic pipeline sanity: random <= skilled, random <= 15%", 30.0,
                  criterion_pipeline_sanity);
    run_criterion(8, "byte-identical reports across two full pipeline runs", 0.0,
                  criterion_determinism);
    run_criterion(9, "failure accounting sums and eval exclusions match", 0.0,
                  criterion_failure_accounting);

    return g_all_passed ? 0 : 1;
}
