#pragma once

#include "sigver/ingest.hpp"
#include "sigver/scoring.hpp"

#include <string>
#include <vector>

namespace sigver {

struct LabeledScore {
    std::string pair_id;
    double score = 0;
    bool is_genuine = false;
    TaskKind task = TaskKind::Task3Combined;
};

struct DetPoint {
    double threshold = 0;
    double fmr = 0;  // forgeries scoring >= threshold
    double fnmr = 0; // genuines scoring < threshold
    bool operator==(const DetPoint&) const = default;
};

// DET curve over thresholds at every distinct score plus sentinels below the
// minimum and above the maximum. FMR is non-increasing and FNMR
// non-decreasing in threshold order. Throws DegenerateSet when either class
// is empty.
std::vector<DetPoint> compute_det(const std::vector<double>& genuine,
                                  const std::vector<double>& impostor);
std::vector<DetPoint> compute_det(const std::vector<LabeledScore>& scores);

struct EerResult {
    double eer_percent = 0;
    double threshold = 0;
};

// EER at the FMR/FNMR crossing: an exact tie wins outright, otherwise the two
// DET points bracketing the sign change of (fmr - fnmr) are linearly
// interpolated. Throws DegenerateSet.
EerResult compute_eer(const std::vector<double>& genuine, const std::vector<double>& impostor);
EerResult compute_eer(const std::vector<LabeledScore>& scores);

enum class Scenario { Random, Skilled, All };

struct CellResult {
    bool populated = false; // false when a class is missing (reported, not fatal)
    double eer_percent = 0;
    double eer_threshold = 0;
    int n_genuine = 0;
    int n_impostor = 0;
    int n_excluded = 0; // pairs in scope whose channel score was absent
    std::vector<DetPoint> det;
    bool operator==(const CellResult&) const = default;
};

struct ReportCell {
    TaskKind task = TaskKind::Task1Stylus;
    Scenario scenario = Scenario::All;
    std::string channel;
    CellResult result;
    bool operator==(const ReportCell&) const = default;
};

struct EvalReport {
    std::vector<ReportCell> cells; // ordered (task, scenario, channel)
    int n_unlabeled = 0;
    const CellResult* find(TaskKind task, Scenario scenario, const std::string& channel) const;
    bool operator==(const EvalReport&) const = default;
};

// Per-cell evaluation over the joined score rows: tasks 1 and 2 use their
// tagged rows, the combined task pools every row; Random pits genuines
// against random forgeries, Skilled against skilled, All against both.
// Unlabeled rows are skipped and counted.
EvalReport breakdown(const std::vector<ScoreRow>& rows, std::vector<std::string> channels = {});

enum class ReportFormat { Csv, Json, MarkdownTable };

// Byte-deterministic emission. Markdown mirrors the task-column layout with
// "--" for empty cells; CSV is a lossless flat dump with one row per DET
// point; JSON is a lossless nested dump (see report_from_json).
std::string emit_report(const EvalReport& report, ReportFormat format);
EvalReport report_from_json(std::string_view text);

std::string scenario_name(Scenario s);
Scenario scenario_from_name(std::string_view name);

} // namespace sigver
