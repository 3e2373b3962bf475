#include "sigver/eval.hpp"

#include "sigver/errors.hpp"
#include "sigver/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace sigver {

namespace {

void check_finite(const std::vector<double>& scores, const char* which) {
    for (double s : scores)
        if (!std::isfinite(s))
            throw Error(std::string(which) + " score is not finite");
}

} // namespace

std::vector<DetPoint> compute_det(const std::vector<double>& genuine,
                                  const std::vector<double>& impostor) {
    if (genuine.empty() || impostor.empty())
        throw DegenerateSet("need at least one genuine and one impostor score");
    check_finite(genuine, "genuine");
    check_finite(impostor, "impostor");

    std::vector<double> gen_sorted = genuine, imp_sorted = impostor;
    std::sort(gen_sorted.begin(), gen_sorted.end());
    std::sort(imp_sorted.begin(), imp_sorted.end());

    std::vector<double> thresholds;
    thresholds.reserve(gen_sorted.size() + imp_sorted.size() + 2);
    thresholds.insert(thresholds.end(), gen_sorted.begin(), gen_sorted.end());
    thresholds.insert(thresholds.end(), imp_sorted.begin(), imp_sorted.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), thresholds.front() - 1.0); // fmr 1, fnmr 0
    thresholds.push_back(thresholds.back() + 1.0);                   // fmr 0, fnmr 1

    const double n_gen = static_cast<double>(gen_sorted.size());
    const double n_imp = static_cast<double>(imp_sorted.size());
    std::vector<DetPoint> det;
    det.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto imp_below = std::lower_bound(imp_sorted.begin(), imp_sorted.end(), t);
        const auto gen_below = std::lower_bound(gen_sorted.begin(), gen_sorted.end(), t);
        DetPoint p;
        p.threshold = t;
        p.fmr = static_cast<double>(imp_sorted.end() - imp_below) / n_imp;
        p.fnmr = static_cast<double>(gen_below - gen_sorted.begin()) / n_gen;
        det.push_back(p);
    }
    return det;
}

std::vector<DetPoint> compute_det(const std::vector<LabeledScore>& scores) {
    std::vector<double> genuine, impostor;
    for (const LabeledScore& s : scores)
        (s.is_genuine ? genuine : impostor).push_back(s.score);
    return compute_det(genuine, impostor);
}

EerResult compute_eer(const std::vector<double>& genuine, const std::vector<double>& impostor) {
    const std::vector<DetPoint> det = compute_det(genuine, impostor);

    // walk toward the crossing of fmr (falling) and fnmr (rising)
    for (std::size_t i = 0; i < det.size(); ++i) {
        const double diff = det[i].fmr - det[i].fnmr;
        if (diff == 0.0)
            return {100.0 * det[i].fmr, det[i].threshold};
        if (diff < 0.0) {
            // crossed between i-1 and i; i > 0 because the low sentinel has diff 1
            const DetPoint& a = det[i - 1];
            const DetPoint& b = det[i];
            const double da = a.fmr - a.fnmr; // > 0
            const double db = b.fmr - b.fnmr; // < 0
            const double alpha = da / (da - db);
            const double eer = a.fmr + alpha * (b.fmr - a.fmr);
            const double threshold = a.threshold + alpha * (b.threshold - a.threshold);
            return {100.0 * eer, threshold};
        }
    }
    // unreachable: the high sentinel has fmr 0, fnmr 1
    throw Error("no FMR/FNMR crossing found");
}

EerResult compute_eer(const std::vector<LabeledScore>& scores) {
    std::vector<double> genuine, impostor;
    for (const LabeledScore& s : scores)
        (s.is_genuine ? genuine : impostor).push_back(s.score);
    return compute_eer(genuine, impostor);
}

const CellResult* EvalReport::find(TaskKind task, Scenario scenario,
                                   const std::string& channel) const {
    for (const ReportCell& c : cells)
        if (c.task == task && c.scenario == scenario && c.channel == channel)
            return &c.result;
    return nullptr;
}

EvalReport breakdown(const std::vector<ScoreRow>& rows, std::vector<std::string> channels) {
    if (channels.empty())
        channels = collect_channels(rows);

    EvalReport report;
    std::vector<const ScoreRow*> labeled;
    for (const ScoreRow& row : rows) {
        if (row.label == PairLabel::Unlabeled)
            ++report.n_unlabeled;
        else
            labeled.push_back(&row);
    }

    constexpr TaskKind tasks[] = {TaskKind::Task1Stylus, TaskKind::Task2Finger,
                                  TaskKind::Task3Combined};
    constexpr Scenario scenarios[] = {Scenario::Random, Scenario::Skilled, Scenario::All};

    for (TaskKind task : tasks) {
        for (Scenario scenario : scenarios) {
            for (const std::string& channel : channels) {
                ReportCell cell;
                cell.task = task;
                cell.scenario = scenario;
                cell.channel = channel;

                std::vector<double> genuine, impostor;
                for (const ScoreRow* row : labeled) {
                    // combined task pools every row
                    if (task != TaskKind::Task3Combined && row->task != task)
                        continue;
                    const bool in_scope =
                        row->label == PairLabel::Genuine ||
                        (scenario != Scenario::Skilled && row->label == PairLabel::RandomForgery) ||
                        (scenario != Scenario::Random && row->label == PairLabel::SkilledForgery);
                    if (!in_scope)
                        continue;
                    const auto it = row->channels.find(channel);
                    if (it == row->channels.end() || !it->second) {
                        ++cell.result.n_excluded;
                        continue;
                    }
                    (row->label == PairLabel::Genuine ? genuine : impostor).push_back(*it->second);
                }
                cell.result.n_genuine = static_cast<int>(genuine.size());
                cell.result.n_impostor = static_cast<int>(impostor.size());
                if (!genuine.empty() && !impostor.empty()) {
                    const EerResult eer = compute_eer(genuine, impostor);
                    cell.result.populated = true;
                    cell.result.eer_percent = eer.eer_percent;
                    cell.result.eer_threshold = eer.threshold;
                    cell.result.det = compute_det(genuine, impostor);
                }
                report.cells.push_back(std::move(cell));
            }
        }
    }
    return report;
}

namespace {

std::string eer_fixed(double percent) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", percent);
    return buf;
}

std::string emit_csv(const EvalReport& report) {
    std::string out = "task,scenario,channel,eer_percent,eer_threshold,n_genuine,n_impostor,"
                      "n_excluded,det_threshold,det_fmr,det_fnmr\n";
    for (const ReportCell& cell : report.cells) {
        const std::string prefix = task_name(cell.task) + "," + scenario_name(cell.scenario) +
                                   "," + cell.channel + ",";
        const CellResult& r = cell.result;
        const std::string counts = std::to_string(r.n_genuine) + "," +
                                   std::to_string(r.n_impostor) + "," +
                                   std::to_string(r.n_excluded);
        if (!r.populated) {
            out += prefix + ",," + counts + ",,,\n";
            continue;
        }
        const std::string summary =
            format_double(r.eer_percent) + "," + format_double(r.eer_threshold) + "," + counts;
        for (const DetPoint& p : r.det)
            out += prefix + summary + "," + format_double(p.threshold) + "," +
                   format_double(p.fmr) + "," + format_double(p.fnmr) + "\n";
    }
    return out;
}

std::string emit_markdown(const EvalReport& report) {
    std::string out;
    out += "| Scenario | Channel | Task 1 (Stylus) | Task 2 (Finger) | Task 3 (Combined) |\n";
    out += "|---|---|---|---|---|\n";
    constexpr Scenario scenarios[] = {Scenario::All, Scenario::Random, Scenario::Skilled};
    std::vector<std::string> channels;
    for (const ReportCell& c : report.cells)
        if (std::find(channels.begin(), channels.end(), c.channel) == channels.end())
            channels.push_back(c.channel);
    for (Scenario scenario : scenarios) {
        for (const std::string& channel : channels) {
            out += "| " + scenario_name(scenario) + " | " + channel + " |";
            for (TaskKind task :
                 {TaskKind::Task1Stylus, TaskKind::Task2Finger, TaskKind::Task3Combined}) {
                const CellResult* r = report.find(task, scenario, channel);
                out += " ";
                out += (r && r->populated) ? eer_fixed(r->eer_percent) : "--";
                out += " |";
            }
            out += "\n";
        }
    }
    return out;
}

nlohmann::json det_to_json(const std::vector<DetPoint>& det) {
    nlohmann::json arr = nlohmann::json::array();
    for (const DetPoint& p : det)
        arr.push_back(nlohmann::json::array({p.threshold, p.fmr, p.fnmr}));
    return arr;
}

std::string emit_json(const EvalReport& report) {
    nlohmann::json root;
    root["n_unlabeled"] = report.n_unlabeled;
    nlohmann::json cells = nlohmann::json::array();
    for (const ReportCell& cell : report.cells) {
        nlohmann::json o;
        o["task"] = static_cast<int>(cell.task);
        o["scenario"] = scenario_name(cell.scenario);
        o["channel"] = cell.channel;
        o["populated"] = cell.result.populated;
        o["n_genuine"] = cell.result.n_genuine;
        o["n_impostor"] = cell.result.n_impostor;
        o["n_excluded"] = cell.result.n_excluded;
        if (cell.result.populated) {
            o["eer_percent"] = cell.result.eer_percent;
            o["eer_threshold"] = cell.result.eer_threshold;
            o["det"] = det_to_json(cell.result.det);
        }
        cells.push_back(std::move(o));
    }
    root["cells"] = std::move(cells);
    return root.dump(2) + "\n";
}

} // namespace

std::string emit_report(const EvalReport& report, ReportFormat format) {
    switch (format) {
    case ReportFormat::Csv: return emit_csv(report);
    case ReportFormat::Json: return emit_json(report);
    case ReportFormat::MarkdownTable: return emit_markdown(report);
    }
    throw Error("unknown report format");
}

EvalReport report_from_json(std::string_view text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad report JSON: ") + e.what());
    }
    EvalReport report;
    report.n_unlabeled = root.value("n_unlabeled", 0);
    for (const auto& o : root.at("cells")) {
        ReportCell cell;
        cell.task = static_cast<TaskKind>(o.at("task").get<int>());
        cell.scenario = scenario_from_name(o.at("scenario").get<std::string>());
        cell.channel = o.at("channel").get<std::string>();
        cell.result.populated = o.at("populated").get<bool>();
        cell.result.n_genuine = o.at("n_genuine").get<int>();
        cell.result.n_impostor = o.at("n_impostor").get<int>();
        cell.result.n_excluded = o.at("n_excluded").get<int>();
        if (cell.result.populated) {
            cell.result.eer_percent = o.at("eer_percent").get<double>();
            cell.result.eer_threshold = o.at("eer_threshold").get<double>();
            for (const auto& p : o.at("det"))
                cell.result.det.push_back(
                    {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
        }
        report.cells.push_back(std::move(cell));
    }
    return report;
}

std::string scenario_name(Scenario s) {
    switch (s) {
    case Scenario::Random: return "random";
    case Scenario::Skilled: return "skilled";
    case Scenario::All: return "all";
    }
    return "all";
}

Scenario scenario_from_name(std::string_view name) {
    const std::string n = to_lower(trim(name));
    if (n == "random") return Scenario::Random;
    if (n == "skilled") return Scenario::Skilled;
    if (n == "all") return Scenario::All;
    throw Error("unknown scenario '" + n + "'");
}

} // namespace sigver
