#include "sigver/ingest.hpp"

#include "sigver/errors.hpp"
#include "sigver/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

namespace sigver {

bool ColumnSchema::has(Column c) const {
    return std::find(column_order.begin(), column_order.end(), c) != column_order.end();
}

void ColumnSchema::validate() const {
    const auto count = [this](Column c) {
        return std::count(column_order.begin(), column_order.end(), c);
    };
    if (count(Column::X) != 1 || count(Column::Y) != 1)
        throw InvalidParams("schema: X and Y must each appear exactly once");
    if (count(Column::T) > 1 || count(Column::P) > 1 || count(Column::PenState) > 1)
        throw InvalidParams("schema: T, P and PenState may appear at most once");
}

void Dataset::recount_tasks() {
    task_counts.clear();
    for (const ComparisonPair& p : pairs)
        ++task_counts[p.task];
}

void Dataset::validate() const {
    for (const ComparisonPair& p : pairs) {
        if (!records.count(p.reference_path))
            throw InvalidParams("pair " + p.pair_id + ": unresolved reference " + p.reference_path);
        if (!records.count(p.probe_path))
            throw InvalidParams("pair " + p.pair_id + ": unresolved probe " + p.probe_path);
    }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line, ColumnSchema::Delimiter d) {
    if (d == ColumnSchema::Delimiter::Comma) {
        auto fields = split(line, ',');
        for (auto& f : fields)
            f = trim(f);
        return fields;
    }
    return split_whitespace(line);
}

} // namespace

SignatureRecord parse_signature_file(std::string_view text, const ColumnSchema& schema,
                                     std::string source_path) {
    schema.validate();
    if (trim(text).empty())
        throw EmptyFile("empty signature file: " + source_path);

    SignatureRecord record;
    record.source_path = std::move(source_path);

    const bool has_p = schema.has(Column::P);
    const bool has_t = schema.has(Column::T);
    const bool has_pen = schema.has(Column::PenState);

    std::vector<std::string_view> lines = split(text, '\n');
    std::size_t line_no = 0;
    long declared_count = -1;
    bool header_pending = schema.has_count_header;

    for (std::string_view raw : lines) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty())
            continue;
        if (header_pending) {
            header_pending = false;
            try {
                declared_count = parse_long(line);
            } catch (const Error&) {
                throw MalformedLine(line_no, "count header is not an integer");
            }
            if (declared_count < 0)
                throw MalformedLine(line_no, "negative count header");
            continue;
        }
        const auto fields = split_fields(line, schema.delimiter);
        if (fields.size() != schema.column_order.size())
            throw MalformedLine(line_no, "expected " + std::to_string(schema.column_order.size()) +
                                             " fields, got " + std::to_string(fields.size()));
        SamplePoint pt;
        std::uint8_t pen = 1;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (schema.column_order[c] == Column::Ignore)
                continue;
            double v;
            try {
                v = parse_double(fields[c]);
            } catch (const Error&) {
                throw MalformedLine(line_no, "non-numeric field '" + std::string(fields[c]) + "'");
            }
            switch (schema.column_order[c]) {
            case Column::X: pt.x = v; break;
            case Column::Y: pt.y = v; break;
            case Column::T: pt.t = v; break;
            case Column::P: pt.p = v; break;
            case Column::PenState: pen = v != 0 ? 1 : 0; break;
            case Column::Ignore: break;
            }
        }
        if (pt.p < 0)
            throw MalformedLine(line_no, "negative pressure");
        if (!has_t)
            pt.t = static_cast<double>(record.points.size());
        if (!record.points.empty() && pt.t < record.points.back().t)
            throw MalformedLine(line_no, "timestamp decreases");
        record.points.push_back(pt);
        if (has_pen)
            record.pen_state.push_back(pen);
    }

    if (record.points.empty())
        throw EmptyFile("no data lines in: " + record.source_path);
    if (declared_count >= 0 && static_cast<std::size_t>(declared_count) != record.points.size())
        throw CountMismatch("header says " + std::to_string(declared_count) + " samples, file has " +
                            std::to_string(record.points.size()));

    // Kind inference: no P column, or a P column that never leaves zero,
    // means there is no usable pressure signal.
    bool any_pressure = false;
    for (const SamplePoint& pt : record.points)
        any_pressure = any_pressure || pt.p > 0;
    record.kind = (has_p && any_pressure) ? InputKind::Stylus : InputKind::Finger;

    if (record.source_path.empty())
        record.subject_id = "";
    else
        record.subject_id = std::filesystem::path(record.source_path).stem().string();
    return record;
}

std::string serialize_signature_file(const SignatureRecord& record, const ColumnSchema& schema) {
    schema.validate();
    const char sep = schema.delimiter == ColumnSchema::Delimiter::Comma ? ',' : ' ';
    std::string out;
    if (schema.has_count_header) {
        out += std::to_string(record.points.size());
        out += '\n';
    }
    for (std::size_t i = 0; i < record.points.size(); ++i) {
        const SamplePoint& pt = record.points[i];
        for (std::size_t c = 0; c < schema.column_order.size(); ++c) {
            if (c > 0)
                out += sep;
            switch (schema.column_order[c]) {
            case Column::X: out += format_double(pt.x); break;
            case Column::Y: out += format_double(pt.y); break;
            case Column::T: out += format_double(pt.t); break;
            case Column::P: out += format_double(pt.p); break;
            case Column::PenState:
                out += record.pen_state.empty() ? "1" : std::to_string(record.pen_state[i]);
                break;
            case Column::Ignore: out += "0"; break;
            }
        }
        out += '\n';
    }
    return out;
}

std::vector<ComparisonPair> parse_comparison_list(std::string_view text, TaskKind default_task) {
    std::vector<ComparisonPair> pairs;
    std::size_t line_no = 0;
    std::size_t index = 0;
    for (std::string_view raw : split(text, '\n')) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto fields = split_whitespace(line);
        if (fields.size() < 2 || fields.size() > 3)
            throw MalformedLine(line_no, "expected '<reference> <probe> [label]'");
        ComparisonPair pair;
        char id[16];
        std::snprintf(id, sizeof(id), "%06zu", index);
        pair.pair_id = id;
        pair.reference_path = std::string(fields[0]);
        pair.probe_path = std::string(fields[1]);
        pair.task = default_task;
        if (fields.size() == 3) {
            const std::string label = to_lower(fields[2]);
            if (label == "genuine")
                pair.label = PairLabel::Genuine;
            else if (label == "skilled")
                pair.label = PairLabel::SkilledForgery;
            else if (label == "random")
                pair.label = PairLabel::RandomForgery;
            else
                throw MalformedLine(line_no, "unknown label '" + label + "'");
        }
        pairs.push_back(std::move(pair));
        ++index;
    }
    return pairs;
}

std::string serialize_comparison_list(const std::vector<ComparisonPair>& pairs) {
    std::string out;
    for (const ComparisonPair& p : pairs) {
        out += p.reference_path;
        out += ' ';
        out += p.probe_path;
        if (p.label != PairLabel::Unlabeled) {
            out += ' ';
            out += label_name(p.label);
        }
        out += '\n';
    }
    return out;
}

void assign_tasks_from_kinds(Dataset& dataset) {
    dataset.validate();
    for (ComparisonPair& p : dataset.pairs) {
        const InputKind a = dataset.records.at(p.reference_path).kind;
        const InputKind b = dataset.records.at(p.probe_path).kind;
        if (a == InputKind::Stylus && b == InputKind::Stylus)
            p.task = TaskKind::Task1Stylus;
        else if (a == InputKind::Finger && b == InputKind::Finger)
            p.task = TaskKind::Task2Finger;
        else
            p.task = TaskKind::Task3Combined;
    }
    dataset.recount_tasks();
}

// ---------------------------------------------------------------------------
// Synthetic dataset generation
// ---------------------------------------------------------------------------

namespace {

struct StrokeParams {
    double duration_ms;
    double center_x, center_y;
    double amp_x, amp_y;
    double freq_x, freq_y; // Hz
    double phase_x, phase_y, phase_y2;
};

struct SubjectShape {
    InputKind kind;
    std::vector<StrokeParams> strokes;
    double pressure_bias;
};

// Distortion applied when instantiating one sample of a subject's shape.
struct InstanceStyle {
    double jitter_sd;       // per-point positional noise, device units
    double phase_sd;        // per-stroke phase perturbation
    double amp_scale_sd;    // per-stroke amplitude perturbation
    double time_warp;       // 0 for genuine; skilled warps the sampling clock
    double pressure_sd;     // per-point pressure noise
    double pressure_shift;  // whole-record pressure offset
};

Rng subject_rng(std::uint64_t seed, int subject, std::string_view tag) {
    std::uint64_t h = fnv1a64(tag, splitmix64(seed));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(subject) * 0x9e3779b97f4a7c15ULL));
    return Rng(h);
}

SubjectShape make_subject_shape(const SynthParams& params, int subject) {
    Rng rng = subject_rng(params.seed, subject, "shape");
    SubjectShape shape;
    shape.kind = subject % 2 == 0 ? InputKind::Stylus : InputKind::Finger;
    shape.pressure_bias = rng.uniform(-60.0, 60.0);
    const int n_strokes = static_cast<int>(rng.uniform_int(2, 4));
    double cursor_x = 120.0;
    for (int m = 0; m < n_strokes; ++m) {
        StrokeParams s;
        s.duration_ms = rng.uniform(350.0, 700.0);
        s.center_x = cursor_x + rng.uniform(-20.0, 20.0);
        s.center_y = 400.0 + rng.uniform(-80.0, 80.0);
        s.amp_x = rng.uniform(60.0, 140.0);
        s.amp_y = rng.uniform(100.0, 220.0);
        s.freq_x = rng.uniform(0.7, 1.6);
        s.freq_y = rng.uniform(1.2, 2.8);
        s.phase_x = rng.uniform(0.0, 6.283185307179586);
        s.phase_y = rng.uniform(0.0, 6.283185307179586);
        s.phase_y2 = rng.uniform(0.0, 6.283185307179586);
        shape.strokes.push_back(s);
        cursor_x += rng.uniform(180.0, 260.0);
    }
    return shape;
}

SignatureRecord instantiate(const SubjectShape& shape, const InstanceStyle& style, Rng& rng) {
    SignatureRecord record;
    record.kind = shape.kind;
    constexpr double dt_ms = 10.0;
    constexpr double stroke_gap_ms = 220.0; // above the 150 ms split threshold
    double t0 = 0.0;
    for (const StrokeParams& base : shape.strokes) {
        StrokeParams s = base;
        s.phase_x += rng.normal(0.0, style.phase_sd);
        s.phase_y += rng.normal(0.0, style.phase_sd);
        s.amp_x *= 1.0 + rng.normal(0.0, style.amp_scale_sd);
        s.amp_y *= 1.0 + rng.normal(0.0, style.amp_scale_sd);
        const int n = static_cast<int>(s.duration_ms / dt_ms) + 1;
        for (int i = 0; i < n; ++i) {
            const double u = (i * dt_ms) / 1000.0;           // wall-clock seconds
            const double frac = n > 1 ? double(i) / (n - 1) : 0.0;
            // skilled imitations run on a warped clock: right shape, wrong pace
            const double uw = u * (1.0 + style.time_warp * std::sin(3.141592653589793 * frac));
            const double two_pi = 6.283185307179586;
            SamplePoint pt;
            pt.x = s.center_x + s.amp_x * std::sin(two_pi * s.freq_x * uw + s.phase_x) +
                   rng.normal(0.0, style.jitter_sd);
            pt.y = s.center_y + s.amp_y * std::sin(two_pi * s.freq_y * uw + s.phase_y) +
                   0.3 * s.amp_y * std::sin(two_pi * 2.0 * s.freq_y * uw + s.phase_y2) +
                   rng.normal(0.0, style.jitter_sd);
            pt.t = t0 + i * dt_ms;
            if (shape.kind == InputKind::Stylus) {
                double p = 400.0 + 250.0 * std::sin(3.141592653589793 * frac) +
                           shape.pressure_bias + style.pressure_shift +
                           rng.normal(0.0, style.pressure_sd);
                pt.p = std::max(50.0, std::round(p));
            }
            pt.x = std::round(pt.x);
            pt.y = std::round(pt.y);
            record.points.push_back(pt);
        }
        t0 += (n - 1) * dt_ms + stroke_gap_ms;
    }
    return record;
}

const InstanceStyle kGenuineStyle{2.2, 0.040, 0.018, 0.00, 6.0, 0.0};

InstanceStyle skilled_style(Rng& rng) {
    InstanceStyle s{2.8, 0.055, 0.028, 0.0, 18.0, 0.0};
    const double w = rng.uniform(0.02, 0.07);
    s.time_warp = rng.uniform() < 0.5 ? w : -w;
    s.pressure_shift = rng.normal(0.0, 40.0);
    return s;
}

std::string subject_name(int subject) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%02d", subject + 1);
    return buf;
}

} // namespace

Dataset synth_dataset(const SynthParams& params) {
    if (params.n_subjects < 2)
        throw InvalidParams("synth: need at least 2 subjects for random-forgery pairs");
    if (params.genuine_per_subject < 2)
        throw InvalidParams("synth: need at least 2 genuine samples per subject");
    if (params.skilled_per_subject < 0)
        throw InvalidParams("synth: negative skilled count");

    Dataset dataset;
    std::vector<SubjectShape> shapes;
    std::vector<std::vector<std::string>> genuine_paths(params.n_subjects);
    std::vector<std::vector<std::string>> skilled_paths(params.n_subjects);

    for (int s = 0; s < params.n_subjects; ++s) {
        shapes.push_back(make_subject_shape(params, s));
        const std::string name = subject_name(s);
        for (int g = 0; g < params.genuine_per_subject; ++g) {
            Rng rng = subject_rng(params.seed, s, "genuine/" + std::to_string(g));
            SignatureRecord rec = instantiate(shapes[s], kGenuineStyle, rng);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s_g%02d.txt", name.c_str(), g + 1);
            rec.subject_id = name;
            rec.source_path = buf;
            genuine_paths[s].push_back(buf);
            dataset.records[buf] = std::move(rec);
        }
        for (int f = 0; f < params.skilled_per_subject; ++f) {
            Rng rng = subject_rng(params.seed, s, "skilled/" + std::to_string(f));
            const InstanceStyle style = skilled_style(rng);
            SignatureRecord rec = instantiate(shapes[s], style, rng);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s_s%02d.txt", name.c_str(), f + 1);
            rec.subject_id = name + "_forgery";
            rec.source_path = buf;
            skilled_paths[s].push_back(buf);
            dataset.records[buf] = std::move(rec);
        }
    }

    // Genuine pairs: every unordered pair of a subject's genuine samples.
    for (int s = 0; s < params.n_subjects; ++s)
        for (std::size_t a = 0; a < genuine_paths[s].size(); ++a)
            for (std::size_t b = a + 1; b < genuine_paths[s].size(); ++b) {
                ComparisonPair p;
                p.reference_path = genuine_paths[s][a];
                p.probe_path = genuine_paths[s][b];
                p.label = PairLabel::Genuine;
                dataset.pairs.push_back(p);
            }

    // Skilled pairs: every forgery against every genuine sample of its target.
    for (int s = 0; s < params.n_subjects; ++s)
        for (const std::string& forgery : skilled_paths[s])
            for (const std::string& genuine : genuine_paths[s]) {
                ComparisonPair p;
                p.reference_path = genuine;
                p.probe_path = forgery;
                p.label = PairLabel::SkilledForgery;
                dataset.pairs.push_back(p);
            }

    // Random pairs: cross-subject genuine samples, kept within one input kind
    // where a same-kind peer exists (cross-kind only as a fallback).
    for (int i = 0; i < params.n_subjects; ++i) {
        bool has_same_kind_peer = false;
        for (int j = 0; j < params.n_subjects; ++j)
            if (j != i && shapes[j].kind == shapes[i].kind)
                has_same_kind_peer = true;
        for (int j = 0; j < params.n_subjects; ++j) {
            if (j == i)
                continue;
            if (has_same_kind_peer && shapes[j].kind != shapes[i].kind)
                continue;
            ComparisonPair p;
            p.reference_path = genuine_paths[i][0];
            p.probe_path = genuine_paths[j][1];
            p.label = PairLabel::RandomForgery;
            dataset.pairs.push_back(p);
        }
    }

    std::size_t index = 0;
    for (ComparisonPair& p : dataset.pairs) {
        char id[16];
        std::snprintf(id, sizeof(id), "%06zu", index++);
        p.pair_id = id;
    }
    assign_tasks_from_kinds(dataset);
    return dataset;
}

void write_dataset(const Dataset& dataset, const std::string& dir, const ColumnSchema& schema) {
    const std::filesystem::path root(dir);
    for (const auto& [path, record] : dataset.records)
        write_file_text((root / "signatures" / path).string(),
                        serialize_signature_file(record, schema));
    write_file_text((root / "protocol.txt").string(), serialize_comparison_list(dataset.pairs));
}

std::string task_name(TaskKind task) {
    return std::to_string(static_cast<int>(task));
}

std::string label_name(PairLabel label) {
    switch (label) {
    case PairLabel::Genuine: return "genuine";
    case PairLabel::SkilledForgery: return "skilled";
    case PairLabel::RandomForgery: return "random";
    case PairLabel::Unlabeled: return "";
    }
    return "";
}

TaskKind task_from_name(std::string_view name) {
    const std::string t(trim(name));
    if (t == "1") return TaskKind::Task1Stylus;
    if (t == "2") return TaskKind::Task2Finger;
    if (t == "3") return TaskKind::Task3Combined;
    throw InvalidParams("unknown task '" + t + "'");
}

PairLabel label_from_name(std::string_view name) {
    const std::string l = to_lower(trim(name));
    if (l == "genuine") return PairLabel::Genuine;
    if (l == "skilled") return PairLabel::SkilledForgery;
    if (l == "random") return PairLabel::RandomForgery;
    if (l.empty()) return PairLabel::Unlabeled;
    throw InvalidParams("unknown label '" + l + "'");
}

} // namespace sigver
