#pragma once

#include "sigver/signal_model.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sigver {

enum class Column { X, Y, T, P, PenState, Ignore };

// Layout of a signature time-series text file. The default matches the common
// online-signature distribution format: a first line holding the sample
// count, then one whitespace-delimited "x y t p" line per sample.
struct ColumnSchema {
    enum class Delimiter { Whitespace, Comma };

    std::vector<Column> column_order{Column::X, Column::Y, Column::T, Column::P};
    bool has_count_header = true;
    Delimiter delimiter = Delimiter::Whitespace;

    bool has(Column c) const;
    // X and Y exactly once, T and P at most once. Throws InvalidParams.
    void validate() const;
};

enum class TaskKind { Task1Stylus = 1, Task2Finger = 2, Task3Combined = 3 };

enum class PairLabel { Genuine, SkilledForgery, RandomForgery, Unlabeled };

struct ComparisonPair {
    std::string pair_id;
    std::string reference_path;
    std::string probe_path;
    TaskKind task = TaskKind::Task3Combined;
    PairLabel label = PairLabel::Unlabeled;
};

struct Dataset {
    std::map<std::string, SignatureRecord> records; // keyed by path
    std::vector<ComparisonPair> pairs;
    std::map<TaskKind, int> task_counts;

    void recount_tasks();
    // Every pair endpoint must resolve to a record. Throws InvalidParams.
    void validate() const;
};

// Parse one signature file. A missing P column makes the record finger input
// with p = 0 throughout. A missing T column synthesizes t as the sample index
// (gap segmentation then never splits). Throws MalformedLine, CountMismatch,
// EmptyFile.
SignatureRecord parse_signature_file(std::string_view text, const ColumnSchema& schema,
                                     std::string source_path = {});

// Inverse of parse_signature_file for the same schema; doubles are written in
// shortest round-trip form so parse(serialize(r)) == r.
std::string serialize_signature_file(const SignatureRecord& record, const ColumnSchema& schema);

// Protocol file: one "<reference_path> <probe_path> [genuine|skilled|random]"
// per line, '#' comment lines and blank lines ignored. pair_id is the
// zero-padded index among well-formed lines. The protocol format carries no
// task column; every parsed pair gets default_task (CLI `--task`), which
// assign_tasks_from_kinds can refine once records are loaded.
std::vector<ComparisonPair> parse_comparison_list(std::string_view text,
                                                  TaskKind default_task = TaskKind::Task3Combined);

std::string serialize_comparison_list(const std::vector<ComparisonPair>& pairs);

// Tag each pair by its endpoint records: stylus/stylus -> Task1,
// finger/finger -> Task2, mixed devices -> Task3.
void assign_tasks_from_kinds(Dataset& dataset);

struct SynthParams {
    std::uint64_t seed = 42;
    int n_subjects = 8;
    int genuine_per_subject = 4;
    int skilled_per_subject = 2;
};

// Deterministic desk-scale dataset for offline testing. Each subject gets a
// base trajectory built from 2-4 sinusoidal strokes with subject-specific
// frequencies and phases; genuine samples add small jitter, skilled forgeries
// add larger jitter plus a timing warp, and random-forgery pairs cross
// subjects of the same input kind. Subjects alternate stylus/finger so both
// device tasks are populated. Throws InvalidParams.
Dataset synth_dataset(const SynthParams& params);

// Write records plus protocol.txt under dir (signature files in
// dir/signatures). Deterministic: same dataset, byte-identical tree.
void write_dataset(const Dataset& dataset, const std::string& dir,
                   const ColumnSchema& schema = {});

std::string task_name(TaskKind task);   // "1" / "2" / "3"
std::string label_name(PairLabel label); // "genuine" / "skilled" / "random" / ""
TaskKind task_from_name(std::string_view name);
PairLabel label_from_name(std::string_view name);

} // namespace sigver
