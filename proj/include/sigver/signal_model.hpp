#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sigver {

enum class InputKind { Stylus, Finger };

// One captured sample. p is raw device pressure; 0 means pen-up (or undefined
// for finger input). t is milliseconds, non-decreasing within a record.
struct SamplePoint {
    double x = 0;
    double y = 0;
    double t = 0;
    double p = 0;
};

struct SignatureRecord {
    std::string subject_id;
    std::vector<SamplePoint> points;
    InputKind kind = InputKind::Stylus;
    std::string source_path;
    // Parallel to points when the source file carried an explicit pen-state
    // column; empty otherwise. Nonzero = pen down.
    std::vector<std::uint8_t> pen_state;
};

struct NormalizedPoint {
    double x = 0; // in [0,1], aspect preserved
    double y = 0;
    double t = 0; // passed through unchanged
    double p = 0; // in [0,1]; exactly 0 for pen-up samples
};

// Half-open index range [begin, end) into a record's sample sequence.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

struct StrokeGapPolicy {
    // A pause longer than this between consecutive samples starts a new
    // stroke even while the pen stays down. Prevents long connector lines on
    // finger input, where no pen-up signal exists.
    double max_gap_ms = 150.0;
};

struct NormalizedRecord {
    std::vector<NormalizedPoint> points;
    std::vector<IndexRange> pen_strokes;
};

// Aspect-preserving min-max scaling of (x, y) into the unit square: the
// longer axis spans [0,1], the other starts at 0. Degenerate axes (zero
// extent) map to the constant 0.5. t and p pass through unchanged.
// Throws EmptyRecord.
NormalizedRecord normalize_spatial(const SignatureRecord& record);

// Min-max pressure scaling over pen-down samples only; the minimum strictly
// positive pressure maps to 0 so the dark end of the scale is not wasted on
// pen-up zeros. Pen-up samples keep p = 0; a constant pen-down signal maps to
// 1. x, y and t pass through unchanged. Throws KindMismatch for finger input
// (pressure undefined there) and EmptyRecord.
NormalizedRecord normalize_pressure(const SignatureRecord& record);

// Contiguous pen-down runs. Pen-down is the explicit pen-state column when
// one exists, else p > 0 for stylus, always-down for finger. Runs are
// additionally split at time gaps exceeding policy.max_gap_ms.
std::vector<IndexRange> segment_strokes(const SignatureRecord& record,
                                        const StrokeGapPolicy& policy = {});

// Full normalization used by rendering and the DTW baseline: spatial scaling,
// pressure scaling (stylus only; finger keeps p = 0), and stroke segmentation.
NormalizedRecord normalize_record(const SignatureRecord& record,
                                  const StrokeGapPolicy& policy = {});

} // namespace sigver
