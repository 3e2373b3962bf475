#include "sigver/signal_model.hpp"

#include "sigver/errors.hpp"

#include <algorithm>
#include <limits>

namespace sigver {

namespace {

bool pen_down_at(const SignatureRecord& record, std::size_t i) {
    if (!record.pen_state.empty())
        return record.pen_state[i] != 0;
    if (record.kind == InputKind::Stylus)
        return record.points[i].p > 0;
    return true;
}

NormalizedRecord passthrough(const SignatureRecord& record) {
    NormalizedRecord out;
    out.points.reserve(record.points.size());
    for (const SamplePoint& s : record.points)
        out.points.push_back({s.x, s.y, s.t, s.p});
    return out;
}

} // namespace

NormalizedRecord normalize_spatial(const SignatureRecord& record) {
    if (record.points.empty())
        throw EmptyRecord("normalize_spatial: record has no points");

    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = max_x;
    for (const SamplePoint& s : record.points) {
        min_x = std::min(min_x, s.x);
        max_x = std::max(max_x, s.x);
        min_y = std::min(min_y, s.y);
        max_y = std::max(max_y, s.y);
    }
    const double extent_x = max_x - min_x;
    const double extent_y = max_y - min_y;
    const double scale = std::max(extent_x, extent_y);

    NormalizedRecord out = passthrough(record);
    for (NormalizedPoint& p : out.points) {
        p.x = extent_x == 0 || scale == 0 ? 0.5 : (p.x - min_x) / scale;
        p.y = extent_y == 0 || scale == 0 ? 0.5 : (p.y - min_y) / scale;
    }
    return out;
}

NormalizedRecord normalize_pressure(const SignatureRecord& record) {
    if (record.kind == InputKind::Finger)
        throw KindMismatch("normalize_pressure: pressure undefined for finger input");
    if (record.points.empty())
        throw EmptyRecord("normalize_pressure: record has no points");

    double p_min = std::numeric_limits<double>::infinity();
    double p_max = -p_min;
    for (const SamplePoint& s : record.points) {
        if (s.p > 0) {
            p_min = std::min(p_min, s.p);
            p_max = std::max(p_max, s.p);
        }
    }

    NormalizedRecord out = passthrough(record);
    for (NormalizedPoint& p : out.points) {
        if (p.p <= 0) {
            p.p = 0; // pen-up stays exactly 0
        } else if (p_max == p_min) {
            p.p = 1; // constant pen-down signal
        } else {
            p.p = (p.p - p_min) / (p_max - p_min);
        }
    }
    return out;
}

std::vector<IndexRange> segment_strokes(const SignatureRecord& record,
                                        const StrokeGapPolicy& policy) {
    std::vector<IndexRange> strokes;
    const std::size_t n = record.points.size();
    std::size_t i = 0;
    while (i < n) {
        if (!pen_down_at(record, i)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n && pen_down_at(record, j) &&
               record.points[j].t - record.points[j - 1].t <= policy.max_gap_ms)
            ++j;
        strokes.push_back({i, j});
        i = j;
    }
    return strokes;
}

NormalizedRecord normalize_record(const SignatureRecord& record,
                                  const StrokeGapPolicy& policy) {
    NormalizedRecord spatial = normalize_spatial(record);
    if (record.kind == InputKind::Stylus) {
        NormalizedRecord pressure = normalize_pressure(record);
        for (std::size_t i = 0; i < spatial.points.size(); ++i)
            spatial.points[i].p = pressure.points[i].p;
    } else {
        for (NormalizedPoint& p : spatial.points)
            p.p = 0;
    }
    spatial.pen_strokes = segment_strokes(record, policy);
    return spatial;
}

} // namespace sigver
