#pragma once

#include "sigver/signal_model.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace sigver {

// Rows are feature vectors; derive_features emits [x, y, dx, dy] but the DP
// below accepts any consistent row dimension (the oracle tests feed 1-D rows).
struct FeatureSeries {
    std::vector<std::vector<double>> rows;
};

struct DtwResult {
    double distance = 0;
    std::size_t path_length = 0; // alignment pairs on the optimal path
    double normalized_distance = 0;
};

struct DtwOptions {
    // Sakoe-Chiba band half-width; unset means unconstrained. Sequences are
    // short at desk scale, so the band is off by default.
    std::optional<std::size_t> band;
};

// Position plus first differences, each channel z-scored over the series.
// The first difference row is padded by repeating the first real difference;
// constant channels standardize to all zeros. Throws TooShort (< 2 points).
FeatureSeries derive_features(const NormalizedRecord& record);

// Classic DP with steps {(1,0),(0,1),(1,1)}, Euclidean local cost, anchored
// at both ends. Path ties break preferring diagonal, then (1,0), then (0,1).
// Throws EmptySeries.
DtwResult dtw_distance(const FeatureSeries& a, const FeatureSeries& b,
                       const DtwOptions& opts = {});

// Similarity in (0,1]: exp(-normalized_distance) over derived features of
// both records after full normalization.
double dtw_score(const SignatureRecord& reference, const SignatureRecord& probe,
                 const StrokeGapPolicy& policy = {});

} // namespace sigver
