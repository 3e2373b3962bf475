#include "sigver/dtw.hpp"

#include "sigver/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sigver {

FeatureSeries derive_features(const NormalizedRecord& record) {
    const std::size_t n = record.points.size();
    if (n < 2)
        throw TooShort("derive_features: need at least 2 points");

    FeatureSeries series;
    series.rows.assign(n, std::vector<double>(4, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        series.rows[i][0] = record.points[i].x;
        series.rows[i][1] = record.points[i].y;
        if (i > 0) {
            series.rows[i][2] = record.points[i].x - record.points[i - 1].x;
            series.rows[i][3] = record.points[i].y - record.points[i - 1].y;
        }
    }
    // pad the first difference with the first real one
    series.rows[0][2] = series.rows[1][2];
    series.rows[0][3] = series.rows[1][3];

    for (std::size_t c = 0; c < 4; ++c) {
        double mean = 0;
        for (const auto& row : series.rows)
            mean += row[c];
        mean /= static_cast<double>(n);
        double var = 0;
        for (const auto& row : series.rows)
            var += (row[c] - mean) * (row[c] - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        if (sd <= 1e-12) {
            for (auto& row : series.rows)
                row[c] = 0.0;
        } else {
            for (auto& row : series.rows)
                row[c] = (row[c] - mean) / sd;
        }
    }
    return series;
}

namespace {

double row_cost(const std::vector<double>& a, const std::vector<double>& b) {
    double sq = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sq += d * d;
    }
    return std::sqrt(sq);
}

} // namespace

DtwResult dtw_distance(const FeatureSeries& a, const FeatureSeries& b, const DtwOptions& opts) {
    const std::size_t n = a.rows.size(), m = b.rows.size();
    if (n == 0 || m == 0)
        throw EmptySeries("dtw_distance: empty series");
    if (!a.rows[0].empty() && !b.rows[0].empty() && a.rows[0].size() != b.rows[0].size())
        throw EmptySeries("dtw_distance: feature dimensions differ");

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dp(n * m, inf);
    const auto idx = [m](std::size_t i, std::size_t j) { return i * m + j; };
    const auto in_band = [&](std::size_t i, std::size_t j) {
        if (!opts.band)
            return true;
        const auto d = i > j ? i - j : j - i;
        return d <= *opts.band;
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!in_band(i, j))
                continue;
            const double c = row_cost(a.rows[i], b.rows[j]);
            if (i == 0 && j == 0) {
                dp[idx(0, 0)] = c;
                continue;
            }
            double best = inf;
            if (i > 0 && j > 0)
                best = std::min(best, dp[idx(i - 1, j - 1)]);
            if (i > 0)
                best = std::min(best, dp[idx(i - 1, j)]);
            if (j > 0)
                best = std::min(best, dp[idx(i, j - 1)]);
            dp[idx(i, j)] = c + best;
        }
    }

    const double total = dp[idx(n - 1, m - 1)];
    if (!std::isfinite(total))
        throw EmptySeries("dtw_distance: band too narrow for these lengths");

    // Backtrack to count alignment pairs; ties prefer (1,1), (1,0), (0,1).
    std::size_t i = n - 1, j = m - 1, path_length = 1;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0) {
            const double diag = dp[idx(i - 1, j - 1)];
            const double up = dp[idx(i - 1, j)];
            const double left = dp[idx(i, j - 1)];
            const double best = std::min({diag, up, left});
            if (diag == best) {
                --i; --j;
            } else if (up == best) {
                --i;
            } else {
                --j;
            }
        } else if (i > 0) {
            --i;
        } else {
            --j;
        }
        ++path_length;
    }

    DtwResult result;
    result.distance = total;
    result.path_length = path_length;
    result.normalized_distance = total / static_cast<double>(path_length);
    return result;
}

double dtw_score(const SignatureRecord& reference, const SignatureRecord& probe,
                 const StrokeGapPolicy& policy) {
    const FeatureSeries a = derive_features(normalize_record(reference, policy));
    const FeatureSeries b = derive_features(normalize_record(probe, policy));
    return std::exp(-dtw_distance(a, b).normalized_distance);
}

} // namespace sigver
