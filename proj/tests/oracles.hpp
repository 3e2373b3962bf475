#pragma once

// Test-side oracles, deliberately independent of the library implementations
// they check:
//  - dtw_brute_force enumerates every monotone alignment path recursively
//  - eer_brute_force recounts error rates per threshold with naive loops
//  - png_decode_gray walks PNG chunks and inflates IDAT through zlib

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

namespace oracles {

// ---------------------------------------------------------------------------
// DTW: minimum cumulative |a_i - b_j| over all monotone paths, explored by
// plain recursion (no memoization, no DP table).
// ---------------------------------------------------------------------------

inline long dtw_paths_min(const int* a, std::size_t i, const int* b, std::size_t j) {
    const long cost = std::abs(a[i] - b[j]);
    if (i == 0 && j == 0)
        return cost;
    long best = std::numeric_limits<long>::max();
    if (i > 0 && j > 0)
        best = std::min(best, dtw_paths_min(a, i - 1, b, j - 1));
    if (i > 0)
        best = std::min(best, dtw_paths_min(a, i - 1, b, j));
    if (j > 0)
        best = std::min(best, dtw_paths_min(a, i, b, j - 1));
    return cost + best;
}

inline long dtw_brute_force(const std::vector<int>& a, const std::vector<int>& b) {
    return dtw_paths_min(a.data(), a.size() - 1, b.data(), b.size() - 1);
}

// Same enumeration for real-valued 1-D series (used by the unit tests).
inline double dtw_paths_min_d(const std::vector<double>& a, std::size_t i,
                              const std::vector<double>& b, std::size_t j) {
    const double cost = std::abs(a[i] - b[j]);
    if (i == 0 && j == 0)
        return cost;
    double best = std::numeric_limits<double>::infinity();
    if (i > 0 && j > 0)
        best = std::min(best, dtw_paths_min_d(a, i - 1, b, j - 1));
    if (i > 0)
        best = std::min(best, dtw_paths_min_d(a, i - 1, b, j));
    if (j > 0)
        best = std::min(best, dtw_paths_min_d(a, i, b, j - 1));
    return cost + best;
}

inline double dtw_brute_force_d(const std::vector<double>& a, const std::vector<double>& b) {
    return dtw_paths_min_d(a, a.size() - 1, b, b.size() - 1);
}

// ---------------------------------------------------------------------------
// EER: O(n^2) threshold scan. Candidate thresholds are every distinct score
// plus sentinels; rates are recounted with a full pass per threshold; the
// crossing resolves exactly like the production convention (tie wins, else
// linear interpolation between the bracketing points).
// ---------------------------------------------------------------------------

struct BruteEer {
    double eer_percent;
    double threshold;
};

inline BruteEer eer_brute_force(const std::vector<double>& genuine,
                                const std::vector<double>& impostor) {
    if (genuine.empty() || impostor.empty())
        throw std::runtime_error("eer oracle: empty class");

    std::vector<double> thresholds;
    thresholds.insert(thresholds.end(), genuine.begin(), genuine.end());
    thresholds.insert(thresholds.end(), impostor.begin(), impostor.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), thresholds.front() - 1.0);
    thresholds.push_back(thresholds.back() + 1.0);

    const auto rates = [&](double t) {
        std::size_t false_match = 0, false_non_match = 0;
        for (double s : impostor)
            if (s >= t)
                ++false_match;
        for (double s : genuine)
            if (s < t)
                ++false_non_match;
        return std::pair<double, double>{
            static_cast<double>(false_match) / static_cast<double>(impostor.size()),
            static_cast<double>(false_non_match) / static_cast<double>(genuine.size())};
    };

    double prev_t = thresholds.front();
    auto [prev_fmr, prev_fnmr] = rates(prev_t);
    for (double t : thresholds) {
        const auto [fmr, fnmr] = rates(t);
        if (fmr == fnmr)
            return {100.0 * fmr, t};
        if (fmr < fnmr) {
            const double da = prev_fmr - prev_fnmr;
            const double db = fmr - fnmr;
            const double alpha = da / (da - db);
            return {100.0 * (prev_fmr + alpha * (fmr - prev_fmr)), prev_t + alpha * (t - prev_t)};
        }
        prev_t = t;
        prev_fmr = fmr;
        prev_fnmr = fnmr;
    }
    throw std::runtime_error("eer oracle: no crossing");
}

// ---------------------------------------------------------------------------
// PNG decoding (independent of the encoder): parses the chunk stream, checks
// the header fields, inflates IDAT with zlib, and strips the filter bytes
// (only filter 0 is accepted; the encoder must never emit anything else).
// ---------------------------------------------------------------------------

struct GrayPng {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;
};

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

inline GrayPng png_decode_gray(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t magic[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() < 8 || !std::equal(magic, magic + 8, bytes.begin()))
        throw std::runtime_error("png oracle: bad signature");

    GrayPng out;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool saw_end = false;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = read_be32(&bytes[pos]);
        const std::string type(bytes.begin() + pos + 4, bytes.begin() + pos + 8);
        if (pos + 12 + len > bytes.size())
            throw std::runtime_error("png oracle: truncated chunk");
        const std::uint8_t* payload = &bytes[pos + 8];
        if (type == "IHDR") {
            out.width = read_be32(payload);
            out.height = read_be32(payload + 4);
            if (payload[8] != 8 || payload[9] != 0)
                throw std::runtime_error("png oracle: not 8-bit grayscale");
            if (payload[12] != 0)
                throw std::runtime_error("png oracle: interlaced");
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            saw_end = true;
            break;
        }
        pos += 12 + len;
    }
    if (!saw_end)
        throw std::runtime_error("png oracle: missing IEND");

    const std::size_t raw_size = static_cast<std::size_t>(out.height) * (out.width + 1);
    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = raw_size;
    if (uncompress(raw.data(), &dest_len, idat.data(), idat.size()) != Z_OK ||
        dest_len != raw_size)
        throw std::runtime_error("png oracle: zlib inflate failed");

    out.pixels.reserve(static_cast<std::size_t>(out.width) * out.height);
    for (std::uint32_t y = 0; y < out.height; ++y) {
        const std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (out.width + 1);
        if (row[0] != 0)
            throw std::runtime_error("png oracle: unexpected filter type");
        out.pixels.insert(out.pixels.end(), row + 1, row + 1 + out.width);
    }
    return out;
}

} // namespace oracles
