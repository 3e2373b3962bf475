#pragma once

#include "sigver/signal_model.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sigver {

struct RenderConfig {
    int canvas_px = 512;
    double margin_fraction = 0.05;
    int stroke_width_px = 2;
    // Minimum opacity for the lightest pen-down pressure; keeps faint strokes
    // from vanishing into the white background.
    double ink_floor = 0.25;
    int background_value = 255;
    // Only the deterministic integer rasterization path exists; golden-image
    // tests require bit-exact output, so validate() rejects true.
    bool antialias = false;

    void validate() const; // throws ConfigInvalid
    std::string digest() const;
};

struct RenderedImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major grayscale
    std::string provenance;           // "<record id>#<config digest>"

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const RenderedImage&) const = default;
};

// Rasterize a normalized record. Stroke segments get a constant ink value
// from the mean of their endpoint pressures:
//   value = round(255 * (1 - (ink_floor + (1 - ink_floor) * p_mean)))
// so full pressure is black and the lightest pen-down pressure sits at the
// ink floor. Finger input draws uniform black (binary image). Overlaps keep
// the darker value.
RenderedImage render_signature(const NormalizedRecord& record, InputKind kind,
                               const RenderConfig& cfg, std::string_view record_id = {});

// 8-bit grayscale non-interlaced PNG. The zlib stream uses stored (type 0)
// deflate blocks and filter None on every row, so identical pixel buffers
// produce byte-identical files on every platform and zlib version.
std::vector<std::uint8_t> encode_png(const RenderedImage& image);

enum class PairLayout { TwoAttachments, SideBySide };

// TwoAttachments passes both images through unchanged; SideBySide joins them
// on one canvas with a 4 px background separator column. Throws SizeMismatch
// when SideBySide inputs differ in height.
std::vector<RenderedImage> compose_pair(const RenderedImage& reference,
                                        const RenderedImage& probe, PairLayout layout);

} // namespace sigver
