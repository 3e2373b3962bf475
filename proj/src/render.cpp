#include "sigver/render.hpp"

#include "sigver/errors.hpp"
#include "sigver/util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <span>

namespace sigver {

void RenderConfig::validate() const {
    if (canvas_px < 32)
        throw ConfigInvalid("canvas_px must be >= 32");
    if (margin_fraction < 0 || margin_fraction >= 0.5)
        throw ConfigInvalid("margin_fraction must be in [0, 0.5)");
    if (stroke_width_px < 1)
        throw ConfigInvalid("stroke_width_px must be >= 1");
    if (ink_floor < 0 || ink_floor > 1)
        throw ConfigInvalid("ink_floor must be in [0, 1]");
    if (background_value != 255)
        throw ConfigInvalid("background_value is fixed at 255");
    if (antialias)
        throw ConfigInvalid("antialiased rendering is not implemented; only the "
                            "deterministic integer path exists");
}

std::string RenderConfig::digest() const {
    std::string desc = "canvas=" + std::to_string(canvas_px) +
                       ";margin=" + format_double(margin_fraction) +
                       ";width=" + std::to_string(stroke_width_px) +
                       ";floor=" + format_double(ink_floor) +
                       ";bg=" + std::to_string(background_value) +
                       ";aa=" + (antialias ? "1" : "0");
    return sha256_hex(desc).substr(0, 16);
}

namespace {

struct Raster {
    int size;
    int brush_lo, brush_hi; // brush covers [x+brush_lo, x+brush_hi]
    int margin_px;
    std::vector<std::uint8_t>* pixels;

    void stamp(int cx, int cy, std::uint8_t ink) const {
        for (int dy = brush_lo; dy <= brush_hi; ++dy)
            for (int dx = brush_lo; dx <= brush_hi; ++dx) {
                const int x = cx + dx, y = cy + dy;
                if (x < 0 || y < 0 || x >= size || y >= size)
                    continue;
                std::uint8_t& px = (*pixels)[static_cast<std::size_t>(y) * size + x];
                px = std::min(px, ink); // darkest wins at overlaps
            }
    }

    // Bresenham; integer-only so output is identical everywhere.
    void line(int x0, int y0, int x1, int y1, std::uint8_t ink) const {
        const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
        const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
        int err = dx + dy;
        while (true) {
            stamp(x0, y0, ink);
            if (x0 == x1 && y0 == y1)
                break;
            const int e2 = 2 * err;
            if (e2 >= dy) { err += dy; x0 += sx; }
            if (e2 <= dx) { err += dx; y0 += sy; }
        }
    }
};

std::uint8_t ink_value(double p_mean, const RenderConfig& cfg, InputKind kind) {
    if (kind == InputKind::Finger)
        return 0; // uniform binary strokes
    const double opacity = cfg.ink_floor + (1.0 - cfg.ink_floor) * p_mean;
    const long v = std::lround(255.0 * (1.0 - opacity));
    return static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
}

} // namespace

RenderedImage render_signature(const NormalizedRecord& record, InputKind kind,
                               const RenderConfig& cfg, std::string_view record_id) {
    cfg.validate();

    RenderedImage img;
    img.width = img.height = cfg.canvas_px;
    img.pixels.assign(static_cast<std::size_t>(cfg.canvas_px) * cfg.canvas_px,
                      static_cast<std::uint8_t>(cfg.background_value));
    img.provenance = std::string(record_id) + "#" + cfg.digest();

    const int w = cfg.stroke_width_px;
    Raster raster;
    raster.size = cfg.canvas_px;
    raster.brush_lo = -(w - 1) / 2;
    raster.brush_hi = w / 2;
    raster.margin_px = static_cast<int>(std::ceil(cfg.margin_fraction * cfg.canvas_px));
    raster.pixels = &img.pixels;

    // Points map into the span that keeps the whole brush clear of the margin.
    const int lo = raster.margin_px - raster.brush_lo;
    const int hi = cfg.canvas_px - 1 - raster.margin_px - raster.brush_hi;
    if (hi < lo)
        throw ConfigInvalid("margin and stroke width leave no drawable area");
    const double span = hi - lo;

    const auto to_px = [&](double v) { return lo + static_cast<int>(std::llround(v * span)); };

    for (const IndexRange& stroke : record.pen_strokes) {
        for (std::size_t i = stroke.begin; i + 1 < stroke.end; ++i) {
            const NormalizedPoint& a = record.points[i];
            const NormalizedPoint& b = record.points[i + 1];
            const std::uint8_t ink = ink_value(0.5 * (a.p + b.p), cfg, kind);
            raster.line(to_px(a.x), to_px(a.y), to_px(b.x), to_px(b.y), ink);
        }
        if (stroke.size() == 1) {
            const NormalizedPoint& a = record.points[stroke.begin];
            raster.stamp(to_px(a.x), to_px(a.y), ink_value(a.p, cfg, kind));
        }
    }
    return img;
}

// ---------------------------------------------------------------------------
// PNG encoding
// ---------------------------------------------------------------------------

namespace {

std::uint32_t crc32_table_entry(std::uint32_t n) {
    for (int k = 0; k < 8; ++k)
        n = (n & 1) ? 0xedb88320u ^ (n >> 1) : n >> 1;
    return n;
}

std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n)
            t[n] = crc32_table_entry(n);
        return t;
    }();
    crc ^= 0xffffffffu;
    for (std::uint8_t b : data)
        crc = table[(crc ^ b) & 0xff] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

std::uint32_t adler32(std::span<const std::uint8_t> data) {
    std::uint32_t a = 1, b = 0;
    for (std::uint8_t byte : data) {
        a = (a + byte) % 65521;
        b = (b + a) % 65521;
    }
    return (b << 16) | a;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               std::span<const std::uint8_t> payload) {
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    std::vector<std::uint8_t> body(type, type + 4);
    body.insert(body.end(), payload.begin(), payload.end());
    out.insert(out.end(), body.begin(), body.end());
    put_be32(out, crc32(body));
}

// Raw zlib stream with stored deflate blocks; byte-for-byte reproducible.
std::vector<std::uint8_t> zlib_stored(std::span<const std::uint8_t> raw) {
    std::vector<std::uint8_t> z;
    z.push_back(0x78); // CMF: deflate, 32K window
    z.push_back(0x01); // FLG consistent with CMF, no dict, fastest
    std::size_t off = 0;
    do {
        const std::size_t n = std::min<std::size_t>(raw.size() - off, 65535);
        const bool final = off + n == raw.size();
        z.push_back(final ? 1 : 0);
        z.push_back(static_cast<std::uint8_t>(n & 0xff));
        z.push_back(static_cast<std::uint8_t>(n >> 8));
        z.push_back(static_cast<std::uint8_t>(~n & 0xff));
        z.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + off, raw.begin() + off + n);
        off += n;
    } while (off < raw.size());
    put_be32(z, adler32(raw));
    return z;
}

} // namespace

std::vector<std::uint8_t> encode_png(const RenderedImage& image) {
    if (image.width <= 0 || image.height <= 0 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * image.height)
        throw EncodeFailure("pixel buffer does not match dimensions");

    std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

    std::vector<std::uint8_t> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(image.width));
    put_be32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // grayscale
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter method
    ihdr.push_back(0); // no interlace
    put_chunk(out, "IHDR", ihdr);

    // filter byte 0 (None) before each scanline
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(image.height) * (image.width + 1));
    for (int y = 0; y < image.height; ++y) {
        raw.push_back(0);
        const auto* row = image.pixels.data() + static_cast<std::size_t>(y) * image.width;
        raw.insert(raw.end(), row, row + image.width);
    }
    put_chunk(out, "IDAT", zlib_stored(raw));
    put_chunk(out, "IEND", {});
    return out;
}

std::vector<RenderedImage> compose_pair(const RenderedImage& reference,
                                        const RenderedImage& probe, PairLayout layout) {
    if (layout == PairLayout::TwoAttachments)
        return {reference, probe};

    if (reference.height != probe.height)
        throw SizeMismatch("side-by-side composition needs equal heights");
    constexpr int separator = 4;
    RenderedImage joined;
    joined.height = reference.height;
    joined.width = reference.width + separator + probe.width;
    joined.pixels.assign(static_cast<std::size_t>(joined.width) * joined.height, 255);
    joined.provenance = reference.provenance + "|" + probe.provenance;
    for (int y = 0; y < joined.height; ++y) {
        std::copy_n(reference.pixels.begin() + static_cast<std::size_t>(y) * reference.width,
                    reference.width,
                    joined.pixels.begin() + static_cast<std::size_t>(y) * joined.width);
        std::copy_n(probe.pixels.begin() + static_cast<std::size_t>(y) * probe.width, probe.width,
                    joined.pixels.begin() + static_cast<std::size_t>(y) * joined.width +
                        reference.width + separator);
    }
    return {joined};
}

} // namespace sigver
