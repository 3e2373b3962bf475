#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sigver {

// Deterministic RNG. std::mt19937_64 has a bit-exact standard-mandated output
// sequence, but the standard *distributions* do not, so the mappings from raw
// engine output to doubles/ints live here and never change.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi] inclusive
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // standard normal via Box-Muller (cached spare kept for determinism)
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// SplitMix64 step; used to derive independent sub-seeds from one master seed.
std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL);

// SHA-256 hex digest (OpenSSL-backed); used for cassette keys and provenance.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Shortest round-trip decimal form of a double (std::to_chars). Deterministic
// across platforms for IEEE doubles, which the file-format tests rely on.
std::string format_double(double v);
// Strict parse; throws sigver::Error on trailing garbage / empty input.
double parse_double(std::string_view text);
long parse_long(std::string_view text);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char delim);
// Split on runs of spaces/tabs, dropping empty fields.
std::vector<std::string_view> split_whitespace(std::string_view s);
std::string to_lower(std::string_view s);

std::string base64_encode(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::string& path, std::string_view text);

} // namespace sigver
