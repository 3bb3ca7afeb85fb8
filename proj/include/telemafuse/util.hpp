#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

// ---- warnings ------------------------------------------------------------

using WarnSink = std::function<void(std::string_view)>;

/// Replace the global warning sink (default writes "warning: ..." to stderr).
/// Returns the previous sink so callers can restore it.
WarnSink set_warn_sink(WarnSink sink);

void warn(const std::string& message);

// ---- numeric text I/O ----------------------------------------------------
// All numeric serialization goes through these helpers: std::to_chars with
// shortest round-trip formatting and std::from_chars for parsing. This keeps
// every file format locale-independent and makes write->read the identity on
// doubles, which the model artifact and trip CSV round-trip contracts rely on.

std::string format_double(double value);
std::string format_u64(std::uint64_t value);
std::string format_i64(std::int64_t value);

/// Parse a full string as a double. Returns false on trailing junk or empty input.
bool try_parse_double(std::string_view text, double& out);
bool try_parse_u64(std::string_view text, std::uint64_t& out);
bool try_parse_i64(std::string_view text, std::int64_t& out);

// ---- hashing -------------------------------------------------------------

/// FNV-1a 64-bit, used for dataset digests and determinism checks.
class Fnv1a {
public:
    void update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ull;
        }
    }
    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string digest_hex(std::string_view bytes);

// ---- seed derivation -----------------------------------------------------

/// Derive an independent stream seed from a master seed and a salt.
/// SplitMix64 finalizer; stable across platforms.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt, std::uint64_t salt2 = 0);

// ---- small string helpers ------------------------------------------------

std::vector<std::string_view> split_csv_line(std::string_view line);
std::string strip_cr(std::string line);

} // namespace tmf
