#include "telemafuse/util.hpp"

#include <array>
#include <cstdio>
#include <mutex>

namespace tmf {

namespace {

std::mutex g_warn_mutex;
WarnSink g_warn_sink = [](std::string_view msg) {
    std::fprintf(stderr, "warning: %.*s\n", static_cast<int>(msg.size()), msg.data());
};

} // namespace

WarnSink set_warn_sink(WarnSink sink) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    WarnSink previous = std::move(g_warn_sink);
    g_warn_sink = std::move(sink);
    return previous;
}

void warn(const std::string& message) {
    std::lock_guard<std::mutex> lock(g_warn_mutex);
    if (g_warn_sink) g_warn_sink(message);
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

std::string format_u64(std::uint64_t value) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

std::string format_i64(std::int64_t value) {
    std::array<char, 32> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

bool try_parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

bool try_parse_u64(std::string_view text, std::uint64_t& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

bool try_parse_i64(std::string_view text, std::int64_t& out) {
    if (text.empty()) return false;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::string Fnv1a::hex() const {
    std::array<char, 17> buf{};
    std::uint64_t v = state_;
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return std::string(buf.data(), 16);
}

std::string digest_hex(std::string_view bytes) {
    Fnv1a h;
    h.update(bytes);
    return h.hex();
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt, std::uint64_t salt2) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt + 1) + 0xbf58476d1ce4e5b9ull * (salt2 + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace tmf
