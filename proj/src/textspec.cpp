#include "driftalloc/textspec.hpp"

#include "driftalloc/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace driftalloc::textspec {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what) {
    text = trim(text);
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        fail(ErrorCode::Parse, "invalid number '" + std::string(text) + "' for " + std::string(what));
    }
    return v;
}

double Call::number(const std::string& key) const {
    const auto it = args.find(key);
    if (it == args.end()) fail(ErrorCode::Parse, name + ": missing argument '" + key + "'");
    return parse_double(it->second, name + "." + key);
}

double Call::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

long long Call::integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 1e15) {
        fail(ErrorCode::Parse, name + "." + key + " must be an integer");
    }
    return static_cast<long long>(v);
}

std::vector<double> Call::numbers(const std::string& key) const {
    const auto it = args.find(key);
    if (it == args.end()) fail(ErrorCode::Parse, name + ": missing argument '" + key + "'");
    std::vector<double> out;
    for (auto part : split(it->second, ':')) out.push_back(parse_double(part, name + "." + key));
    return out;
}

void Call::expect_only(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [k, v] : args) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            fail(ErrorCode::Parse, name + ": unknown argument '" + k + "'");
        }
    }
}

Call parse_call(std::string_view text) {
    text = trim(text);
    const auto open = text.find('(');
    if (open == std::string_view::npos || text.back() != ')') {
        fail(ErrorCode::Parse, "expected name(key=value,...) but got '" + std::string(text) + "'");
    }
    Call call;
    call.name = lower(trim(text.substr(0, open)));
    if (call.name.empty()) fail(ErrorCode::Parse, "missing name in '" + std::string(text) + "'");
    const auto body = trim(text.substr(open + 1, text.size() - open - 2));
    if (body.empty()) return call;
    for (auto item : split(body, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorCode::Parse, call.name + ": expected key=value but got '" + std::string(item) + "'");
        }
        auto key = lower(trim(item.substr(0, eq)));
        auto value = std::string(trim(item.substr(eq + 1)));
        if (key.empty() || value.empty()) fail(ErrorCode::Parse, call.name + ": empty key or value");
        if (!call.args.emplace(key, value).second) fail(ErrorCode::Parse, call.name + ": duplicate key '" + key + "'");
    }
    return call;
}

std::vector<double> parse_grid(std::string_view text) {
    text = trim(text);
    std::vector<double> grid;
    if (text.rfind("log:", 0) == 0 || text.rfind("lin:", 0) == 0) {
        const auto parts = split(text.substr(4), ':');
        if (parts.size() != 3) fail(ErrorCode::Parse, "grid generator needs lo:hi:n");
        const double lo = parse_double(parts[0], "grid lo");
        const double hi = parse_double(parts[1], "grid hi");
        const double n = parse_double(parts[2], "grid n");
        if (n < 1 || n != std::floor(n)) fail(ErrorCode::Parse, "grid n must be a positive integer");
        const bool log_spaced = text[1] == 'o';
        if (log_spaced && !(lo > 0.0 && hi > 0.0)) fail(ErrorCode::Parse, "log grid needs positive bounds");
        const auto count = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
            grid.push_back(log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                                      : lo + f * (hi - lo));
        }
    } else {
        for (auto part : split(text, ',')) grid.push_back(parse_double(part, "grid"));
    }
    if (grid.empty()) fail(ErrorCode::Parse, "empty grid");
    return grid;
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace driftalloc::textspec
