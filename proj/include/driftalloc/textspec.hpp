#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace driftalloc::textspec {

// A parsed `name(key=value,key=value)` expression.
struct Call {
    std::string name;
    std::map<std::string, std::string> args;

    bool has(const std::string& key) const { return args.count(key) != 0; }
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    long long integer(const std::string& key) const;
    // Colon-separated list, e.g. `0.5:0.5`.
    std::vector<double> numbers(const std::string& key) const;
    // Throws Parse if any key outside `allowed` is present.
    void expect_only(std::initializer_list<std::string_view> allowed) const;
};

Call parse_call(std::string_view text);

double parse_double(std::string_view text, std::string_view what);

// Comma-separated numbers, or `log:lo:hi:n` / `lin:lo:hi:n` generators.
std::vector<double> parse_grid(std::string_view text);

// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace driftalloc::textspec
