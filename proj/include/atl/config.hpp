#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace atl {

/**
 * Flat `key = value` configuration with dotted keys.
 *
 * Blank lines and lines starting with '#' are ignored. Later assignments
 * override earlier ones. Values that are lists use commas.
 */
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::istream& in);
    static KeyValueConfig parse_string(const std::string& text);
    static KeyValueConfig load(const std::string& path);

    void set(const std::string& key, const std::string& value);
    bool contains(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

    std::optional<std::string> get(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;

    /// Keys not in `valid` (exact names, or prefixes ending in '.').
    std::vector<std::string> unknown_keys(const std::vector<std::string>& valid) const;

    /// Serialises entries as sorted `key = value` lines.
    std::string to_string() const;

private:
    std::map<std::string, std::string> entries_;
};

std::vector<std::string> split_list(const std::string& text);
double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);

/// `%.17g`: 17 significant digits, so the text parses back to exactly `value`.
std::string format_double(double value);

} // namespace atl
