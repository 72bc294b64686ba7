#include "atl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "atl/error.hpp"

namespace atl {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

} // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
    KeyValueConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ParameterError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(text.substr(0, eq));
        if (key.empty()) {
            throw ParameterError("config line " + std::to_string(line_no) + ": empty key");
        }
        config.set(key, trim(text.substr(eq + 1)));
    }
    return config;
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open config file '" + path + "'");
    }
    return parse(in);
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool KeyValueConfig::contains(const std::string& key) const { return entries_.count(key) != 0; }

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? parse_double(*v, key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    return v ? parse_int(*v, key) : fallback;
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key, std::uint64_t fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    std::uint64_t out = 0;
    const auto* end = v->data() + v->size();
    const auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ParameterError("key '" + key + "': expected a nonnegative integer, got '" + *v + "'");
    }
    return out;
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split_list(*v)) {
        out.push_back(parse_double(item, key));
    }
    return out;
}

std::vector<std::string> KeyValueConfig::get_strings(const std::string& key,
                                                     const std::vector<std::string>& fallback) const {
    const auto v = get(key);
    return v ? split_list(*v) : fallback;
}

std::vector<std::string> KeyValueConfig::unknown_keys(const std::vector<std::string>& valid) const {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : entries_) {
        const bool ok = std::any_of(valid.begin(), valid.end(), [&](const std::string& v) {
            return v == key || (!v.empty() && v.back() == '.' && key.rfind(v, 0) == 0);
        });
        if (!ok) {
            unknown.push_back(key);
        }
    }
    return unknown;
}

std::string KeyValueConfig::to_string() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key + " = " + value + "\n";
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    try {
        std::size_t used = 0;
        const double value = std::stod(t, &used);
        if (used == t.size()) {
            return value;
        }
    } catch (const std::exception&) {
    }
    throw ParameterError(what + ": expected a number, got '" + text + "'");
}

long long parse_int(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    long long out = 0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, out);
    if (ec != std::errc() || ptr != end || t.empty()) {
        throw ParameterError(what + ": expected an integer, got '" + text + "'");
    }
    return out;
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

} // namespace atl
