// Copyright 2026 The GPFN Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpfn/error.hpp"

namespace gpfn {

/// Parse or lookup failure in a run configuration; the message carries the
/// source, line and field.
class ConfigParseError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Line-oriented `key = value` configuration with `[section]` headers.
/// `#` and `;` start comments. Keys are addressed as "section.key".
class Config {
public:
    struct Entry {
        std::string value;
        int line = 0;  // 0 for values set programmatically
    };

    static Config parse(std::string_view text, std::string source = "<config>") {
        Config cfg;
        cfg.source_ = std::move(source);
        std::string section;
        std::istringstream in{std::string(text)};
        std::string line;
        int number = 0;
        while (std::getline(in, line)) {
            ++number;
            const std::string s = trim(strip_comment(line));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']' || s.size() < 3) cfg.fail(number, "malformed section header '" + s + "'");
                section = trim(s.substr(1, s.size() - 2));
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) cfg.fail(number, "expected 'key = value', got '" + s + "'");
            const std::string key = trim(s.substr(0, eq));
            if (key.empty()) cfg.fail(number, "empty key");
            if (section.empty()) cfg.fail(number, "key '" + key + "' appears before any [section]");
            const std::string full = section + "." + key;
            if (cfg.entries_.count(full)) cfg.fail(number, "duplicate key '" + full + "'");
            cfg.entries_[full] = {trim(s.substr(eq + 1)), number};
        }
        return cfg;
    }

    static Config load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigParseError("cannot open config file " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path.string());
    }

    /// Sets or overrides "section.key".
    void set(const std::string& key, std::string value) { entries_[key] = {std::move(value), 0}; }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? fallback : it->second.value;
    }

    std::string require_string(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigParseError(source_ + ": missing required field '" + key + "'");
        return it->second.value;
    }

    template <class Int>
    Int get_int(const std::string& key, Int fallback) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        return parse_int<Int>(it->first, it->second);
    }

    double get_double(const std::string& key, double fallback) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        return parse_double(it->first, it->second);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        const std::string& v = it->second.value;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        field_fail(it->first, it->second, "expected a boolean");
    }

    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        std::vector<std::string> out;
        std::istringstream in(it->second.value);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty()) field_fail(it->first, it->second, "empty list element");
            out.push_back(item);
        }
        return out;
    }

    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const {
        if (!has(key)) return fallback;
        const auto& entry = entries_.at(key);
        std::vector<int> out;
        for (const auto& item : get_list(key, {})) out.push_back(parse_int<int>(key, Entry{item, entry.line}));
        return out;
    }

    /// Sorted "section.key=value" lines; stable input for hashing.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, e] : entries_) out += k + "=" + e.value + "\n";
        return out;
    }

    const std::string& source() const noexcept { return source_; }

private:
    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find_first_of("#;");
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    [[noreturn]] void fail(int line, const std::string& what) const {
        throw ConfigParseError(source_ + ":" + std::to_string(line) + ": " + what);
    }

    [[noreturn]] void field_fail(const std::string& key, const Entry& e, const std::string& what) const {
        std::string where = source_;
        if (e.line > 0) where += ":" + std::to_string(e.line);
        throw ConfigParseError(where + ": field '" + key + "': " + what + ", got '" + e.value + "'");
    }

    template <class Int>
    Int parse_int(const std::string& key, const Entry& e) const {
        Int v{};
        const auto* first = e.value.data();
        const auto* last = first + e.value.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) field_fail(key, e, "expected an integer");
        return v;
    }

    double parse_double(const std::string& key, const Entry& e) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(e.value, &used);
            if (used != e.value.size()) field_fail(key, e, "expected a number");
            return v;
        } catch (const std::logic_error&) {
            field_fail(key, e, "expected a number");
        }
    }

    std::string source_ = "<config>";
    std::map<std::string, Entry> entries_;
};

}  // namespace gpfn
