#pragma once

// Minimal TOML reader covering the subset used by run configs: [sections],
// scalar key = value pairs (numbers, booleans, quoted strings), flat
// homogeneous arrays, and # comments.  Errors carry the 1-based line number.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace delaycir {

struct TomlValue {
    enum class Kind { Number, String, Boolean, NumberArray, StringArray };
    Kind kind = Kind::Number;
    double number = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<double> numbers;
    std::vector<std::string> strings;
    int line = 0;
};

class TomlTable {
public:
    using Section = std::map<std::string, TomlValue>;

    const TomlValue* find(const std::string& section, const std::string& key) const {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    bool has_section(const std::string& section) const {
        return sections_.count(section) != 0;
    }

    const std::map<std::string, Section>& sections() const { return sections_; }

    void insert(const std::string& section, const std::string& key, TomlValue value, int line) {
        auto& sec = sections_[section];
        if (sec.count(key))
            throw std::runtime_error("line " + std::to_string(line) + ": duplicate key '" +
                                     key + "' in [" + section + "]");
        sec.emplace(key, std::move(value));
    }

    void declare_section(const std::string& section, int line) {
        if (sections_.count(section))
            throw std::runtime_error("line " + std::to_string(line) + ": duplicate section [" +
                                     section + "]");
        sections_[section];
    }

private:
    std::map<std::string, Section> sections_;
};

namespace toml_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drop a trailing comment, honouring quotes so '#' inside strings survives.
inline std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

inline bool valid_bare_key(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

[[noreturn]] inline void fail(int line, const std::string& what) {
    throw std::runtime_error("line " + std::to_string(line) + ": " + what);
}

inline std::string parse_string_literal(const std::string& tok, int line) {
    if (tok.size() < 2 || tok.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
        char c = tok[i];
        if (c == '\\') {
            if (i + 2 >= tok.size()) fail(line, "dangling escape in string");
            char e = tok[++i];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: fail(line, std::string("unsupported escape '\\") + e + "'");
            }
        } else if (c == '"') {
            fail(line, "unexpected '\"' inside string");
        } else {
            out += c;
        }
    }
    return out;
}

inline double parse_number(const std::string& tok, int line) {
    if (tok.empty()) fail(line, "empty value");
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + tok.size()) fail(line, "cannot parse '" + tok + "' as a number");
    return v;
}

// Split a bracketed array body on top-level commas, respecting strings.
inline std::vector<std::string> split_array(const std::string& body, int line) {
    std::vector<std::string> parts;
    std::string cur;
    bool in_string = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (in_string) {
            cur += c;
            if (c == '\\' && i + 1 < body.size()) cur += body[++i];
            else if (c == '"') in_string = false;
        } else if (c == '"') {
            cur += c;
            in_string = true;
        } else if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else if (c == '[' || c == ']') {
            fail(line, "nested arrays are not supported");
        } else {
            cur += c;
        }
    }
    std::string last = trim(cur);
    if (!last.empty()) parts.push_back(last);
    for (const auto& p : parts)
        if (p.empty()) fail(line, "empty array element");
    return parts;
}

inline TomlValue parse_value(const std::string& raw, int line) {
    TomlValue v;
    v.line = line;
    if (raw.empty()) fail(line, "missing value");
    if (raw.front() == '"') {
        v.kind = TomlValue::Kind::String;
        v.str = parse_string_literal(raw, line);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = TomlValue::Kind::Boolean;
        v.boolean = raw == "true";
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') fail(line, "unterminated array");
        auto parts = split_array(raw.substr(1, raw.size() - 2), line);
        if (parts.empty()) fail(line, "empty arrays are not supported");
        if (parts.front().front() == '"') {
            v.kind = TomlValue::Kind::StringArray;
            for (const auto& p : parts) {
                if (p.front() != '"') fail(line, "mixed array element types");
                v.strings.push_back(parse_string_literal(p, line));
            }
        } else {
            v.kind = TomlValue::Kind::NumberArray;
            for (const auto& p : parts) {
                if (p.front() == '"') fail(line, "mixed array element types");
                v.numbers.push_back(parse_number(p, line));
            }
        }
        return v;
    }
    v.kind = TomlValue::Kind::Number;
    v.number = parse_number(raw, line);
    return v;
}

}  // namespace toml_detail

inline TomlTable parse_toml(std::istream& in) {
    TomlTable table;
    std::string section;
    std::string line;
    int lineno = 0;
    bool section_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = toml_detail::trim(toml_detail::strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') toml_detail::fail(lineno, "unterminated section header");
            section = toml_detail::trim(s.substr(1, s.size() - 2));
            if (!toml_detail::valid_bare_key(section))
                toml_detail::fail(lineno, "invalid section name '" + section + "'");
            table.declare_section(section, lineno);
            section_seen = true;
            continue;
        }
        std::size_t eq = std::string::npos;
        bool in_string = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            char c = s[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
            } else if (c == '"') {
                in_string = true;
            } else if (c == '=') {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos)
            toml_detail::fail(lineno, "expected 'key = value'");
        std::string key = toml_detail::trim(s.substr(0, eq));
        std::string raw = toml_detail::trim(s.substr(eq + 1));
        if (!toml_detail::valid_bare_key(key))
            toml_detail::fail(lineno, "invalid key '" + key + "'");
        if (!section_seen)
            toml_detail::fail(lineno, "key '" + key + "' appears before any [section]");
        table.insert(section, key, toml_detail::parse_value(raw, lineno), lineno);
    }
    return table;
}

inline TomlTable parse_toml_string(const std::string& text) {
    std::istringstream in(text);
    return parse_toml(in);
}

inline TomlTable load_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    return parse_toml(in);
}

}  // namespace delaycir
