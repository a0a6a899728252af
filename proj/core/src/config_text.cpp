#include "echorec/config_text.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "echorec/errors.hpp"

namespace echorec {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& msg) {
    std::ostringstream os;
    os << path << ":" << line << ": " << msg;
    raise(ErrorCode::ParseError, os.str());
}

}  // namespace

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

std::string ConfigSection::get_string(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
        raise(ErrorCode::ParseError,
              "missing key '" + key + "' in section [" + type + " " + name + "]");
    return it->second;
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double ConfigSection::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        raise(ErrorCode::ParseError, "key '" + key + "': expected a number, got '" + v + "'");
    return d;
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long ConfigSection::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    char* end = nullptr;
    long n = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        raise(ErrorCode::ParseError, "key '" + key + "': expected an integer, got '" + v + "'");
    return n;
}

long ConfigSection::get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_string(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    raise(ErrorCode::ParseError, "key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> ConfigSection::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& w : split_words(get_string(key))) {
        char* end = nullptr;
        double d = std::strtod(w.c_str(), &end);
        if (end == w.c_str() || *end != '\0')
            raise(ErrorCode::ParseError, "key '" + key + "': expected numbers, got '" + w + "'");
        out.push_back(d);
    }
    return out;
}

std::vector<std::string> ConfigSection::get_words(const std::string& key) const {
    return split_words(get_string(key));
}

const ConfigSection* ConfigFile::find(const std::string& type) const {
    for (const auto& s : sections)
        if (s.type == type) return &s;
    return nullptr;
}

const ConfigSection* ConfigFile::find(const std::string& type, const std::string& name) const {
    for (const auto& s : sections)
        if (s.type == type && s.name == name) return &s;
    return nullptr;
}

std::vector<const ConfigSection*> ConfigFile::find_all(const std::string& type) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
        if (s.type == type) out.push_back(&s);
    return out;
}

const ConfigSection& ConfigFile::require(const std::string& type) const {
    const ConfigSection* s = find(type);
    if (!s) raise(ErrorCode::ParseError, path + ": missing required section [" + type + "]");
    return *s;
}

ConfigFile parse_config_text(const std::string& text, const std::string& path_for_errors) {
    ConfigFile cfg;
    cfg.path = path_for_errors;
    cfg.sections.push_back(ConfigSection{});  // implicit global section

    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = raw;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                parse_fail(path_for_errors, line_no, "unterminated section header");
            const std::string inner = trim(line.substr(1, line.size() - 2));
            if (inner.empty()) parse_fail(path_for_errors, line_no, "empty section header");
            ConfigSection sec;
            sec.line = line_no;
            const size_t sp = inner.find_first_of(" \t");
            if (sp == std::string::npos) {
                sec.type = inner;
            } else {
                sec.type = inner.substr(0, sp);
                sec.name = trim(inner.substr(sp + 1));
            }
            cfg.sections.push_back(std::move(sec));
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            parse_fail(path_for_errors, line_no, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) parse_fail(path_for_errors, line_no, "empty key");
        ConfigSection& sec = cfg.sections.back();
        if (sec.values.count(key))
            parse_fail(path_for_errors, line_no, "duplicate key '" + key + "'");
        sec.values[key] = value;
        sec.value_lines[key] = line_no;
    }

    return cfg;
}

ConfigFile load_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str(), path);
}

}  // namespace echorec
