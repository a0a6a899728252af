#pragma once

#include <map>
#include <string>
#include <vector>

namespace echorec {

/// One [type name] block of a config file plus its key/value pairs.
/// Keys appearing before any section header land in an implicit section
/// with empty type and name.
struct ConfigSection {
    std::string type;
    std::string name;
    int line = 0;
    std::map<std::string, std::string> values;
    std::map<std::string, int> value_lines;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::string> get_words(const std::string& key) const;
};

/// Parsed config file: ordered sections, '#' comments, `key = value` lines,
/// `[type]` or `[type name]` headers.
struct ConfigFile {
    std::string path;
    std::vector<ConfigSection> sections;

    const ConfigSection* find(const std::string& type) const;
    const ConfigSection* find(const std::string& type, const std::string& name) const;
    std::vector<const ConfigSection*> find_all(const std::string& type) const;
    const ConfigSection& require(const std::string& type) const;
};

ConfigFile parse_config_text(const std::string& text, const std::string& path_for_errors);
ConfigFile load_config_file(const std::string& path);

std::vector<std::string> split_words(const std::string& s);

}  // namespace echorec
