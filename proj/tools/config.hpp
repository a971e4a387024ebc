#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace egokit::cli {

/// Command-line / configuration mistakes exit with code 1; runtime and data
/// failures exit with code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key=value configuration with section prefixes (train.steps=2000).
/// Values merge from a config file and then command-line overrides, which
/// win. Unknown keys are rejected.
class RunConfig {
public:
    struct KeySpec {
        const char* key;
        const char* default_value;
        const char* description;
    };

    static const std::vector<KeySpec>& known_keys();

    RunConfig();

    /// Parses a key=value file; '#' starts a comment. Throws on unknown
    /// keys or malformed lines.
    void load_file(const std::string& path);

    /// Single assignment, e.g. from --set train.steps=500.
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_seed(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma separated

private:
    std::map<std::string, std::string> values_;
};

}  // namespace egokit::cli
