#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "erdob/sim.hpp"

namespace erdob {

/**
 * @brief Parsed configuration document: section -> key -> raw text.
 *
 * Sections are [scenario], [filter], [observer], [replay], [controller] and
 * [sim]. Matrices are written row by row as `a, b; c, d`, vectors as
 * `a, b`, and basis lists as `x1; x2; x1*x2^2`.
 */
struct ConfigDoc {
    std::map<std::string, std::map<std::string, std::string>> sections;

    /// Sets `section.key` to `value`, validating that the key is known.
    void set(std::string_view dotted_key, std::string value);
};

ConfigDoc parse_config_text(std::string_view text);
ConfigDoc load_config_doc(const std::filesystem::path& path);

/// Builds the simulation config; throws ConfigError naming `section.key`.
/// With `check = false` only parsing errors are raised.
SimConfig build_config(const ConfigDoc& doc, bool check = true);
SimConfig load_config(const std::filesystem::path& path);

struct CheckResult {
    enum class Level { Pass, Warn, Fail };
    std::string name;
    Level level = Level::Pass;
    std::string detail;
};

/// Independent structural checks: dimensions, D rank and F·D residual,
/// exosystem spectrum placement, observer gain and k1 admissibility.
std::vector<CheckResult> check_config(const SimConfig& cfg);

/// Effective configuration with every defaulted field filled in.
ConfigDoc effective_doc(const ConfigDoc& doc, const SimConfig& cfg);
std::string to_ini(const ConfigDoc& doc);

// Value codecs shared with the CLI and tests.
std::string format_double(double v);
std::string format_vec(const Vec& v);
std::string format_matrix(const Mat& m);
double parse_double(std::string_view text, const std::string& field);
Vec parse_vec(std::string_view text, const std::string& field);
Mat parse_matrix(std::string_view text, const std::string& field);

}  // namespace erdob
