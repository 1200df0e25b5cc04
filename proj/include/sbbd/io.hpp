#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbbd/apps.hpp"
#include "sbbd/engine.hpp"
#include "sbbd/model.hpp"

namespace sbbd {

/// Malformed or inconsistent input files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kInstanceSchema = 1;

/// Standard base64 of the little-endian float64 bytes.
std::string encode_f64_base64(std::span<const double> values);
std::vector<double> decode_f64_base64(const std::string &text);

/// {"schema": 1, "space": {...}, "scenarios": {"n", "m", "u", "r"}, "provenance": {...}}.
/// With compact, u and r are base64 blocks tagged "encoding": "f64le-base64"; otherwise
/// they are arrays of rows.
nlohmann::ordered_json instance_to_json(const Instance &inst, bool compact = false);
/// Parses either layout and validates the model invariants.
Instance instance_from_json(const nlohmann::ordered_json &j);

void save_instance(const std::filesystem::path &path, const Instance &inst, bool compact = false);
Instance load_instance(const std::filesystem::path &path);

nlohmann::ordered_json to_json(const SolveConfig &cfg);
SolveConfig solve_config_from_json(const nlohmann::ordered_json &j);

/// Everything needed to rerun one command.
struct RunManifest {
    std::string experiment_id;
    std::string command;
    nlohmann::ordered_json app_params = nullptr;  // AppParams JSON, null when the input was a file
    nlohmann::ordered_json solver = nullptr;      // SolveConfig JSON
    std::map<std::string, std::string> outputs;
    std::map<std::string, std::uint64_t> seeds;
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    bool operator==(const RunManifest &) const = default;
};

nlohmann::ordered_json to_json(const RunManifest &m);
RunManifest run_manifest_from_json(const nlohmann::ordered_json &j);

nlohmann::ordered_json read_json(const std::filesystem::path &path);
/// Writes two-space indented JSON followed by a newline.
void write_json(const std::filesystem::path &path, const nlohmann::ordered_json &j);
void write_text(const std::filesystem::path &path, const std::string &text);

}  // namespace sbbd
