#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pvhc/network.hpp"

namespace pvhc {

/// Parses a feeder document. Structural problems throw ParseError; semantic
/// checks are left to validate() so callers can report them all at once.
NetworkModel parse_feeder(const nlohmann::json& doc, const std::string& context = "feeder");
NetworkModel load_feeder(const std::filesystem::path& path);

nlohmann::json feeder_to_json(const NetworkModel& model);

/// Reads a whole file; throws ParseError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace pvhc
