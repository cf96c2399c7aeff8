#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace tsbl {

std::string code_version();

/// Plot-ready table; cells are numbers written with 17 significant digits.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Writes via a temporary file and rename, creating parent directories.
void write_text_atomic(const std::string& path, const std::string& content);

/// CSV with two leading comment lines: code version and the compact config.
std::string csv_text(const Table& t, const nlohmann::json& config);
void write_csv(const std::string& path, const Table& t, const nlohmann::json& config);

/// body plus "version" and "config" members, pretty-printed with sorted keys.
void write_json(const std::string& path, nlohmann::json body, const nlohmann::json& config);
nlohmann::json read_json(const std::string& path);

/// Default output root: $TSBL_OUT when set, else `fallback`.
std::string default_output_root(const std::string& fallback);

}  // namespace tsbl
