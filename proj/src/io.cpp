#include "tsbl/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tsbl/errors.hpp"

namespace tsbl {

namespace fs = std::filesystem;

std::string code_version() { return TSBL_VERSION; }

namespace {

std::string cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << content;
    if (!out) throw ConfigError("write failed for " + tmp);
  }
  fs::rename(tmp, target);
}

std::string csv_text(const Table& t, const nlohmann::json& config) {
  std::ostringstream os;
  os << "# tsbl " << code_version() << "\n";
  os << "# config " << config.dump() << "\n";
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell(row[i]);
    os << "\n";
  }
  return os.str();
}

void write_csv(const std::string& path, const Table& t, const nlohmann::json& config) {
  write_text_atomic(path, csv_text(t, config));
}

void write_json(const std::string& path, nlohmann::json body, const nlohmann::json& config) {
  body["version"] = code_version();
  body["config"] = config;
  write_text_atomic(path, body.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string default_output_root(const std::string& fallback) {
  const char* env = std::getenv("TSBL_OUT");
  return env && *env ? std::string(env) : fallback;
}

}  // namespace tsbl
