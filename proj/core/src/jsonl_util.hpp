#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "logicforge/errors.hpp"

namespace logicforge::detail {

using ordered_json = nlohmann::ordered_json;

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// Calls fn(line_no, record) per non-empty line; 1-based line numbers.
// Parse failures surface as MalformedLine.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json record;
    try {
      record = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedLine(line_no, std::string("invalid JSON: ") + e.what());
    }
    fn(line_no, record);
  }
}

template <typename T>
T field(const ordered_json& j, const char* key, std::size_t line_no) {
  if (!j.contains(key))
    throw MalformedLine(line_no, std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw MalformedLine(line_no, std::string("field \"") + key + "\" has the wrong type");
  }
}

}  // namespace logicforge::detail
