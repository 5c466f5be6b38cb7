#pragma once

#include <fstream>
#include <string>

#include "gazekit/core.hpp"
#include "json.hpp"

namespace gazekit {

template <typename Fn>
std::vector<RecordError> for_each_jsonl_line(const fs::path& path, Fn&& on_line) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<RecordError> errors;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            on_line(nlohmann::json::parse(line), line_no);
        } catch (const std::exception& e) {
            errors.push_back({line_no, {}, e.what()});
        }
    }
    return errors;
}

}  // namespace gazekit
