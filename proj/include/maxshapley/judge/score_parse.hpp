#pragma once

#include <cctype>
#include <cstdlib>
#include <string>
#include <vector>

#include "maxshapley/errors.hpp"

namespace maxshapley::judge {

// Extracts the judge score from a raw completion: scan every decimal token
// and return the last one lying in [0, 1] (within 1e-9 of the bounds).
// No numeric token at all is a parse error; numeric tokens that are all out
// of range are a range error — scores are never silently clamped.
inline double parse_judge_score(const std::string& raw) {
    std::vector<double> numbers;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const bool digit = std::isdigit(static_cast<unsigned char>(raw[pos])) != 0;
        if (!digit) {
            ++pos;
            continue;
        }
        std::size_t end = pos;
        while (end < raw.size() && std::isdigit(static_cast<unsigned char>(raw[end]))) ++end;
        if (end < raw.size() && raw[end] == '.' && end + 1 < raw.size() &&
            std::isdigit(static_cast<unsigned char>(raw[end + 1]))) {
            ++end;
            while (end < raw.size() && std::isdigit(static_cast<unsigned char>(raw[end]))) ++end;
        }
        numbers.push_back(std::strtod(raw.substr(pos, end - pos).c_str(), nullptr));
        pos = end;
    }

    if (numbers.empty()) {
        throw OracleError("no numeric score found in judge output: \"" + raw + "\"");
    }
    for (auto it = numbers.rbegin(); it != numbers.rend(); ++it) {
        if (*it >= -1e-9 && *it <= 1.0 + 1e-9) {
            return std::min(1.0, std::max(0.0, *it));
        }
    }
    throw OracleError("judge output holds no score in [0,1]: \"" + raw + "\"");
}

}  // namespace maxshapley::judge
