#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <vector>

namespace maxshapley::judge {

// Lowercased alphanumeric tokens.
inline std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

inline long long word_count(const std::string& text) {
    return static_cast<long long>(split_words(text).size());
}

inline std::set<std::string> term_set(const std::string& text) {
    auto words = split_words(text);
    return {words.begin(), words.end()};
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> sentences;
    std::string current;
    for (char ch : text) {
        if (ch == '.' || ch == '!' || ch == '?') {
            auto t = trim(current);
            if (!t.empty()) sentences.push_back(t);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    auto t = trim(current);
    if (!t.empty()) sentences.push_back(t);
    return sentences;
}

// Fraction of the keypoint's distinct terms present in the source text;
// 0 when the keypoint has no terms.
inline double term_overlap_fraction(const std::string& keypoint, const std::string& source) {
    auto kp_terms = term_set(keypoint);
    if (kp_terms.empty()) return 0.0;
    auto src_terms = term_set(source);
    std::size_t matched = 0;
    for (const auto& t : kp_terms) {
        if (src_terms.count(t)) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(kp_terms.size());
}

inline std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace maxshapley::judge
