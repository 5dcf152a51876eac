#pragma once

#include <string>
#include <vector>

namespace maxshapley {

// One retrieved information source.
struct SourceDoc {
    std::string id;
    std::string title;
    std::string text;
};

using SourceList = std::vector<SourceDoc>;

}  // namespace maxshapley
