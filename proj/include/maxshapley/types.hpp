#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maxshapley/errors.hpp"

namespace maxshapley {

// Non-negative per-player values of a maximization game.
class Valuation {
public:
    explicit Valuation(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) {
            throw DataError("valuation must contain at least one player");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
                throw DataError("valuation entry " + std::to_string(i) +
                                " must be a finite non-negative real");
            }
        }
    }

    Valuation(std::initializer_list<double> values)
        : Valuation(std::vector<double>(values)) {}

    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& values() const { return values_; }
    double max_value() const { return *std::max_element(values_.begin(), values_.end()); }

private:
    std::vector<double> values_;
};

// A subset of player indices. Presentation order is preserved as given
// (permutation-based solvers build coalitions in arrival order); the
// canonical form is sorted ascending.
class Coalition {
public:
    Coalition() = default;

    explicit Coalition(std::vector<int> members) : members_(std::move(members)) {
        auto sorted = members_;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] < 0) throw DataError("coalition member index must be non-negative");
            if (i > 0 && sorted[i] == sorted[i - 1]) {
                throw DataError("coalition member " + std::to_string(sorted[i]) + " duplicated");
            }
        }
    }

    static Coalition full(int m) {
        std::vector<int> ids(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) ids[static_cast<std::size_t>(i)] = i;
        return Coalition(std::move(ids));
    }

    bool empty() const { return members_.empty(); }
    int size() const { return static_cast<int>(members_.size()); }

    bool contains(int i) const {
        return std::find(members_.begin(), members_.end(), i) != members_.end();
    }

    // Members in presentation order.
    const std::vector<int>& members() const { return members_; }

    std::vector<int> sorted_members() const {
        auto out = members_;
        std::sort(out.begin(), out.end());
        return out;
    }

    Coalition sorted() const { return Coalition(sorted_members()); }

    // Appends a new member; presentation order records the arrival.
    Coalition with(int i) const {
        auto out = members_;
        out.push_back(i);
        return Coalition(std::move(out));
    }

    Coalition without(int i) const {
        std::vector<int> out;
        out.reserve(members_.size());
        for (int j : members_) {
            if (j != i) out.push_back(j);
        }
        return Coalition(std::move(out));
    }

    void check_bounds(int m) const {
        for (int i : members_) {
            if (i >= m) {
                throw DataError("coalition member " + std::to_string(i) +
                                " out of range for " + std::to_string(m) + " players");
            }
        }
    }

private:
    std::vector<int> members_;
};

enum class Method {
    MaxGameExact,
    FullShapley,
    MCU,
    MCA,
    KernelSHAP,
    LOO,
    MaxShapleyPipeline,
};

inline const char* to_string(Method m) {
    switch (m) {
        case Method::MaxGameExact: return "MaxGameExact";
        case Method::FullShapley: return "FullShapley";
        case Method::MCU: return "MCU";
        case Method::MCA: return "MCA";
        case Method::KernelSHAP: return "KernelSHAP";
        case Method::LOO: return "LOO";
        case Method::MaxShapleyPipeline: return "MaxShapley";
    }
    return "unknown";
}

inline const std::vector<std::pair<std::string, Method>>& method_names() {
    static const std::vector<std::pair<std::string, Method>> names = {
        {"MaxShapley", Method::MaxShapleyPipeline},
        {"FullShapley", Method::FullShapley},
        {"LOO", Method::LOO},
        {"MCU", Method::MCU},
        {"MCA", Method::MCA},
        {"KernelSHAP", Method::KernelSHAP},
        {"MaxGameExact", Method::MaxGameExact},
    };
    return names;
}

inline Method method_from_string(const std::string& name) {
    for (const auto& [n, m] : method_names()) {
        if (n == name) return m;
    }
    std::string valid;
    for (const auto& [n, m] : method_names()) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw UsageError("unknown method '" + name + "'; valid methods: " + valid);
}

// Per-player attribution scores with provenance.
struct AttributionVector {
    std::vector<double> phi;
    Method method = Method::MaxGameExact;
    std::optional<std::uint64_t> seed;
    bool clipped = false;
    // Set when clipping zeroed every entry; callers decide the fallback.
    bool degenerate = false;
    // Per-coordinate sample standard error, reported by the MC estimators.
    std::optional<std::vector<double>> std_error;

    int size() const { return static_cast<int>(phi.size()); }
    double sum() const {
        double s = 0.0;
        for (double v : phi) s += v;
        return s;
    }
};

}  // namespace maxshapley
