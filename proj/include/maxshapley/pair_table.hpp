#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "maxshapley/errors.hpp"

namespace maxshapley {

// Value-independent permutation probabilities for the maximization game.
//
// Rank players 1..m ascending by value. In a uniformly random arrival order,
// the marginal contribution of the rank-i player is
//   * v_i, when it arrives first               (probability first_position = 1/m)
//   * v_i - v_j, when the rank-j player (j < i) is the running maximum at the
//     moment rank-i arrives                    (probability margin_prob(i, j))
//   * 0 otherwise (some higher-ranked player arrived earlier).
//
// margin_prob(i, j) is the probability that rank-i lands at some position k
// with rank-j placed before it and every player above rank j (other than
// rank i) placed after it. It depends only on m and the ranks, never on the
// values, so one table serves every valuation of a given size.
class PairProbabilityTable {
public:
    static PairProbabilityTable build(int m) {
        if (m < 1) throw DataError("pair probability table requires m >= 1 players");
        PairProbabilityTable t;
        t.m_ = m;
        t.probs_.resize(pair_count(m), 0.0);
        for (int rank_i = 2; rank_i <= m; ++rank_i) {
            for (int rank_j = 1; rank_j < rank_i; ++rank_j) {
                t.probs_[index(rank_i, rank_j)] = margin_probability(m, rank_j);
            }
        }
        return t;
    }

    int player_count() const { return m_; }

    // Probability that a given player arrives first (margin = its own value).
    double first_position() const { return 1.0 / static_cast<double>(m_); }

    // Probability, over uniform arrival orders, that the rank-i player's
    // marginal contribution equals v_i - v_j. Requires 1 <= rank_j < rank_i <= m.
    double margin_prob(int rank_i, int rank_j) const {
        if (rank_j < 1 || rank_i <= rank_j || rank_i > m_) {
            throw DataError("margin_prob requires 1 <= rank_j < rank_i <= m");
        }
        return probs_[index(rank_i, rank_j)];
    }

    // --- sidecar file format ---
    // header: magic "MSPT" (4 bytes), version u32, m u32, all little-endian;
    // then the margin probabilities as 8-byte doubles, row-major over
    // (rank_i = 2..m, rank_j = 1..rank_i-1). first_position is 1/m by
    // construction and is not stored.
    static constexpr std::uint32_t kFormatVersion = 1;

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open '" + path + "' for writing");
        out.write("MSPT", 4);
        write_u32(out, kFormatVersion);
        write_u32(out, static_cast<std::uint32_t>(m_));
        for (double p : probs_) {
            out.write(reinterpret_cast<const char*>(&p), sizeof(double));
        }
        if (!out) throw DataError("failed writing pair table to '" + path + "'");
    }

    static PairProbabilityTable load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open pair table file '" + path + "'");
        char magic[4];
        in.read(magic, 4);
        if (!in || std::memcmp(magic, "MSPT", 4) != 0) {
            throw DataError("'" + path + "' is not a pair table file (bad magic)");
        }
        std::uint32_t version = read_u32(in, path);
        if (version != kFormatVersion) {
            throw DataError("unsupported pair table version " + std::to_string(version));
        }
        std::uint32_t m = read_u32(in, path);
        if (m < 1 || m > 4096) throw DataError("pair table '" + path + "' has invalid m");

        PairProbabilityTable t;
        t.m_ = static_cast<int>(m);
        t.probs_.resize(pair_count(t.m_));
        for (double& p : t.probs_) {
            in.read(reinterpret_cast<char*>(&p), sizeof(double));
            if (!in) throw DataError("pair table '" + path + "' truncated");
            if (!(p >= 0.0 && p <= 1.0)) {
                throw DataError("pair table '" + path + "' holds an out-of-range probability");
            }
        }
        return t;
    }

private:
    static std::size_t pair_count(int m) {
        return static_cast<std::size_t>(m) * (m - 1) / 2;
    }

    // Row-major triangular index for rank_i in [2, m], rank_j in [1, rank_i).
    static std::size_t index(int rank_i, int rank_j) {
        std::size_t row_start = static_cast<std::size_t>(rank_i - 1) * (rank_i - 2) / 2;
        return row_start + static_cast<std::size_t>(rank_j - 1);
    }

    // Sums, over positions k = 2..j+1, the probability of the joint event
    //   A: rank-i sits at position k                          1/m
    //   B: rank-j sits among the first k-1 positions          (k-1)/(m-1)
    //   C: the m-j-1 players above rank j (excluding rank i)
    //      all sit after position k, so rank-j is still the
    //      running maximum when rank-i arrives                prod_{l=1}^{m-j-1} (m-k-l+1)/(m-1-l)
    // The result depends only on rank_j, not rank_i.
    static double margin_probability(int m, int rank_j) {
        const double p_a = 1.0 / static_cast<double>(m);
        double total = 0.0;
        for (int k = 2; k <= rank_j + 1; ++k) {
            const double p_b = static_cast<double>(k - 1) / static_cast<double>(m - 1);
            double p_c = 1.0;
            for (int l = 1; l <= m - rank_j - 1; ++l) {
                p_c *= static_cast<double>(m - k - l + 1) / static_cast<double>(m - 1 - l);
            }
            total += p_a * p_b * p_c;
        }
        return total;
    }

    static void write_u32(std::ofstream& out, std::uint32_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }

    static std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw DataError("pair table '" + path + "' truncated");
        return v;
    }

    int m_ = 0;
    std::vector<double> probs_;
};

inline PairProbabilityTable build_pair_probability_table(int m) {
    return PairProbabilityTable::build(m);
}

}  // namespace maxshapley
