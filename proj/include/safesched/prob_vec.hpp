#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "safesched/error.hpp"

namespace safesched {

/// Finite discrete distribution over integer time steps 0..N.
///
/// Arithmetic uses the full-precision mass. Equality and hashing use a copy
/// snapped to a 1e-12 grid, so distributions reached along different
/// arithmetic paths compare equal without feeding rounded values back into
/// later steps.
class ProbVec {
public:
    static constexpr double kSumTolerance = 1e-9;
    static constexpr double kGrid = 1e12;

    ProbVec() = default;

    explicit ProbVec(std::vector<double> mass) : mass_(std::move(mass)) {
        if (mass_.size() < 2)
            throw ModelError("distribution needs support bound >= 1 (at least two entries)");
        double sum = 0.0;
        for (double& m : mass_) {
            if (!std::isfinite(m) || m < -kSumTolerance || m > 1.0 + kSumTolerance)
                throw ModelError("distribution entry outside [0, 1]: " + std::to_string(m));
            if (std::abs(m) * kGrid < 0.5) m = 0.0;
            sum += m;
        }
        key_.reserve(mass_.size());
        for (double m : mass_) key_.push_back(snap(m));
        if (std::abs(sum - 1.0) > kSumTolerance)
            throw ModelError("distribution mass sums to " + std::to_string(sum) + ", expected 1");
    }

    ProbVec(std::initializer_list<double> mass) : ProbVec(std::vector<double>(mass)) {}

    /// Point mass at time `t` on support 0..bound.
    static ProbVec point(std::size_t t, std::size_t bound) {
        std::vector<double> m(bound + 1, 0.0);
        m.at(t) = 1.0;
        return ProbVec(std::move(m));
    }

    double operator[](std::size_t i) const { return mass_[i]; }
    std::size_t size() const { return mass_.size(); }
    /// Support bound N (last representable index).
    std::size_t bound() const { return mass_.size() - 1; }
    std::span<const double> mass() const { return mass_; }
    /// Grid-snapped entries used for equality, hashing and output.
    std::span<const double> key() const { return key_; }

    /// Largest index carrying nonzero mass.
    std::size_t max_support() const {
        for (std::size_t i = mass_.size(); i-- > 0;)
            if (mass_[i] != 0.0) return i;
        return 0;
    }

    std::size_t nonzero_count() const {
        std::size_t n = 0;
        for (double m : mass_) n += (m != 0.0);
        return n;
    }

    /// Point mass at index 0: the event has already happened.
    bool is_done() const { return key_[0] == 1.0; }

    friend bool operator==(const ProbVec& a, const ProbVec& b) { return a.key_ == b.key_; }

    std::size_t hash() const {
        std::size_t h = mass_.size();
        for (double m : key_)
            h ^= std::hash<double>{}(m) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }

private:
    static double snap(double x) {
        double s = std::round(x * kGrid) / kGrid;
        return s == 0.0 ? 0.0 : s;  // no negative zero
    }

    std::vector<double> mass_;
    std::vector<double> key_;
};

/// v'[n] = v[n+1], v'[N] = 0. Only legal when no event can occur this step,
/// i.e. v[0] = v[1] = 0.
inline ProbVec shift_decrement(const ProbVec& v) {
    if (v[0] != 0.0 || v[1] != 0.0)
        throw SemanticsError("shift_decrement would move mass off index 0 (event possible: v[0]=" +
                             std::to_string(v[0]) + ", v[1]=" + std::to_string(v[1]) + ")");
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t n = 0; n + 1 < v.size(); ++n) out[n] = v[n + 1];
    return ProbVec(std::move(out));
}

struct ConditionedVec {
    ProbVec rest;       ///< successor distribution when the event does not happen
    double event_prob;  ///< v[1]
};

/// Splits a distribution on "event happens next step". The non-event branch
/// shifts, zeroes index 0, then spreads v[1] uniformly over the remaining
/// nonzero entries (v[1] / (|nz| - 1) added to each).
inline ConditionedVec condition_nonevent(const ProbVec& v) {
    if (v[0] != 0.0) throw SemanticsError("condition_nonevent on a distribution with mass at 0");
    if (!(v[1] > 0.0)) throw SemanticsError("condition_nonevent requires v[1] > 0");
    const std::size_t nz = v.nonzero_count();
    if (nz < 2) throw SemanticsError("event certain; no non-event branch");

    const double add = v[1] / static_cast<double>(nz - 1);
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t n = 1; n + 1 < v.size(); ++n) {
        const double shifted = v[n + 1];
        out[n] = shifted != 0.0 ? shifted + add : 0.0;
    }
    return {ProbVec(std::move(out)), v[1]};
}

}  // namespace safesched

template <>
struct std::hash<safesched::ProbVec> {
    std::size_t operator()(const safesched::ProbVec& v) const noexcept { return v.hash(); }
};
