#pragma once

#include "errors.hpp"
#include "numeric.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace scum {

// Coefficients a_1, a_2, ... given by an explicit prefix a_1..a_P followed by
// a closed-form tail for j > P:
//   power:     a_j = c * j^{-s}
//   geometric: a_j = c * r^{j-1}
class CoefficientSequence {
public:
    enum class Tail { none, power, geometric };

    CoefficientSequence() = default;

    static CoefficientSequence finite(std::vector<double> prefix) {
        return CoefficientSequence(std::move(prefix), Tail::none, 0.0, 0.0);
    }
    static CoefficientSequence power(std::vector<double> prefix, double c, double s) {
        if (!(s > 0.0)) throw InvalidArgument("power tail exponent must be positive");
        return CoefficientSequence(std::move(prefix), Tail::power, c, s);
    }
    static CoefficientSequence geometric(std::vector<double> prefix, double c, double r) {
        if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("geometric tail ratio must lie in [0,1)");
        return CoefficientSequence(std::move(prefix), Tail::geometric, c, r);
    }

    [[nodiscard]] double operator()(std::size_t j) const {
        if (j == 0) throw InvalidArgument("coefficients are indexed from 1");
        if (j <= prefix_.size()) return prefix_[j - 1];
        switch (tail_) {
        case Tail::none: return 0.0;
        case Tail::power: return c_ * std::pow(static_cast<double>(j), -param_);
        case Tail::geometric: return c_ * std::pow(param_, static_cast<double>(j - 1));
        }
        return 0.0;
    }

    [[nodiscard]] std::span<const double> prefix() const { return prefix_; }
    [[nodiscard]] Tail tail() const { return tail_; }
    [[nodiscard]] double tail_scale() const { return c_; }
    [[nodiscard]] double tail_parameter() const { return param_; }
    [[nodiscard]] bool has_tail() const { return tail_ != Tail::none && c_ != 0.0; }

    // Last index with a nonzero coefficient, or nullopt-like max when the tail is active.
    [[nodiscard]] std::size_t support_end() const {
        if (has_tail()) return std::numeric_limits<std::size_t>::max();
        std::size_t end = prefix_.size();
        while (end > 0 && prefix_[end - 1] == 0.0) --end;
        return end;
    }

    [[nodiscard]] bool abs_summable() const {
        return !has_tail() || tail_ == Tail::geometric || param_ > 1.0;
    }

    // Encloses sum_{j >= from} |a_j|; hi = +inf when the series diverges.
    [[nodiscard]] Interval abs_sum(std::size_t from) const {
        from = std::max<std::size_t>(from, 1);
        Interval total = prefix_sum(from, [](double a) { return std::abs(a); });
        const std::size_t start = std::max(from, prefix_.size() + 1);
        if (!has_tail()) return total;
        const double c = std::abs(c_);
        if (tail_ == Tail::geometric) {
            total += geometric_tail(c, param_, start);
        } else {
            if (param_ <= 1.0) return {total.lo, kInf};
            total += Interval::point(c) * hurwitz_zeta(param_, static_cast<double>(start)).enclosure();
        }
        return clamp_nonnegative(total);
    }

    // Encloses sum_{j >= from} a_j.
    [[nodiscard]] Interval signed_sum(std::size_t from) const {
        from = std::max<std::size_t>(from, 1);
        Interval total = prefix_sum(from, [](double a) { return a; });
        const std::size_t start = std::max(from, prefix_.size() + 1);
        if (!has_tail()) return total;
        if (tail_ == Tail::geometric) return total + signed_scale(geometric_tail(std::abs(c_), param_, start));
        if (param_ <= 1.0) throw DivergentSeries("coefficient series is not summable");
        return total + signed_scale(Interval::point(std::abs(c_)) * hurwitz_zeta(param_, static_cast<double>(start)).enclosure());
    }

    // Encloses sum_{j >= from} sum_{k > j} |a_k| = sum_{k > from} (k - from) |a_k|.
    [[nodiscard]] Interval abs_tail_of_tails(std::size_t from) const {
        CompensatedSum prefix_part;
        double magnitude = 0.0;
        for (std::size_t k = from + 1; k <= prefix_.size(); ++k) {
            const double term = static_cast<double>(k - from) * std::abs(prefix_[k - 1]);
            prefix_part.add(term);
            magnitude += term;
        }
        Interval total = widen(Interval::point(prefix_part.value()), rounding_slack(magnitude, prefix_.size()));
        if (!has_tail()) return clamp_nonnegative(total);
        const std::size_t start = std::max(from + 1, prefix_.size() + 1);
        const double c = std::abs(c_);
        const double J = static_cast<double>(from);
        const double a = static_cast<double>(start);
        if (tail_ == Tail::geometric) {
            // sum_{k >= a} (k - J) c r^{k-1} = c r^{a-1} [ (a - J)/(1-r) + r/(1-r)^2 ]
            const double r = param_;
            const double value = c * std::pow(r, a - 1.0) * ((a - J) / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
            total += widen(Interval::point(value), 16.0 * std::numeric_limits<double>::epsilon() * value);
        } else {
            if (param_ <= 2.0) return {total.lo, kInf};
            const Interval z1 = hurwitz_zeta(param_ - 1.0, a).enclosure();
            const Interval z0 = hurwitz_zeta(param_, a).enclosure();
            total += Interval::point(c) * (z1 - Interval::point(J) * z0);
        }
        return clamp_nonnegative(total);
    }

    // sum_{i >= 0} a_{first + i} * w[(phase + i) mod |w|], the pairing of the
    // coefficients with a periodic weight word starting at lag `first`.
    [[nodiscard]] double periodic_sum(std::size_t first, std::span<const double> w, std::size_t phase) const {
        if (w.empty()) throw InvalidArgument("periodic weight word must be nonempty");
        first = std::max<std::size_t>(first, 1);
        const std::size_t p = w.size();
        CompensatedSum total;
        for (std::size_t j = first; j <= prefix_.size(); ++j) total.add(prefix_[j - 1] * w[(phase + j - first) % p]);
        if (!has_tail()) return total.value();
        const std::size_t start = std::max(first, prefix_.size() + 1);
        const std::size_t shift = phase + (start - first);
        bool all_zero = true;
        for (double x : w) all_zero = all_zero && x == 0.0;
        if (all_zero) return total.value();
        for (std::size_t i = 0; i < p; ++i) {
            const double weight = w[(shift + i) % p];
            if (weight == 0.0) continue;
            const double lag = static_cast<double>(start + i);
            double residue;
            if (tail_ == Tail::geometric) {
                residue = c_ * std::pow(param_, lag - 1.0) / (1.0 - std::pow(param_, static_cast<double>(p)));
            } else {
                if (param_ <= 1.0) throw DivergentSeries("coefficient series is not summable");
                const double pp = static_cast<double>(p);
                residue = c_ * std::pow(pp, -param_) * hurwitz_zeta(param_, lag / pp).value;
            }
            total.add(weight * residue);
        }
        return total.value();
    }

    // Smallest lag J with sum_{j >= J} |a_j| <= eps.
    [[nodiscard]] std::size_t negligible_from(double eps) const {
        if (!abs_summable()) throw DivergentSeries("coefficient series is not summable");
        std::size_t lo = 1, hi = 1;
        while (abs_sum(hi).hi > eps) {
            lo = hi;
            hi *= 2;
            if (hi > (std::size_t{1} << 40)) throw DivergentSeries("tail does not fall below tolerance");
        }
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (abs_sum(mid).hi <= eps) hi = mid;
            else lo = mid + 1;
        }
        return hi;
    }

private:
    CoefficientSequence(std::vector<double> prefix, Tail tail, double c, double param)
        : prefix_(std::move(prefix)), tail_(tail), c_(c), param_(param) {
        for (double a : prefix_)
            if (!std::isfinite(a)) throw InvalidArgument("coefficients must be finite");
        if (!std::isfinite(c_)) throw InvalidArgument("tail scale must be finite");
    }

    static double rounding_slack(double magnitude, std::size_t terms) {
        return 2.0 * static_cast<double>(terms + 1) * std::numeric_limits<double>::epsilon() * magnitude;
    }

    template <class F>
    [[nodiscard]] Interval prefix_sum(std::size_t from, F f) const {
        CompensatedSum s;
        double magnitude = 0.0;
        for (std::size_t j = from; j <= prefix_.size(); ++j) {
            s.add(f(prefix_[j - 1]));
            magnitude += std::abs(prefix_[j - 1]);
        }
        return widen(Interval::point(s.value()), rounding_slack(magnitude, prefix_.size()));
    }

    static Interval geometric_tail(double c, double r, std::size_t start) {
        const double value = c * std::pow(r, static_cast<double>(start) - 1.0) / (1.0 - r);
        return widen(Interval::point(value), 8.0 * std::numeric_limits<double>::epsilon() * value);
    }

    [[nodiscard]] Interval signed_scale(Interval magnitude) const {
        if (c_ >= 0.0) return magnitude;
        return {-magnitude.hi, -magnitude.lo};
    }

    static Interval clamp_nonnegative(Interval x) { return {std::max(0.0, x.lo), std::max(0.0, x.hi)}; }

    std::vector<double> prefix_;
    Tail tail_ = Tail::none;
    double c_ = 0.0;
    double param_ = 0.0;
};

} // namespace scum
