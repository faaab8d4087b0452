#pragma once

#include "errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

namespace scum {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double round_down(double x) { return std::isfinite(x) ? std::nextafter(x, -kInf) : x; }
inline double round_up(double x) { return std::isfinite(x) ? std::nextafter(x, kInf) : x; }

// Closed interval with outward rounding on every arithmetic operation, so that
// the true value of an expression built from exact inputs stays enclosed.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    constexpr Interval() = default;
    constexpr Interval(double l, double h) : lo(l), hi(h) {}
    static constexpr Interval point(double v) { return {v, v}; }

    [[nodiscard]] bool contains(double v) const { return lo <= v && v <= hi; }
    [[nodiscard]] double width() const { return hi - lo; }
    [[nodiscard]] double mid() const { return 0.5 * (lo + hi); }
    [[nodiscard]] bool strictly_positive() const { return lo > 0.0; }
};

inline Interval operator+(Interval a, Interval b) { return {round_down(a.lo + b.lo), round_up(a.hi + b.hi)}; }
inline Interval operator-(Interval a, Interval b) { return {round_down(a.lo - b.hi), round_up(a.hi - b.lo)}; }
inline Interval operator-(double a, Interval b) { return Interval::point(a) - b; }

inline Interval operator*(Interval a, Interval b) {
    const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return {round_down(std::min({p1, p2, p3, p4})), round_up(std::max({p1, p2, p3, p4}))};
}

inline Interval& operator+=(Interval& a, Interval b) { return a = a + b; }

// Monotone maps.
inline Interval exp(Interval a) { return {round_down(std::exp(a.lo)), round_up(std::exp(a.hi))}; }

inline Interval widen(Interval a, double abs_err) { return {round_down(a.lo - abs_err), round_up(a.hi + abs_err)}; }

inline Interval hull(Interval a, Interval b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

struct SeriesValue {
    double value = 0.0;
    double error = 0.0; // absolute bound on |value - exact|

    [[nodiscard]] Interval enclosure() const { return widen(Interval::point(value), error); }
};

// Hurwitz zeta sum_{k>=0} (a+k)^{-s} for s > 1, a > 0, by Euler-Maclaurin with
// ten explicit terms; the first omitted correction bounds the remainder.
inline SeriesValue hurwitz_zeta(double s, double a) {
    if (!(s > 1.0)) throw DivergentSeries("hurwitz_zeta requires s > 1, got s = " + std::to_string(s));
    if (!(a > 0.0)) throw InvalidArgument("hurwitz_zeta requires a > 0");
    constexpr int kDirect = 10;
    // B_{2m} / (2m)!
    constexpr double kBernoulliOverFactorial[] = {
        1.0 / 12.0,           -1.0 / 720.0,          1.0 / 30240.0,          -1.0 / 1209600.0,
        1.0 / 47900160.0,     -691.0 / 1307674368000.0, 1.0 / 74724249600.0,
    };
    CompensatedSum sum;
    for (int k = 0; k < kDirect; ++k) sum.add(std::pow(a + k, -s));
    const double x = a + kDirect;
    sum.add(std::pow(x, 1.0 - s) / (s - 1.0));
    sum.add(0.5 * std::pow(x, -s));
    double rising = s;          // s (s+1) ... (s+2m-2)
    double power = std::pow(x, -s - 1.0);
    double last = 0.0;
    constexpr int kTerms = static_cast<int>(std::size(kBernoulliOverFactorial));
    for (int m = 0; m < kTerms; ++m) {
        const double term = kBernoulliOverFactorial[m] * rising * power;
        if (m + 1 == kTerms) {
            last = std::abs(term);
            break;
        }
        sum.add(term);
        rising *= (s + 2.0 * m + 1.0) * (s + 2.0 * m + 2.0);
        power /= x * x;
    }
    const double v = sum.value();
    return {v, last + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(v)};
}

// Two-sided standard normal quantile for the given confidence level.
inline double normal_quantile_two_sided(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0,1)");
    static const boost::math::normal standard;
    return boost::math::quantile(standard, 1.0 - 0.5 * (1.0 - confidence));
}

struct ConfidenceInterval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for a binomial proportion.
inline ConfidenceInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0; // unbiased
    std::size_t count = 0;

    [[nodiscard]] double standard_error() const {
        return count > 1 ? std::sqrt(variance / static_cast<double>(count)) : kInf;
    }
};

// Two passes in index order so the result does not depend on how the samples
// were produced.
inline SampleMoments sample_moments(std::span<const double> xs) {
    SampleMoments m;
    m.count = xs.size();
    if (xs.empty()) return m;
    m.mean = compensated_total(xs) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        CompensatedSum ss;
        for (double x : xs) ss.add((x - m.mean) * (x - m.mean));
        m.variance = ss.value() / static_cast<double>(xs.size() - 1);
    }
    return m;
}

} // namespace scum
