#include <scumlab/numeric.hpp>
#include <scumlab/random.hpp>
#include <scumlab/sequence.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <vector>

using namespace scum;

namespace {

// Direct partial sum plus an integral remainder bracket for sum_{k>=0} (a+k)^{-s}.
Interval zeta_bracket(double s, double a, int terms) {
    long double sum = 0.0L;
    for (int k = 0; k < terms; ++k) sum += std::pow(static_cast<long double>(a + k), -static_cast<long double>(s));
    const double x = a + terms;
    const double lo = std::pow(x, 1.0 - s) / (s - 1.0);
    const double hi = lo + std::pow(x, -s);
    return {static_cast<double>(sum) + lo, static_cast<double>(sum) + hi};
}

} // namespace

TEST(Interval, OutwardRoundingEnclosesExactSum) {
    const Interval a = Interval::point(0.1) + Interval::point(0.2);
    EXPECT_TRUE(a.contains(0.1 + 0.2));
    EXPECT_LT(a.lo, a.hi);
    const Interval p = Interval{-1.0, 2.0} * Interval{3.0, 4.0};
    EXPECT_LE(p.lo, -4.0);
    EXPECT_GE(p.hi, 8.0);
}

TEST(HurwitzZeta, MatchesRiemannValues) {
    const double pi = std::numbers::pi;
    const auto z2 = hurwitz_zeta(2.0, 1.0);
    EXPECT_NEAR(z2.value, pi * pi / 6.0, 1e-14);
    EXPECT_TRUE(z2.enclosure().contains(pi * pi / 6.0));
    const auto z4 = hurwitz_zeta(4.0, 1.0);
    EXPECT_NEAR(z4.value, std::pow(pi, 4) / 90.0, 1e-14);
}

TEST(HurwitzZeta, AgreesWithBracketedPartialSums) {
    for (double s : {1.1, 1.5, 2.5, 3.0}) {
        for (double a : {0.25, 1.0, 3.0, 17.5}) {
            const Interval b = zeta_bracket(s, a, 200000);
            const double v = hurwitz_zeta(s, a).value;
            EXPECT_GE(v, b.lo - 1e-9 * std::abs(b.lo)) << s << " " << a;
            EXPECT_LE(v, b.hi + 1e-9 * std::abs(b.hi)) << s << " " << a;
        }
    }
}

TEST(HurwitzZeta, RejectsDivergentExponent) {
    EXPECT_THROW(hurwitz_zeta(1.0, 1.0), DivergentSeries);
}

TEST(Wilson, ContainsProportionAndShrinks) {
    const double z = normal_quantile_two_sided(0.99);
    EXPECT_NEAR(z, 2.5758293035489, 1e-10);
    const auto ci = wilson_interval(30, 100, z);
    EXPECT_LT(ci.lo, 0.3);
    EXPECT_GT(ci.hi, 0.3);
    const auto wide = wilson_interval(3, 10, z);
    EXPECT_GT(wide.hi - wide.lo, ci.hi - ci.lo);
    const auto zero = wilson_interval(0, 1000, z);
    EXPECT_EQ(zero.lo, 0.0);
    EXPECT_GT(zero.hi, 0.0);
}

TEST(Seeding, DerivedSeedsAreDistinctAndStable) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, "couple", i));
    EXPECT_EQ(seen.size(), 1000u);
    EXPECT_EQ(derive_seed(42, "couple", 7), derive_seed(42, "couple", 7));
    EXPECT_NE(derive_seed(42, "couple", 7), derive_seed(42, "dkw", 7));
    EXPECT_EQ(stable_hash(""), 0xCBF29CE484222325ULL);
}

TEST(ParallelFor, SlotsIndependentOfWorkers) {
    for (unsigned w : {1u, 2u, 4u}) {
        std::vector<double> out(1000);
        parallel_for(out.size(), w, [&](std::size_t i) {
            RandomStream r = replica_stream(9, "t", i);
            out[i] = r.uniform();
        });
        std::vector<double> ref(1000);
        for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = replica_stream(9, "t", i).uniform();
        EXPECT_EQ(out, ref);
    }
}

TEST(ParallelFor, PropagatesExceptions) {
    EXPECT_THROW(parallel_for(100, 3, [](std::size_t i) {
        if (i == 57) throw InvalidArgument("boom");
    }), InvalidArgument);
}

TEST(Sequence, GeometricTailSums) {
    const auto xi = CoefficientSequence::geometric({}, 0.25, 0.5);
    EXPECT_DOUBLE_EQ(xi(1), 0.25);
    EXPECT_DOUBLE_EQ(xi(3), 0.0625);
    EXPECT_TRUE(xi.abs_sum(1).contains(0.5));
    EXPECT_TRUE(xi.abs_sum(3).contains(0.125));
    // sum_{j>=1} sum_{k>j} 0.25 * 0.5^{k-1} = sum_{k} (k-1) 0.25 0.5^{k-1} = 0.5
    EXPECT_TRUE(xi.abs_tail_of_tails(1).contains(0.5)) << xi.abs_tail_of_tails(1).lo;
}

TEST(Sequence, PowerTailMatchesDirectSummation) {
    const auto xi = CoefficientSequence::power({0.3, 0.2}, 0.1, 2.5);
    long double direct = 0.3L + 0.2L;
    long double tails = 0.0L;
    for (int k = 3; k < 2000000; ++k) direct += 0.1L * std::pow(static_cast<long double>(k), -2.5L);
    const Interval s = xi.abs_sum(1);
    EXPECT_NEAR(s.mid(), static_cast<double>(direct), 1e-8);
    // sum_{k>1} (k-1)|a_k| directly
    tails = 0.2L;
    for (int k = 3; k < 2000000; ++k) tails += (k - 1) * 0.1L * std::pow(static_cast<long double>(k), -2.5L);
    EXPECT_NEAR(xi.abs_tail_of_tails(1).mid(), static_cast<double>(tails), 2e-4);
    EXPECT_EQ(CoefficientSequence::power({}, 0.1, 1.5).abs_tail_of_tails(1).hi, kInf);
}

TEST(Sequence, PeriodicSumMatchesTruncatedSeries) {
    const auto xi = CoefficientSequence::power({0.5}, 0.2, 3.0);
    const std::vector<double> w{1.0, -1.0, 0.5};
    long double direct = 0.0L;
    for (std::size_t j = 1; j < 3000000; ++j) direct += xi(j) * w[(1 + j - 1) % 3];
    EXPECT_NEAR(xi.periodic_sum(1, w, 1), static_cast<double>(direct), 1e-12);
    long double shifted = 0.0L;
    for (std::size_t j = 4; j < 3000000; ++j) shifted += xi(j) * w[(2 + j - 4) % 3];
    EXPECT_NEAR(xi.periodic_sum(4, w, 2), static_cast<double>(shifted), 1e-12);
}
