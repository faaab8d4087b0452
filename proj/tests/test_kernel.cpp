#include <scumlab/families.hpp>
#include <scumlab/kernel.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace scum;

namespace {

double four_sigma(double p, double n) { return 4.0 * std::sqrt(p * (1.0 - p) / n); }

std::vector<Symbol> random_word(RandomStream& r, std::size_t n, std::size_t alphabet) {
    std::vector<Symbol> w(n);
    for (auto& s : w) s = static_cast<Symbol>(r.uniform() * static_cast<double>(alphabet));
    return w;
}

} // namespace

TEST(PastSpec, ExplicitThenPeriodicFill) {
    const PastSpec past({4, 5, 6}, {1, 2});
    EXPECT_EQ(past.at(1), 6u);
    EXPECT_EQ(past.at(3), 4u);
    EXPECT_EQ(past.at(4), 1u);
    EXPECT_EQ(past.at(5), 2u);
    EXPECT_EQ(past.at(6), 1u);
    EXPECT_THROW(PastSpec({}, {}), InvalidArgument);
    EXPECT_THROW(PastSpec({0, 3}, {0}).validate(Alphabet::finite(3)), InvalidArgument);
}

TEST(History, RecentWordSitsBeforeThePast) {
    const PastSpec past({7}, {1, 2, 3});
    const std::vector<Symbol> recent{8, 9};
    const History h(recent, past);
    EXPECT_EQ(h.at(1), 9u);
    EXPECT_EQ(h.at(2), 8u);
    EXPECT_EQ(h.at(3), 7u);
    EXPECT_EQ(h.at(4), 1u);
    EXPECT_EQ(h.explicit_depth(), 3u);
    EXPECT_EQ(h.fill_phase(), 0u);
    EXPECT_EQ(h.last_lag_of(2), 5u);
    EXPECT_EQ(h.last_lag_of(9), 1u);
    EXPECT_FALSE(h.last_lag_of(0).has_value());
}

TEST(History, SkipShiftsIntoTheFill) {
    const PastSpec past({7}, {1, 2, 3});
    const History h({}, past, 2); // lag 1 reads past lag 3
    EXPECT_EQ(h.at(1), past.at(3));
    EXPECT_EQ(h.at(2), past.at(4));
    EXPECT_EQ(h.explicit_depth(), 0u);
    EXPECT_EQ(h.fill()[(h.fill_phase()) % 3], past.at(3));
    EXPECT_EQ(h.fill_phase(), 1u);
}

TEST(ConditionalDistribution, IidIgnoresHistory) {
    const auto k = build_iid({0.5, 0.5});
    const PastSpec past({1, 0, 1}, {0});
    const auto d = conditional_distribution(*k, History({}, past));
    ASSERT_EQ(d.probabilities.size(), 2u);
    EXPECT_EQ(d.probabilities[0], 0.5);
    EXPECT_EQ(d.probabilities[1], 0.5);
    EXPECT_EQ(d.truncation_mass, 0.0);
}

TEST(ConditionalDistribution, BinaryARWithZeroCoefficientsIsFair) {
    const auto k = build_binary_ar({CoefficientSequence::finite({0.0, 0.0, 0.0}), 0.0, false, Link::logistic()});
    const PastSpec past({1, 0, 1}, {0, 1});
    const auto d = conditional_distribution(*k, History({}, past));
    EXPECT_NEAR(d.probabilities[0], 0.5, 1e-15);
    EXPECT_NEAR(d.probabilities[1], 0.5, 1e-15);
}

TEST(ConditionalDistribution, PoissonWithZeroCoefficientsIsPoissonOne) {
    const auto k = build_poisson_regression({CoefficientSequence::finite({0.0, 0.0}), 2.0});
    const PastSpec past({3, 5}, {1});
    const auto d = conditional_distribution(*k, History({}, past));
    EXPECT_NEAR(d.probabilities[0], std::exp(-1.0), 1e-15);
    EXPECT_NEAR(d.probabilities[1], std::exp(-1.0), 1e-15);
    EXPECT_NEAR(d.probabilities[3], std::exp(-1.0) / 6.0, 1e-15);
    EXPECT_LE(d.truncation_mass, 1e-12);
    EXPECT_NEAR(d.enumerated_mass() + d.truncation_mass, 1.0, 1e-12);
}

TEST(ConditionalDistribution, RejectsRowsThatDoNotSumToOne) {
    struct Broken final : Kernel {
        Alphabet alphabet() const override { return Alphabet::finite(2); }
        std::string name() const override { return "broken"; }
        double probability(Symbol, const History&) const override { return 0.6; }
    } broken;
    const PastSpec past = PastSpec::constant(0);
    EXPECT_THROW(conditional_distribution(broken, History({}, past)), NormalizationError);
    struct Deficient final : Kernel {
        Alphabet alphabet() const override { return Alphabet::countable(); }
        std::string name() const override { return "deficient"; }
        double probability(Symbol a, const History&) const override { return a < 3 ? 0.25 : 0.0; }
    } deficient;
    TruncationPolicy policy;
    policy.support_cap = 1000;
    EXPECT_THROW(conditional_distribution(deficient, History({}, past), policy), NormalizationError);
}

TEST(SampleSymbol, InverseCdf) {
    ConditionalDistribution point{{0.0, 0.0, 0.0, 1.0}, 0.0, {}};
    for (double u : {0.0, 0.3, 0.999999}) EXPECT_EQ(sample_symbol_at(point, u), 3u);
    ConditionalDistribution d{{0.3, 0.7}, 0.0, {}};
    EXPECT_EQ(sample_symbol_at(d, 0.25), 0u);
    EXPECT_EQ(sample_symbol_at(d, 0.35), 1u);
}

TEST(SampleSymbol, FrequencyMatchesBinomialOracle) {
    ConditionalDistribution d{{0.3, 0.7}, 0.0, {}};
    RandomStream r(123);
    const int N = 1000000;
    int zeros = 0;
    for (int i = 0; i < N; ++i) zeros += sample_symbol(d, r) == 0;
    EXPECT_NEAR(zeros / static_cast<double>(N), 0.3, four_sigma(0.3, N));
}

TEST(SampleSymbol, DrawsInTruncationMassExtendTheSupport) {
    // Geometric(1/2) on N enumerated only up to symbol 2.
    ConditionalDistribution d{{0.5, 0.25, 0.125}, 0.125, [](Symbol a) { return std::ldexp(1.0, -static_cast<int>(a) - 1); }};
    EXPECT_EQ(sample_symbol_at(d, 0.9), 3u);
    EXPECT_EQ(sample_symbol_at(d, 0.99), 6u);
    TruncationPolicy tight;
    tight.support_cap = 5;
    ConditionalDistribution e{{0.5, 0.25, 0.125}, 0.125, [](Symbol a) { return std::ldexp(1.0, -static_cast<int>(a) - 1); }};
    EXPECT_THROW(sample_symbol_at(e, 0.99, tight), SupportCapExceeded);
}

TEST(SamplePath, IidFrequencies) {
    const auto k = build_iid({0.2, 0.5, 0.3});
    RandomStream r(5);
    const auto path = sample_path(*k, PastSpec::constant(0), 100000, r);
    ASSERT_EQ(path.symbols.size(), 100000u);
    std::vector<double> counts(3);
    for (Symbol s : path.symbols) counts[s] += 1.0;
    const double n = 100000.0;
    for (int a = 0; a < 3; ++a) {
        const double p = std::vector<double>{0.2, 0.5, 0.3}[a];
        EXPECT_NEAR(counts[a] / n, p, four_sigma(p, n));
    }
}

TEST(SamplePath, MarkovTransitionCounts) {
    const std::vector<std::vector<double>> Q{{0.9, 0.1}, {0.2, 0.8}};
    const auto k = build_markov(Q);
    RandomStream r(11);
    const auto path = sample_path(*k, PastSpec::constant(0), 200000, r);
    double c[2][2] = {{0, 0}, {0, 0}};
    Symbol prev = 0;
    for (Symbol s : path.symbols) {
        c[prev][s] += 1.0;
        prev = s;
    }
    for (int a = 0; a < 2; ++a) {
        const double n = c[a][0] + c[a][1];
        EXPECT_NEAR(c[a][1] / n, Q[a][1], four_sigma(Q[a][1], n));
    }
}

TEST(SamplePath, RenewalConditionalFrequencies) {
    const auto k = build_renewal({{0.6, 0.3, 0.5}, 0.4, 0.0, 1.0});
    RandomStream r(17);
    const auto path = sample_path(*k, PastSpec::constant(1), 200000, r);
    std::vector<double> ones(4), total(4);
    std::size_t since = 0; // l of the history before each symbol
    for (Symbol s : path.symbols) {
        const std::size_t l = std::min<std::size_t>(since, 3);
        total[l] += 1.0;
        ones[l] += s;
        since = s == 1 ? 0 : since + 1;
    }
    const std::vector<double> q{0.6, 0.3, 0.5, 0.4};
    for (int l = 0; l < 4; ++l) EXPECT_NEAR(ones[l] / total[l], q[l], four_sigma(q[l], total[l])) << l;
}

TEST(SamplePath, DeterministicGivenSeed) {
    const auto k = build_binary_ar({CoefficientSequence::geometric({}, 0.25, 0.5), 0.1, false, Link::logistic()});
    const PastSpec past({1, 0}, {1, 1, 0});
    RandomStream a(99), b(99), c(100);
    const auto p1 = sample_path(*k, past, 500, a);
    const auto p2 = sample_path(*k, past, 500, b);
    const auto p3 = sample_path(*k, past, 500, c);
    EXPECT_EQ(p1.symbols, p2.symbols);
    EXPECT_NE(p1.symbols, p3.symbols);
    EXPECT_EQ(p1.seed, 99u);
    EXPECT_THROW(sample_path(*k, past, 0, a), InvalidArgument);
}

TEST(PathLikelihood, HandProducts) {
    const auto iid = build_iid({0.5, 0.5});
    const std::vector<Symbol> w4{0, 1, 1, 0};
    EXPECT_NEAR(path_log_likelihood(*iid, PastSpec::constant(0), w4), 4.0 * std::log(0.5), 1e-14);

    const auto markov = build_markov({{0.9, 0.1}, {0.2, 0.8}});
    const std::vector<Symbol> w{0, 0, 1};
    EXPECT_NEAR(path_log_likelihood(*markov, PastSpec::constant(0), w),
                std::log(0.9) + std::log(0.9) + std::log(0.1), 1e-14);

    const auto renewal = build_renewal({{2.0 / 3.0, 0.5}, 0.2, 0.0, 1.0});
    const std::vector<Symbol> r{1, 0, 1};
    EXPECT_NEAR(path_log_likelihood(*renewal, PastSpec::constant(1), r),
                std::log(2.0 / 3.0) + std::log(1.0 / 3.0) + std::log(0.5), 1e-14);

    const auto degenerate = build_markov({{1.0, 0.0}, {0.0, 1.0}});
    EXPECT_THROW(path_log_likelihood(*degenerate, PastSpec::constant(0), w), ZeroLikelihood);
}

TEST(Normalization, RandomHistoriesForEveryFamily) {
    std::vector<KernelPtr> finite{
        build_iid({0.1, 0.2, 0.7}),
        build_markov({{0.9, 0.1}, {0.2, 0.8}}),
        build_binary_ar({CoefficientSequence::power({0.2, -0.1}, 0.1, 1.5), 0.0, true, Link::logistic()}),
        build_binary_ar({CoefficientSequence::geometric({}, 0.3, 0.6), -0.2, false,
                         Link::table({{0.0, 0.5}, {0.5, 0.8}, {2.0, 0.95}}, 0.6)}),
        build_markov_mixture({{0.4, 0.4, 0.2},
                              {ContextTable(2, 0, {0.3, 0.7}), ContextTable(2, 1, {0.8, 0.2, 0.3, 0.7}),
                               ContextTable(2, 2, {0.9, 0.1, 0.4, 0.6, 0.6, 0.4, 0.2, 0.8})}}),
        build_renewal({{2.0 / 3.0, 0.5}, 0.0, 1.0, 2.0}),
        build_bkf({0.1, {0.5, 0.3, 0.2}, {1, 3, 5}, BKFSpec::Phi::linear}),
        build_bkf({0.2, {0.6, 0.4}, {1, 7}, BKFSpec::Phi::step}),
    };
    RandomStream r(2024);
    for (const auto& k : finite) {
        const std::size_t n = k->alphabet().size();
        for (int trial = 0; trial < 1000; ++trial) {
            const auto recent = random_word(r, 1 + trial % 40, n);
            const PastSpec past(random_word(r, trial % 7, n), random_word(r, 1 + trial % 3, n));
            const History h(recent, past);
            double total = 0.0;
            for (std::size_t a = 0; a < n; ++a) total += k->probability(static_cast<Symbol>(a), h);
            ASSERT_NEAR(total, 1.0, 1e-9) << k->name();
            EXPECT_NO_THROW(conditional_distribution(*k, h)) << k->name();
        }
    }
    const auto poisson = build_poisson_regression({CoefficientSequence::power({-0.3}, -0.2, 2.0), 2.0});
    for (int trial = 0; trial < 1000; ++trial) {
        const auto recent = random_word(r, 1 + trial % 20, 6);
        const PastSpec past({}, random_word(r, 1 + trial % 2, 6));
        const auto d = conditional_distribution(*poisson, History(recent, past));
        const double m = d.enumerated_mass();
        ASSERT_GE(m, 1.0 - 1e-12);
        ASSERT_LE(m, 1.0 + 1e-9);
    }
}

TEST(ShiftInvariance, DeepCoordinatesMoveTheKernelWithinTheTailBound) {
    const auto k = build_binary_ar({CoefficientSequence::power({}, 0.2, 1.8), 0.0, false, Link::logistic()});
    const auto* prov = k->regularity();
    ASSERT_NE(prov, nullptr);
    RandomStream r(31);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t L = 5 + trial % 20;
        auto recent = random_word(r, L, 2);
        const PastSpec fill({}, {static_cast<Symbol>(trial % 2)});
        const double base = k->probability(1, History(recent, fill));
        auto deeper = random_word(r, 30, 2);
        deeper.insert(deeper.end(), recent.begin(), recent.end());
        const double moved = k->probability(1, History(deeper, fill));
        EXPECT_LE(std::abs(moved - base), *prov->var_upper(L) + 1e-15);
        // Same history seen with the fill expanded explicitly.
        std::vector<Symbol> expanded(10, fill.fill()[0]);
        expanded.insert(expanded.end(), recent.begin(), recent.end());
        EXPECT_NEAR(k->probability(1, History(expanded, fill)), base, 1e-14);
    }
}
