#include <scumlab/concentration.hpp>
#include <scumlab/renewal.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace scum;

namespace {

RenewalSpec constant_hazard(double p) { return {{p}, p, 0.0, 1.0}; }
RenewalSpec stretched_prefix(double alpha) { return {{2.0 / 3.0, 0.5}, 0.0, 1.0, alpha}; }
RenewalSpec positive_limit() { return {{0.5}, 0.2, 0.5, 0.5}; }

} // namespace

TEST(InterArrival, ConstantHazardIsGeometric) {
    const auto law = interarrival(constant_hazard(0.3), 40);
    for (std::size_t n = 1; n <= 40; ++n) EXPECT_NEAR(law.at(n), 0.3 * std::pow(0.7, n - 1), 1e-15);
    EXPECT_EQ(law.tail, TailKind::geometric);
}

TEST(InterArrival, PrefixValues) {
    const auto law = interarrival(stretched_prefix(0.5), 5);
    EXPECT_DOUBLE_EQ(law.at(1), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(law.at(2), 1.0 / 6.0);
    EXPECT_NEAR(law.at(3), std::pow(2.0, -0.5) / 6.0, 1e-15);
}

TEST(InterArrival, NormalizationAcrossSpecs) {
    for (const auto& s : {constant_hazard(0.3), stretched_prefix(0.5), stretched_prefix(0.3), positive_limit(),
                          RenewalSpec{{0.9, 0.1, 0.4}, 0.0, 2.0, 1.0}}) {
        for (std::size_t n : {1u, 10u, 1000u}) {
            const auto law = interarrival(s, n);
            CompensatedSum t;
            for (double f : law.f) {
                EXPECT_GE(f, 0.0);
                t.add(f);
            }
            EXPECT_NEAR(t.value() + law.tail_mass, 1.0, 1e-10);
        }
    }
}

TEST(InterArrival, StretchedExponentialSlope) {
    // log f_n ~ -n^{1-alpha}/(1-alpha) for q_j = j^{-alpha}
    const double alpha = 0.5;
    const auto law = interarrival(stretched_prefix(alpha), 40000);
    EXPECT_EQ(law.tail, TailKind::stretched_exponential);
    for (std::size_t n : {10000u, 40000u}) {
        const double ratio = std::log(law.at(n)) / (-std::pow(static_cast<double>(n), 1 - alpha) / (1 - alpha));
        EXPECT_NEAR(ratio, 1.0, 0.05) << n;
    }
}

TEST(Existence, ParametricClassification) {
    EXPECT_TRUE(renewal_exists(constant_hazard(0.4)).exists);
    EXPECT_TRUE(renewal_exists(stretched_prefix(0.5)).exists);
    EXPECT_TRUE(renewal_exists(positive_limit()).exists);
    const auto summable = renewal_exists({{0.5}, 0.0, 0.5, 2.0});
    EXPECT_FALSE(summable.exists);
    // sum_j prod (1 - q_i) grows linearly when sum q < infinity
    ASSERT_GE(summable.partial_sums.size(), 3u);
    EXPECT_GT(summable.partial_sums[2], 5.0 * summable.partial_sums[1]);
    EXPECT_TRUE(renewal_exists({{0.9, 0.9, 0.9}, 0.0, 2.0, 1.0}).exists);
    EXPECT_FALSE(renewal_exists({{0.9}, 0.0, 0.5, 1.0}).exists);
    const std::vector<double> listed{0.2, 0.3};
    EXPECT_THROW(renewal_exists(std::span<const double>(listed)), Undetermined);
}

TEST(GcbClassification, Cases) {
    EXPECT_EQ(gcb_classification(constant_hazard(0.25)).has_gcb, Verdict3::yes);
    const auto pos = gcb_classification(positive_limit());
    EXPECT_EQ(pos.has_gcb, Verdict3::yes);
    EXPECT_TRUE(pos.exists);
    const auto neg = gcb_classification(stretched_prefix(0.5));
    EXPECT_EQ(neg.has_gcb, Verdict3::no);
    EXPECT_TRUE(neg.exists);
    EXPECT_EQ(gcb_classification({{0.9, 0.9, 0.9}, 0.0, 2.0, 1.0}).has_gcb, Verdict3::undetermined);
    EXPECT_EQ(gcb_classification({{0.5}, 0.0, 0.5, 2.0}).has_gcb, Verdict3::undetermined);
    const auto csv = classification_table({pos, neg}).str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "prefix,q_inf,tail_c,tail_s,exists,has_gcb,evidence,f_prefix");
}

TEST(Marginals, ConstantHazard) {
    const double p = 0.3;
    const auto m = stationary_marginals(constant_hazard(p), 20);
    EXPECT_LE(m.one.lo, p);
    EXPECT_GE(m.one.hi, p);
    EXPECT_LT(m.one.hi - m.one.lo, 1e-12);
    for (std::size_t z = 0; z <= 20; ++z) {
        EXPECT_LE(m.zeros[z].lo, std::pow(1 - p, z) * (1 + 1e-12));
        EXPECT_GE(m.zeros[z].hi, std::pow(1 - p, z) * (1 - 1e-12));
    }
}

TEST(Marginals, FiniteInterArrival) {
    // f = (2/3, 1/6, 1/6): q_0 = 2/3, q_1 = 1/2, q_2 = 1
    const RenewalSpec s{{2.0 / 3.0, 0.5, 1.0 - 1e-15}, 0.5, 0.0, 1.0};
    const auto m = stationary_marginals(s, 4);
    EXPECT_NEAR(m.mean_interarrival.lo, 1.5, 1e-12);
    EXPECT_NEAR(m.one.lo, 2.0 / 3.0, 1e-12);
}

TEST(Marginals, ConsistencyIdentity) {
    for (const auto& s : {stretched_prefix(0.5), positive_limit(), constant_hazard(0.7)}) {
        const auto m = stationary_marginals(s, 30);
        const auto law = interarrival(s, 100000);
        EXPECT_NEAR(m.zeros[0].lo, 1.0, 1e-12);
        EXPECT_NEAR(m.zeros[1].lo, 1.0 - m.one.lo, 1e-12);
        for (std::size_t z = 0; z + 1 <= 30; ++z) {
            double beyond = law.tail_mass;
            for (std::size_t i = z + 2; i <= law.f.size(); ++i) beyond += law.at(i);
            EXPECT_GE(m.zeros[z + 1].hi, m.one.lo * beyond * (1 - 1e-12));
        }
    }
}

TEST(Marginals, DivergentSeriesRejected) {
    EXPECT_THROW(stationary_marginals({{0.5}, 0.0, 0.5, 2.0}, 5), NoStationaryMeasure);
}

TEST(Marginals, LongRunFrequencyOfOnes) {
    const auto s = stretched_prefix(0.5);
    const auto m = stationary_marginals(s, 2);
    const auto k = build_renewal(s);
    RandomStream rng = replica_stream(3, "long-run", 0);
    const std::size_t n = 400000;
    const auto w = sample_window(*k, PastSpec::constant(1), n, 1000, rng);
    double ones = 0;
    for (Symbol x : w) ones += x;
    // batch means for the dependent sequence
    const std::size_t batches = 40, per = n / batches;
    std::vector<double> bm;
    for (std::size_t b = 0; b < batches; ++b) {
        double c = 0;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) c += w[i];
        bm.push_back(c / static_cast<double>(per));
    }
    const double sigma = sample_moments(bm).standard_error();
    EXPECT_NEAR(ones / static_cast<double>(n), 0.5 * (m.one.lo + m.one.hi), 4.0 * sigma);
}

TEST(MarkovChain, FormulaArithmetic) {
    const std::vector<double> f{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};
    const auto Q = renewal_markov_chain(f, 2);
    EXPECT_NEAR(Q[0][0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(Q[0][1], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(Q[1][0], 0.5, 1e-15);
    EXPECT_EQ(Q[2][0], 1.0);
    EXPECT_THROW(renewal_markov_chain(f, 4), TailExhausted);
}

TEST(MarkovChain, GeometricIsMemoryless) {
    const auto Q = renewal_markov_chain(constant_hazard(0.35));
    ASSERT_GT(Q.size(), 10u);
    for (std::size_t m = 0; m + 1 < Q.size(); ++m) EXPECT_NEAR(Q[m][0], 0.35, 1e-15);
    EXPECT_EQ(Q.back()[0], 1.0);
    EXPECT_LT(std::pow(0.65, Q.size() - 1), 1e-12);
    EXPECT_GE(std::pow(0.65, Q.size() - 2), 1e-12);
}

TEST(MarkovChain, ImageReproducesBlockFrequencies) {
    const auto s = stretched_prefix(0.5);
    const auto Q = renewal_markov_chain(s);
    const auto chain = build_markov(Q);
    const auto k = build_renewal(s);
    const std::size_t n = 200000, burn = 2000;
    RandomStream r1 = replica_stream(5, "image", 0);
    RandomStream r2 = replica_stream(5, "direct", 0);
    const auto states = sample_window(*chain, PastSpec::constant(0), n, burn, r1);
    std::vector<Symbol> image(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) image[i] = states[i] == 0 ? 1 : 0;
    const auto direct = sample_window(*k, PastSpec::constant(1), n, burn, r2);
    for (std::size_t len = 1; len <= 3; ++len) {
        const auto a = empirical_blocks(image, len, 2);
        const auto b = empirical_blocks(direct, len, 2);
        for (std::size_t c = 0; c < a.counts.size(); ++c) {
            // batch-means spread of each frequency, both runs
            auto spread = [&](const std::vector<Symbol>& w) {
                std::vector<double> v;
                const std::size_t per = n / 20;
                for (std::size_t i = 0; i < 20; ++i)
                    v.push_back(empirical_blocks(std::span<const Symbol>(w).subspan(i * per, per), len, 2).frequency(c));
                return sample_moments(v).standard_error();
            };
            const double sigma = std::hypot(spread(image), spread(direct));
            EXPECT_NEAR(a.frequency(c), b.frequency(c), 4.0 * sigma + 1e-12) << len << ":" << c;
        }
    }
}
