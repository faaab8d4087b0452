#pragma once

#include "csv.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "numeric.hpp"
#include "random.hpp"
#include "regularity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scum {

// Joint law of one step of two chains, stored densely on the common
// enumerated support.
struct JointStep {
    std::size_t size = 0;
    std::vector<double> matrix; // row-major, matrix[c * size + d] = p(c, d)
    ConditionalDistribution left;
    ConditionalDistribution right;
    double truncation_mass = 0.0;

    [[nodiscard]] double at(std::size_t c, std::size_t d) const { return matrix[c * size + d]; }
    [[nodiscard]] double off_diagonal_mass() const {
        CompensatedSum s;
        for (std::size_t c = 0; c < size; ++c)
            for (std::size_t d = 0; d < size; ++d)
                if (c != d) s.add(at(c, d));
        return s.value();
    }
    [[nodiscard]] double total_mass() const { return compensated_total(matrix); }
};

namespace detail {

inline void pad_to(std::vector<double>& v, std::size_t n) {
    if (v.size() < n) v.resize(n, 0.0);
}

// Suffix sums G(s) = sum_{c >= s} w(c), with G(size) = 0.
inline std::vector<double> tails(const std::vector<double>& w) {
    std::vector<double> G(w.size() + 1, 0.0);
    CompensatedSum s;
    for (std::size_t c = w.size(); c-- > 0;) {
        s.add(w[c]);
        G[c] = s.value();
    }
    return G;
}

// p(c,d) = F(c,d) - F(c+1,d) - F(c,d+1) + F(c+1,d+1) with F(s,s') = G(s) ^ G'(s').
inline void tail_inclusion_exclusion(const std::vector<double>& left, const std::vector<double>& right, std::size_t n,
                                     std::vector<double>& out, bool accumulate) {
    const auto G = tails(left);
    const auto H = tails(right);
    for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
            const double v = std::min(G[c], H[d]) - std::min(G[c + 1], H[d]) - std::min(G[c], H[d + 1]) +
                             std::min(G[c + 1], H[d + 1]);
            if (v < -1e-10) throw NegativeEntry("inclusion-exclusion entry " + std::to_string(v));
            const double p = std::max(0.0, v);
            if (accumulate) out[c * n + d] += p;
            else out[c * n + d] = p;
        }
}

inline std::pair<ConditionalDistribution, ConditionalDistribution> aligned(const ConditionalDistribution& l,
                                                                           const ConditionalDistribution& r,
                                                                           std::size_t& n) {
    n = std::max(l.probabilities.size(), r.probabilities.size());
    ConditionalDistribution a = l, b = r;
    // Countable supports are enumerated to a common length through the extensions.
    auto grow = [n](ConditionalDistribution& d) {
        while (d.probabilities.size() < n) {
            const double p = d.extension ? d.extension(static_cast<Symbol>(d.probabilities.size())) : 0.0;
            d.probabilities.push_back(p);
            d.truncation_mass = std::max(0.0, d.truncation_mass - p);
        }
    };
    grow(a);
    grow(b);
    return {std::move(a), std::move(b)};
}

} // namespace detail

// One-step maximal coupling: p(s,s) = g(s) ^ g'(s) on the diagonal and the
// tail-function (comonotone) coupling of the residual laws g - g^g' and
// g' - g^g' off the diagonal. On two-symbol alphabets this is exactly the
// coupling with 2-D tail F(s,s') = G(s) ^ G'(s').
inline JointStep maximal_coupling_step(const ConditionalDistribution& left, const ConditionalDistribution& right) {
    JointStep j;
    auto [l, r] = detail::aligned(left, right, j.size);
    const std::size_t n = j.size;
    j.matrix.assign(n * n, 0.0);
    std::vector<double> rl(n), rr(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double m = std::min(l.probabilities[s], r.probabilities[s]);
        j.matrix[s * n + s] = m;
        rl[s] = l.probabilities[s] - m;
        rr[s] = r.probabilities[s] - m;
    }
    // Residual masses agree up to rounding; the coupling uses their common part.
    detail::tail_inclusion_exclusion(rl, rr, n, j.matrix, true);
    for (std::size_t s = 0; s < n; ++s) j.matrix[s * n + s] = std::min(l.probabilities[s], r.probabilities[s]);
    j.truncation_mass = std::max(l.truncation_mass, r.truncation_mass);
    j.left = std::move(l);
    j.right = std::move(r);
    return j;
}

// The coupling whose 2-D tail is G(s) ^ G'(s') on the full laws.
inline JointStep tail_function_coupling(const ConditionalDistribution& left, const ConditionalDistribution& right) {
    JointStep j;
    auto [l, r] = detail::aligned(left, right, j.size);
    j.matrix.assign(j.size * j.size, 0.0);
    detail::tail_inclusion_exclusion(l.probabilities, r.probabilities, j.size, j.matrix, false);
    j.truncation_mass = std::max(l.truncation_mass, r.truncation_mass);
    j.left = std::move(l);
    j.right = std::move(r);
    return j;
}

// Lexicographic inverse CDF of the joint matrix at uniform u.
inline std::pair<Symbol, Symbol> sample_joint_at(const JointStep& j, double u) {
    double cumulative = 0.0;
    std::pair<Symbol, Symbol> last{0, 0};
    for (std::size_t c = 0; c < j.size; ++c)
        for (std::size_t d = 0; d < j.size; ++d) {
            const double p = j.at(c, d);
            if (p <= 0.0) continue;
            last = {static_cast<Symbol>(c), static_cast<Symbol>(d)};
            cumulative += p;
            if (u < cumulative) return last;
        }
    if (j.truncation_mass > 0.0 && u >= cumulative + 1e-15)
        throw SupportCapExceeded("joint draw fell in the truncated mass");
    return last;
}

// Draws a pair, enlarging countable supports when the draw lands in the
// truncated mass.
inline std::pair<Symbol, Symbol> sample_joint(const ConditionalDistribution& left, const ConditionalDistribution& right,
                                              double u, const TruncationPolicy& policy = {}) {
    JointStep j = maximal_coupling_step(left, right);
    while (true) {
        const double covered = j.total_mass();
        if (u < covered || j.truncation_mass <= 0.0) return sample_joint_at(j, std::min(u, std::nextafter(covered, 0.0)));
        ConditionalDistribution l = j.left, r = j.right;
        const double target = std::max(0.0, 0.5 * std::min(j.truncation_mass, 1.0 - u));
        l.extend_until(target, policy.support_cap);
        r.extend_until(target, policy.support_cap);
        j = maximal_coupling_step(l, r);
    }
}

struct CoupledRun {
    std::vector<Symbol> left;   // a, eta_1, ..., eta_n
    std::vector<Symbol> right;  // b, omega_1, ..., omega_n
    std::vector<std::uint8_t> disagreement; // sigma_j for j = 1..n
};

// Chains from pasts xa and xb driven jointly by the one-step maximal coupling,
// one uniform per step.
inline CoupledRun sample_coupled_paths(const Kernel& kernel, const PastSpec& past, Symbol a, Symbol b, std::size_t n,
                                       RandomStream& rng, const TruncationPolicy& policy = {}) {
    if (n == 0) throw InvalidArgument("coupled path length must be at least 1");
    past.validate(kernel.alphabet());
    if (!kernel.alphabet().contains(a) || !kernel.alphabet().contains(b)) throw InvalidArgument("initial symbols outside alphabet");
    CoupledRun run;
    run.left.reserve(n + 1);
    run.right.reserve(n + 1);
    run.disagreement.reserve(n);
    run.left.push_back(a);
    run.right.push_back(b);
    bool identical = a == b;
    for (std::size_t step = 0; step < n; ++step) {
        const double u = rng.uniform();
        if (identical) {
            // Equal histories give equal laws, and the coupling is diagonal.
            ConditionalDistribution d = kernel.distribution(History(run.left, past), policy);
            const Symbol s = sample_symbol_at(d, u, policy);
            run.left.push_back(s);
            run.right.push_back(s);
            run.disagreement.push_back(0);
            continue;
        }
        const ConditionalDistribution dl = kernel.distribution(History(run.left, past), policy);
        const ConditionalDistribution dr = kernel.distribution(History(run.right, past), policy);
        const auto [c, d] = sample_joint(dl, dr, u, policy);
        run.left.push_back(c);
        run.right.push_back(d);
        run.disagreement.push_back(c != d);
    }
    return run;
}

// Integer disagreement counts; merging is exact and order-independent.
class DisagreementAccumulator {
public:
    explicit DisagreementAccumulator(std::size_t n = 0) : counts_(n, 0) {}

    void add(const CoupledRun& run) {
        if (run.disagreement.size() != counts_.size()) throw InvalidArgument("run length mismatch");
        std::uint64_t total = 0;
        for (std::size_t j = 0; j < counts_.size(); ++j) {
            counts_[j] += run.disagreement[j];
            total += run.disagreement[j];
        }
        ++runs_;
        sum_ += total;
        sum_sq_ += total * total;
    }
    void merge(const DisagreementAccumulator& o) {
        if (o.counts_.size() != counts_.size()) throw InvalidArgument("accumulator length mismatch");
        for (std::size_t j = 0; j < counts_.size(); ++j) counts_[j] += o.counts_[j];
        runs_ += o.runs_;
        sum_ += o.sum_;
        sum_sq_ += o.sum_sq_;
    }

    [[nodiscard]] std::size_t lags() const { return counts_.size(); }
    [[nodiscard]] std::uint64_t runs() const { return runs_; }
    [[nodiscard]] std::uint64_t count(std::size_t lag) const { return counts_[lag - 1]; }
    [[nodiscard]] std::uint64_t total_sum() const { return sum_; }
    [[nodiscard]] std::uint64_t total_sum_sq() const { return sum_sq_; }

private:
    std::vector<std::uint64_t> counts_;
    std::uint64_t runs_ = 0;
    std::uint64_t sum_ = 0;
    std::uint64_t sum_sq_ = 0;
};

struct CouplingExperiment {
    std::size_t runs = 100000;
    std::size_t length = 100;
    Symbol a = 0;
    Symbol b = 1;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string tag = "couple";
};

// Runs are split into a fixed number of blocks, each with its own slot, so the
// result does not depend on the worker count.
inline DisagreementAccumulator run_coupling_experiment(const Kernel& kernel, const PastSpec& past,
                                                       const CouplingExperiment& cfg,
                                                       const TruncationPolicy& policy = {}) {
    constexpr std::size_t kBlocks = 64;
    std::vector<DisagreementAccumulator> slots(kBlocks, DisagreementAccumulator(cfg.length));
    parallel_for(kBlocks, cfg.workers, [&](std::size_t block) {
        for (std::size_t i = block; i < cfg.runs; i += kBlocks) {
            RandomStream rng = replica_stream(cfg.seed, cfg.tag, i);
            slots[block].add(sample_coupled_paths(kernel, past, cfg.a, cfg.b, cfg.length, rng, policy));
        }
    });
    DisagreementAccumulator total(cfg.length);
    for (const auto& s : slots) total.merge(s);
    return total;
}

// Renewal counts of the auxiliary chain started from a renewal at time 0:
// at distance d from the last renewal a new one occurs with probability
// Var_{d-1}. counts[j-1] estimates u_j.
inline std::vector<std::uint64_t> auxiliary_renewal_counts(std::span<const double> var, std::size_t n, std::size_t runs,
                                                           std::uint64_t seed, unsigned workers = 1,
                                                           const std::string& tag = "aux-renewal") {
    if (var.size() < n) throw InvalidArgument("need Var_j for every lag below " + std::to_string(n));
    for (double v : var.first(n))
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("Var_j must lie in [0, 1]");
    constexpr std::size_t kBlocks = 64;
    std::vector<std::vector<std::uint64_t>> slots(kBlocks, std::vector<std::uint64_t>(n, 0));
    parallel_for(kBlocks, workers, [&](std::size_t block) {
        for (std::size_t i = block; i < runs; i += kBlocks) {
            RandomStream rng = replica_stream(seed, tag, i);
            std::size_t d = 0;
            for (std::size_t t = 0; t < n; ++t) {
                if (rng.uniform() < var[d]) {
                    ++slots[block][t];
                    d = 0;
                } else {
                    ++d;
                }
            }
        }
    });
    std::vector<std::uint64_t> counts(n, 0);
    for (const auto& s : slots)
        for (std::size_t j = 0; j < n; ++j) counts[j] += s[j];
    return counts;
}

struct LagDisagreement {
    std::size_t lag = 0;
    ConfidenceInterval p;          // Wilson at the declared confidence
    ConfidenceInterval p_adjusted; // Wilson, Bonferroni-adjusted over lags
    std::optional<double> bound_osc;
    std::optional<double> bound_renewal;
    bool refuted = false;
};

struct DisagreementStats {
    double confidence = 0.99;
    std::size_t runs = 0;
    std::vector<LagDisagreement> lags;
    ConfidenceInterval sum;        // of sum_j P(eta_j != omega_j), normal interval
    std::optional<double> sum_bound_delta;  // (1 - Delta)/Delta
    std::optional<double> sum_bound_gamma;  // (1 - Gamma)/Gamma
    std::vector<std::string> refutations;

    [[nodiscard]] bool refuted() const { return !refutations.empty(); }

    [[nodiscard]] CsvTable table() const {
        CsvTable t({"lag", "p_hat", "ci_lo", "ci_hi", "bound_osc_recursion", "bound_renewal", "cum_p_hat",
                    "cum_bound_osc_recursion", "cum_bound_renewal"});
        double cum = 0.0, cum_osc = 0.0, cum_ren = 0.0;
        for (const auto& l : lags) {
            cum += l.p.estimate;
            if (l.bound_osc) cum_osc += *l.bound_osc;
            if (l.bound_renewal) cum_ren += *l.bound_renewal;
            t.add_row({std::to_string(l.lag), format_double(l.p.estimate), format_double(l.p.lo), format_double(l.p.hi),
                       format_optional(l.bound_osc), format_optional(l.bound_renewal), format_double(cum),
                       l.bound_osc ? format_double(cum_osc) : "NA", l.bound_renewal ? format_double(cum_ren) : "NA"});
        }
        return t;
    }
};

// Compares per-lag disagreement frequencies with the recursion bounds and the
// total with the closed forms. A lag is refuted when the Bonferroni-adjusted
// interval lies above a bound; the total when the lower end of its interval
// exceeds a closed form.
inline DisagreementStats disagreement_statistics(const DisagreementAccumulator& acc, const RegularityProfile& prof,
                                                 double confidence = 0.99) {
    DisagreementStats st;
    st.confidence = confidence;
    st.runs = acc.runs();
    const std::size_t n = acc.lags();
    const double z = normal_quantile_two_sided(confidence);
    const double z_adj = normal_quantile_two_sided(1.0 - (1.0 - confidence) / static_cast<double>(std::max<std::size_t>(n, 1)));

    std::optional<RecursionBound> alpha, u;
    try {
        alpha = coupling_error_bound_osc(prof, n);
        st.sum_bound_delta = alpha->closed_form;
    } catch (const Error&) {
    }
    try {
        u = renewal_disagreement(prof, n);
        st.sum_bound_gamma = u->closed_form;
    } catch (const Error&) {
    }

    for (std::size_t j = 1; j <= n; ++j) {
        LagDisagreement l;
        l.lag = j;
        l.p = wilson_interval(acc.count(j), acc.runs(), z);
        l.p_adjusted = wilson_interval(acc.count(j), acc.runs(), z_adj);
        if (alpha) l.bound_osc = alpha->terms[j - 1];
        if (u) l.bound_renewal = u->terms[j - 1];
        if (l.bound_osc && l.p_adjusted.lo > *l.bound_osc + 1e-12) {
            l.refuted = true;
            st.refutations.push_back("lag " + std::to_string(j) + " above the oscillation recursion");
        }
        if (l.bound_renewal && l.p_adjusted.lo > *l.bound_renewal + 1e-12) {
            l.refuted = true;
            st.refutations.push_back("lag " + std::to_string(j) + " above the renewal recursion");
        }
        st.lags.push_back(l);
    }

    const double N = static_cast<double>(acc.runs());
    if (acc.runs() > 1) {
        const double mean = static_cast<double>(acc.total_sum()) / N;
        const double var = std::max(0.0, (static_cast<double>(acc.total_sum_sq()) - N * mean * mean) / (N - 1.0));
        const double half = z * std::sqrt(var / N);
        st.sum = {mean, mean - half, mean + half};
        if (st.sum_bound_delta && st.sum.lo > *st.sum_bound_delta + 1e-12)
            st.refutations.push_back("total disagreement above (1-Delta)/Delta");
        if (st.sum_bound_gamma && st.sum.lo > *st.sum_bound_gamma + 1e-12)
            st.refutations.push_back("total disagreement above (1-Gamma)/Gamma");
    }
    return st;
}

} // namespace scum
