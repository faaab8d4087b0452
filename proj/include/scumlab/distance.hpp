#pragma once

#include "concentration.hpp"
#include "coupling.hpp"
#include "csv.hpp"
#include "enumeration.hpp"
#include "errors.hpp"
#include "families.hpp"
#include "kernel.hpp"
#include "numeric.hpp"
#include "random.hpp"
#include "regularity.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace scum {

struct Estimate {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t paths = 0;

    [[nodiscard]] double half_width() const { return 0.5 * (hi - lo); }
};

inline void require_finite_alphabets(const Kernel& h, const Kernel& g) {
    if (!h.alphabet().is_finite() || !g.alphabet().is_finite())
        throw NotApplicable("d-bar bounds need a finite alphabet (strict positivity of the kernels forces it)");
    if (h.alphabet().size() != g.alphabet().size()) throw InvalidArgument("kernels live on different alphabets");
}

struct DistanceOptions {
    std::size_t paths = 1000;
    std::size_t length = 1000; // symbols averaged per path
    std::size_t burn_in = 100;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string tag = "dbar";
    double confidence = 0.99;
};

// E_nu[log(h/g)] estimated by path averages of log(h(w_j|.)/g(w_j|.)) along
// paths drawn from h.
inline Estimate kl_rate(const Kernel& h, const Kernel& g, const PastSpec& past, const DistanceOptions& opt) {
    require_finite_alphabets(h, g);
    if (opt.paths < 2 || opt.length == 0) throw InvalidArgument("kl rate needs at least two paths of positive length");
    past.validate(h.alphabet());
    std::vector<double> means(opt.paths);
    const std::string tag = opt.tag + "/kl";
    parallel_for(opt.paths, opt.workers, [&](std::size_t i) {
        RandomStream rng = replica_stream(opt.seed, tag, i);
        std::vector<Symbol> w;
        w.reserve(opt.burn_in + opt.length);
        extend_word(h, past, w, opt.burn_in, rng);
        CompensatedSum s;
        for (std::size_t j = 0; j < opt.length; ++j) {
            const History hist(w, past);
            ConditionalDistribution dh = h.distribution(hist, {});
            const Symbol a = sample_symbol(dh, rng);
            const double pg = g.probability(a, hist);
            if (!(pg > 0.0)) throw ZeroKernelValue("g vanishes on a sampled path at step " + std::to_string(j));
            s.add(std::log(dh.prob(a) / pg));
            w.push_back(a);
        }
        means[i] = s.value() / static_cast<double>(opt.length);
    });
    const auto m = sample_moments(means);
    const double hw = normal_quantile_two_sided(opt.confidence) * m.standard_error();
    return {m.mean, m.mean - hw, m.mean + hw, opt.paths};
}

// (1/(C sqrt 2)) sqrt(KL), the interval pushed through the square root.
inline Estimate dbar_upper_kl(const Estimate& kl, double constant) {
    if (!(constant > 0.0)) throw ConstantNotApplicable("d-bar bound needs a positive concentration constant");
    auto f = [constant](double x) { return std::sqrt(std::max(0.0, x)) / (constant * std::sqrt(2.0)); };
    return {f(kl.estimate), f(kl.lo), f(kl.hi), kl.paths};
}

struct InfBound {
    double value = 0.0;
    bool certified = false;
};

// Provider bound when available; otherwise the smallest tabulated value,
// which only bounds the infimum from above.
inline InfBound inf_probability(const Kernel& g, std::size_t L = 8) {
    if (const auto* p = g.regularity())
        if (auto v = p->inf_probability()) return {*v, true};
    double m = 1.0;
    for (const auto& fill : {PastSpec::constant(0), PastSpec::constant(static_cast<Symbol>(g.alphabet().size() - 1))})
        m = std::min(m, table_min_probability(tabulate(g, L, fill)));
    return {m, false};
}

struct SupDifference {
    double enumerated = 0.0; // max over depth-L contexts, a lower bound
    double upper = kInf;
    bool certified = false;
    std::size_t depth = 0;
};

// sup_x sum_a |h(a|x) - g(a|x)|. Any past agrees on lags 1..L with a tabulated
// context, so the L1 gap to that row is at most 2 Var_L for each kernel.
inline SupDifference sup_difference(const Kernel& h, const Kernel& g, std::size_t L,
                                    std::size_t budget = kDefaultEnumerationBudget) {
    require_finite_alphabets(h, g);
    const std::size_t n = h.alphabet().size();
    SupDifference out;
    out.depth = L;
    for (Symbol s = 0; s < n; ++s) {
        const auto th = tabulate(h, L, PastSpec::constant(s), budget);
        const auto tg = tabulate(g, L, PastSpec::constant(s), budget);
        for (std::size_t c = 0; c < th.contexts(); ++c)
            out.enumerated = std::max(out.enumerated, 2.0 * total_variation(th.row(c), tg.row(c)));
    }
    auto var_l = [L](const Kernel& k) -> std::optional<double> {
        if (auto m = k.effective_memory(); m && *m <= L) return 0.0;
        if (const auto* p = k.regularity()) return p->var_upper(L);
        return std::nullopt;
    };
    const auto vh = var_l(h);
    const auto vg = var_l(g);
    if (vh && vg) {
        out.certified = true;
        const double raw = out.enumerated + 2.0 * *vh + 2.0 * *vg;
        out.upper = raw == 0.0 ? 0.0 : round_up(raw * (1.0 + 1e-14) + 1e-15);
    }
    return out;
}

struct SupBound {
    SupDifference difference;
    InfBound inf_g;
    double constant = 0.0;
    double value = kInf; // over the certified upper end, or the enumerated value when uncertified
    bool certified = false;
};

// sup_x sum_a |h - g| / (C sqrt(2 inf g))
inline SupBound dbar_upper_sup(const Kernel& h, const Kernel& g, std::size_t L, double constant) {
    if (!(constant > 0.0)) throw ConstantNotApplicable("d-bar bound needs a positive concentration constant");
    SupBound b;
    b.difference = sup_difference(h, g, L);
    b.inf_g = inf_probability(g, L);
    b.constant = constant;
    if (!(b.inf_g.value > 0.0)) throw ZeroKernelValue("inf g is not positive");
    const double sup = b.difference.certified ? b.difference.upper : b.difference.enumerated;
    b.value = sup / (constant * std::sqrt(2.0 * b.inf_g.value));
    b.certified = b.difference.certified && b.inf_g.certified;
    return b;
}

struct MarkovApproxBound {
    std::size_t k = 0;
    double var_k = 0.0;
    double corollary = 0.0; // |A| Var_k / (2 sqrt 2 C sqrt(inf g))
    double via_sup = 0.0;   // 2 Var_k / (C sqrt(2 inf g))
};

inline MarkovApproxBound markov_approx_bound(const Kernel& g, std::size_t k, double constant) {
    if (!(constant > 0.0)) throw ConstantNotApplicable("d-bar bound needs a positive concentration constant");
    if (!g.alphabet().is_finite()) throw NotApplicable("Markov approximation bound needs a finite alphabet");
    std::optional<double> var;
    if (auto m = g.effective_memory(); m && *m <= k) var = 0.0;
    if (!var)
        if (const auto* p = g.regularity()) var = p->var_upper(k);
    if (!var) throw UncertifiedTail("no certified Var_" + std::to_string(k) + " for " + g.name());
    const auto inf = inf_probability(g);
    if (!inf.certified || !(inf.value > 0.0)) throw UncertifiedTail("no certified positive inf g for " + g.name());
    MarkovApproxBound b;
    b.k = k;
    b.var_k = *var;
    const double A = static_cast<double>(g.alphabet().size());
    if (*var == 0.0) return b;
    b.corollary = round_up(A * *var / (2.0 * std::sqrt(2.0) * constant * std::sqrt(inf.value)));
    b.via_sup = round_up(2.0 * *var / (constant * std::sqrt(2.0 * inf.value)));
    return b;
}

// epsilon * sum_{j > k} lambda_j
inline double bkf_lower_bound(double epsilon, const std::vector<double>& lambda, std::size_t k) {
    CompensatedSum s;
    for (std::size_t j = k; j < lambda.size(); ++j) s.add(lambda[j]);
    return epsilon * s.value();
}

// Exact sup_x sum_a |g - g^[m_k]| for the tail-replaced BKF kernel: each
// replaced component moves g(+1|.) by (1 - eps) - phi(s) in [0, 1 - 2 eps], and
// the all-minus past attains the maximum of every component at once.
inline double bkf_sup_difference(const BKFSpec& spec, std::size_t k) {
    CompensatedSum s;
    for (std::size_t j = k; j < spec.lambda.size(); ++j) s.add(spec.lambda[j]);
    return 2.0 * (1.0 - spec.epsilon - spec.phi_at(-1.0)) * s.value();
}

// Time-average disagreement of the chain whose step is a maximal coupling of
// h(.|left) and g(.|right). It witnesses an upper bound on d-bar up to its
// burn-in bias, which is not quantified.
inline Estimate dbar_empirical_witness(const Kernel& h, const Kernel& g, const PastSpec& past, const DistanceOptions& opt) {
    require_finite_alphabets(h, g);
    if (opt.paths < 2 || opt.length == 0) throw InvalidArgument("witness needs at least two paths of positive length");
    past.validate(h.alphabet());
    std::vector<double> means(opt.paths);
    const std::string tag = opt.tag + "/witness";
    parallel_for(opt.paths, opt.workers, [&](std::size_t i) {
        RandomStream rng = replica_stream(opt.seed, tag, i);
        std::vector<Symbol> left, right;
        left.reserve(opt.burn_in + opt.length);
        right.reserve(opt.burn_in + opt.length);
        std::size_t disagreements = 0;
        for (std::size_t step = 0; step < opt.burn_in + opt.length; ++step) {
            const auto dl = h.distribution(History(left, past), {});
            const auto dr = g.distribution(History(right, past), {});
            const auto [c, d] = sample_joint(dl, dr, rng.uniform());
            left.push_back(c);
            right.push_back(d);
            if (step >= opt.burn_in && c != d) ++disagreements;
        }
        means[i] = static_cast<double>(disagreements) / static_cast<double>(opt.length);
    });
    const auto m = sample_moments(means);
    const double hw = normal_quantile_two_sided(opt.confidence) * m.standard_error();
    return {m.mean, std::max(0.0, m.mean - hw), std::min(1.0, m.mean + hw), opt.paths};
}

struct DbarRow {
    std::size_t k = 0;
    std::optional<double> lower_bound;
    Estimate witness;
    std::optional<Estimate> kl;
    std::optional<double> bound_kl;
    std::optional<double> bound_sup;
    std::optional<double> bound_corollary;
    std::optional<double> bound_corollary_via_sup;

    // lower <= witness + CI <= every upper bound.
    [[nodiscard]] bool ordered() const {
        if (lower_bound && *lower_bound > witness.hi) return false;
        for (const auto& b : {bound_kl, bound_sup, bound_corollary})
            if (b && witness.lo > *b) return false;
        return true;
    }
};

struct DbarReport {
    std::vector<DbarRow> rows;

    [[nodiscard]] bool ordered() const {
        return std::all_of(rows.begin(), rows.end(), [](const DbarRow& r) { return r.ordered(); });
    }
    [[nodiscard]] CsvTable table() const {
        CsvTable t({"k", "lower_bound", "witness", "witness_ci", "bound_kl", "bound_sup", "bound_corollary"});
        for (const auto& r : rows)
            t.add_row({std::to_string(r.k), format_optional(r.lower_bound), format_double(r.witness.estimate),
                       format_double(r.witness.half_width()), format_optional(r.bound_kl), format_optional(r.bound_sup),
                       format_optional(r.bound_corollary)});
        return t;
    }
};

// Scan of the BKF tail replacements k = 1..: every bound the library has
// for d-bar(mu, mu^[m_k]) next to the coupling witness.
inline DbarReport bkf_dbar_scan(const BKFSpec& spec, const std::vector<std::size_t>& ks, const PastSpec& past,
                                const DistanceOptions& opt, std::size_t profile_lag = 16) {
    const KernelPtr g = build_bkf(spec);
    const auto prof = compute_profile(*g, {profile_lag, std::min<std::size_t>(spec.m.back(), 12)});
    const double constant = gcb_constants(prof).best();
    DbarReport report;
    for (std::size_t k : ks) {
        if (k == 0 || k > spec.lambda.size()) throw InvalidArgument("BKF scan needs 1 <= k <= number of components");
        const KernelPtr h = bkf_tail_replacement(spec, k);
        DbarRow row;
        row.k = k;
        row.lower_bound = bkf_lower_bound(spec.epsilon, spec.lambda, k);
        DistanceOptions o = opt;
        o.tag = opt.tag + "/k" + std::to_string(k);
        row.witness = dbar_empirical_witness(*h, *g, past, o);
        row.kl = kl_rate(*h, *g, past, o);
        row.bound_kl = dbar_upper_kl(*row.kl, constant).hi;
        row.bound_sup = dbar_upper_sup(*h, *g, spec.m.back(), constant).value;
        const auto mab = markov_approx_bound(*g, spec.m[k - 1], constant);
        row.bound_corollary = mab.corollary;
        row.bound_corollary_via_sup = mab.via_sup;
        report.rows.push_back(row);
    }
    return report;
}

} // namespace scum
