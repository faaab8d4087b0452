#pragma once

#include "csv.hpp"
#include "errors.hpp"
#include "families.hpp"
#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace scum {

enum class TailKind { geometric, stretched_exponential, undetermined };

inline std::string to_string(TailKind t) {
    switch (t) {
    case TailKind::geometric: return "geometric";
    case TailKind::stretched_exponential: return "stretched-exponential";
    case TailKind::undetermined: return "undetermined";
    }
    return "?";
}

// f_n = q_{n-1} prod_{i<n-1} (1 - q_i), n = 1..n_max.
struct InterArrivalLaw {
    std::vector<double> f; // f[0] is f_1
    double tail_mass = 1.0; // prod_{i < n_max} (1 - q_i)
    TailKind tail = TailKind::undetermined;
    double tail_parameter = 0.0; // r for geometric, alpha for stretched-exponential

    [[nodiscard]] double at(std::size_t n) const { return n >= 1 && n <= f.size() ? f[n - 1] : 0.0; }
};

inline InterArrivalLaw interarrival(const RenewalSpec& spec, std::size_t n_max) {
    spec.validate();
    InterArrivalLaw law;
    law.f.reserve(n_max);
    double survive = 1.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        const double q = spec.q(n - 1);
        law.f.push_back(q * survive);
        survive *= 1.0 - q;
    }
    law.tail_mass = survive;
    if (spec.q_inf > 0.0) {
        law.tail = TailKind::geometric;
        law.tail_parameter = 1.0 - spec.q_inf;
    } else if (spec.tail_c > 0.0 && spec.tail_s < 1.0) {
        law.tail = TailKind::stretched_exponential;
        law.tail_parameter = spec.tail_s;
    }
    return law;
}

namespace detail {

// Bound on sum_{j >= n} prod_{i<j} (1 - q_i) given S_n = prod_{i<n} (1 - q_i);
// nullopt when no bound is available or the sum diverges.
inline std::optional<double> survival_tail_bound(const RenewalSpec& spec, std::size_t n, double S_n) {
    const auto [lo, hi] = spec.range_from(n);
    (void)hi;
    if (lo > 0.0) return S_n / lo;
    if (spec.q_inf != 0.0 || spec.tail_c <= 0.0 || n < std::max<std::size_t>(spec.prefix.size(), 1)) return std::nullopt;
    const double c = spec.tail_c, s = spec.tail_s, N = static_cast<double>(n);
    if (s == 1.0) {
        // S_j <= S_n (n/j)^c
        if (c <= 1.0) return std::nullopt;
        return S_n * (1.0 + N / (c - 1.0));
    }
    if (s > 1.0) return std::nullopt;
    // S_j <= S_n exp(-kappa (j^{1-s} - n^{1-s})), kappa = c/(1-s); the sum is at
    // most the first term plus the integral, an upper incomplete gamma with
    // a = 1/(1-s) at z = kappa n^{1-s}, and e^z Gamma(a, z) <= z^{a-1}/(1 - (a-1)/z).
    const double kappa = c / (1.0 - s);
    const double a = 1.0 / (1.0 - s);
    const double z = kappa * std::pow(N, 1.0 - s);
    if (z <= a - 1.0) return std::nullopt;
    const double integral = std::pow(kappa, -a) / (1.0 - s) * std::pow(z, a - 1.0) / (1.0 - (a - 1.0) / z);
    return S_n * (1.0 + integral);
}

} // namespace detail

struct RenewalExistence {
    bool exists = false;
    std::string evidence;
    std::vector<double> partial_sums; // sum_{j=1}^{J} prod_{i<j} (1 - q_i) at J = 10, 100, 1000, ...
};

// sum_{j>=1} prod_{i<j} (1 - q_i) < infinity, decided from the parametric tail.
inline RenewalExistence renewal_exists(const RenewalSpec& spec) {
    spec.validate();
    RenewalExistence r;
    {
        CompensatedSum s;
        double S = 1.0;
        std::size_t mark = 10;
        for (std::size_t j = 1; j <= 1000000; ++j) {
            S *= 1.0 - spec.q(j - 1);
            s.add(S);
            if (j == mark) {
                r.partial_sums.push_back(s.value());
                mark *= 10;
            }
        }
    }
    if (spec.q_inf > 0.0) {
        r.exists = true;
        r.evidence = "q_j -> q_inf = " + format_double(spec.q_inf) + " > 0, geometric summand";
    } else if (spec.tail_s < 1.0) {
        r.exists = true;
        r.evidence = "q_j ~ c j^-s with s = " + format_double(spec.tail_s) + " < 1, stretched-exponential summand";
    } else if (spec.tail_s == 1.0) {
        r.exists = spec.tail_c > 1.0;
        r.evidence = "q_j ~ c/j with c = " + format_double(spec.tail_c) + ", summand ~ j^-c";
    } else {
        r.exists = false;
        r.evidence = "sum q_j < infinity, the summand has a positive limit";
    }
    return r;
}

// Hazards known only as a finite list cannot decide convergence.
inline RenewalExistence renewal_exists(std::span<const double> q) {
    std::ostringstream msg;
    msg << "renewal existence from " << q.size() << " listed hazards has no parametric tail";
    throw Undetermined(msg.str());
}

enum class Verdict3 { yes, no, undetermined };

inline std::string to_string(Verdict3 v) {
    switch (v) {
    case Verdict3::yes: return "true";
    case Verdict3::no: return "false";
    case Verdict3::undetermined: return "undetermined";
    }
    return "?";
}

struct RenewalClassification {
    RenewalSpec spec;
    bool exists = false;
    Verdict3 has_gcb = Verdict3::undetermined;
    std::string evidence;
    std::vector<double> f_prefix;
};

// GCB holds iff sum_n f_n r^n < infinity for some r > 1.
inline RenewalClassification gcb_classification(const RenewalSpec& spec, std::size_t prefix_len = 10) {
    RenewalClassification c;
    c.spec = spec;
    const auto ex = renewal_exists(spec);
    c.exists = ex.exists;
    c.f_prefix = interarrival(spec, prefix_len).f;
    if (!c.exists) {
        c.evidence = "no renewal measure: " + ex.evidence;
        return c;
    }
    const auto [lo, hi] = spec.range_from(1);
    (void)hi;
    if (lo > 0.0) {
        c.has_gcb = Verdict3::yes;
        c.evidence = "hazards bounded below by " + format_double(lo) + ", f_n <= (1 - " + format_double(lo) +
                     ")^(n-1): exponential tail";
    } else if (spec.q_inf == 0.0 && spec.tail_c > 0.0 && spec.tail_s < 1.0) {
        c.has_gcb = Verdict3::no;
        const double a = 1.0 - spec.tail_s;
        c.evidence = "log f_n ~ -" + format_double(spec.tail_c / a) + " n^" + format_double(a) +
                     ": stretched-exponential, no exponential moment";
    } else {
        c.evidence = "tail " + ex.evidence + ", no exponential-moment classification";
    }
    return c;
}

inline CsvTable classification_table(const std::vector<RenewalClassification>& cs) {
    CsvTable t({"prefix", "q_inf", "tail_c", "tail_s", "exists", "has_gcb", "evidence", "f_prefix"});
    auto join = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_double(v[i]);
        return s;
    };
    for (const auto& c : cs)
        t.add_row({join(c.spec.prefix), format_double(c.spec.q_inf), format_double(c.spec.tail_c),
                   format_double(c.spec.tail_s), c.exists ? "true" : "false", to_string(c.has_gcb), c.evidence,
                   join(c.f_prefix)});
    return t;
}

struct StationaryMarginals {
    Interval mean_interarrival;  // sum_n n f_n
    Interval one;                // mu([1]) = 1 / mean
    std::vector<Interval> zeros; // zeros[m] encloses mu([0^m]), m = 0..n_max
    std::size_t terms = 0;
};

// mu([1]) = 1/E T and mu([0^m]) = mu([1]) sum_{k>=m} P(T > k), with the series
// truncated under a certified tail bound.
inline StationaryMarginals stationary_marginals(const RenewalSpec& spec, std::size_t n_max, double tol = 1e-13,
                                                std::size_t max_terms = 50'000'000) {
    if (!renewal_exists(spec).exists) throw NoStationaryMeasure("the renewal series diverges");
    std::vector<double> S{1.0}; // S[k] = P(T > k)
    std::optional<double> tail;
    CompensatedSum total;
    total.add(1.0);
    for (std::size_t k = 1;; ++k) {
        S.push_back(S.back() * (1.0 - spec.q(k - 1)));
        total.add(S.back());
        if (k >= n_max + 1) {
            const double next = S.back() * (1.0 - spec.q(k));
            tail = detail::survival_tail_bound(spec, k + 1, next);
            if (tail && *tail < tol * total.value()) break;
        }
        if (k > max_terms) throw NoStationaryMeasure("mean inter-arrival time not certified within the term budget");
    }
    StationaryMarginals m;
    m.terms = S.size();
    const double lo = round_down(total.value() * (1.0 - 1e-14));
    const double hi = round_up((total.value() + *tail) * (1.0 + 1e-14));
    m.mean_interarrival = {lo, hi};
    m.one = {round_down(1.0 / hi), round_up(1.0 / lo)};
    // suffix sums sum_{k >= m} S_k
    std::vector<double> suffix(n_max + 1);
    CompensatedSum acc;
    for (std::size_t k = S.size(); k-- > 0;) {
        acc.add(S[k]);
        if (k <= n_max) suffix[k] = acc.value();
    }
    for (std::size_t z = 0; z <= n_max; ++z)
        m.zeros.push_back({round_down(m.one.lo * suffix[z] * (1.0 - 1e-14)),
                           std::min(1.0, round_up(m.one.hi * (suffix[z] + *tail) * (1.0 + 1e-14)))});
    return m;
}

// Q(m,0) = 1 - Q(m,m+1) = f_{m+1} / sum_{i>m} f_i on states 0..M, with Q(M,0) = 1.
inline std::vector<std::vector<double>> renewal_markov_chain(std::span<const double> f, std::size_t M) {
    std::vector<double> tail(f.size() + 1, 0.0);
    for (std::size_t i = f.size(); i-- > 0;) tail[i] = tail[i + 1] + f[i];
    std::vector<std::vector<double>> Q(M + 1, std::vector<double>(M + 1, 0.0));
    for (std::size_t m = 0; m < M; ++m) {
        if (m >= f.size() || !(tail[m] > 0.0))
            throw TailExhausted("no inter-arrival mass beyond " + std::to_string(m) + " below the cap " + std::to_string(M));
        const double stop = std::clamp(f[m] / tail[m], 0.0, 1.0);
        Q[m][0] = stop;
        Q[m][m + 1] = 1.0 - stop;
    }
    Q[M][0] = 1.0;
    return Q;
}

// Smallest m with P(T > m) below `threshold`.
inline std::size_t default_state_cap(const RenewalSpec& spec, double threshold = 1e-12, std::size_t limit = 10'000'000) {
    double S = 1.0;
    for (std::size_t m = 0; m < limit; ++m) {
        if (S < threshold) return m;
        S *= 1.0 - spec.q(m);
    }
    throw TailExhausted("inter-arrival tail stays above the threshold up to " + std::to_string(limit));
}

// Hazards are used directly past the point where f would underflow.
inline std::vector<std::vector<double>> renewal_markov_chain(const RenewalSpec& spec, std::optional<std::size_t> cap = {}) {
    spec.validate();
    const std::size_t M = cap ? *cap : default_state_cap(spec);
    std::vector<std::vector<double>> Q(M + 1, std::vector<double>(M + 1, 0.0));
    for (std::size_t m = 0; m < M; ++m) {
        Q[m][0] = spec.q(m);
        Q[m][m + 1] = 1.0 - spec.q(m);
    }
    Q[M][0] = 1.0;
    return Q;
}

// log mu([0^m]) at the midpoints of the enclosures, for slope diagnostics.
inline std::vector<double> zero_run_log_profile(const StationaryMarginals& m) {
    std::vector<double> out;
    for (const auto& z : m.zeros) out.push_back(std::log(0.5 * (z.lo + z.hi)));
    return out;
}

} // namespace scum
