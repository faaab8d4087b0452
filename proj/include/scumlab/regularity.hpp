#pragma once

#include "enumeration.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "numeric.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scum {

enum class BoundMethod { analytic, exact_enumeration, sampled_lower_bound };

inline std::string to_string(BoundMethod m) {
    switch (m) {
    case BoundMethod::analytic: return "analytic";
    case BoundMethod::exact_enumeration: return "exact-enumeration";
    case BoundMethod::sampled_lower_bound: return "sampled-lower-bound";
    }
    return "?";
}

struct LagBound {
    std::size_t lag = 0;
    double lower = 0.0;
    double upper = 1.0;
    BoundMethod method = BoundMethod::sampled_lower_bound;
};

// Osc_j for j = 1..osc.size() and Var_j for j = 0..var.size()-1, with
// certificates for the sums over all later lags.
struct RegularityProfile {
    std::string kernel_name;
    std::vector<LagBound> osc;
    std::vector<LagBound> var;
    std::optional<TailCertificate> osc_tail;
    std::optional<TailCertificate> var_tail;
    bool osc_lower_diverges = false;
    bool var_lower_diverges = false;
    std::optional<double> inf_g;

    [[nodiscard]] std::vector<double> osc_upper() const {
        std::vector<double> v;
        for (const auto& b : osc) v.push_back(b.upper);
        return v;
    }
    [[nodiscard]] std::vector<double> var_upper() const {
        std::vector<double> v;
        for (const auto& b : var) v.push_back(b.upper);
        return v;
    }

    // Exact finite profile: the listed values, zero afterwards.
    static RegularityProfile from_values(std::vector<double> osc_values, std::vector<double> var_values) {
        RegularityProfile p;
        p.kernel_name = "explicit";
        for (std::size_t j = 0; j < osc_values.size(); ++j)
            p.osc.push_back({j + 1, osc_values[j], osc_values[j], BoundMethod::analytic});
        for (std::size_t j = 0; j < var_values.size(); ++j)
            p.var.push_back({j, var_values[j], var_values[j], BoundMethod::analytic});
        p.osc_tail = TailCertificate{0.0, 0.0};
        p.var_tail = TailCertificate{0.0, 0.0};
        return p;
    }
};

struct ProfileOptions {
    std::size_t max_lag = 16;     // Osc_1..Osc_J and Var_0..Var_J
    std::size_t context_len = 12; // enumeration depth L
    std::size_t budget = kDefaultEnumerationBudget;
};

namespace detail {

inline bool enumerable(const Kernel& kernel, std::size_t L, std::size_t budget) {
    const Alphabet A = kernel.alphabet();
    if (!A.is_finite()) return false;
    const std::size_t n = A.size();
    const std::size_t count = power_count(n, L, budget);
    return count <= budget && count * n <= budget;
}

inline std::vector<ContextTable> tables_for_constant_fills(const Kernel& kernel, std::size_t L, std::size_t budget) {
    std::vector<ContextTable> tables;
    const std::size_t n = kernel.alphabet().size();
    const std::size_t fills = kernel.effective_memory() && *kernel.effective_memory() <= L ? 1 : n;
    for (std::size_t c = 0; c < fills; ++c) tables.push_back(tabulate(kernel, L, PastSpec::constant(static_cast<Symbol>(c)), budget));
    return tables;
}

inline double clamp_probability(double x) { return std::clamp(x, 0.0, 1.0); }

// Combines the enumerated lower bound with the provider and the memory facts.
inline LagBound combine(std::size_t lag, std::optional<double> enumerated, bool exact, bool beyond_memory,
                        std::optional<double> prov_lower, std::optional<double> prov_upper) {
    LagBound b{lag, 0.0, 1.0, BoundMethod::sampled_lower_bound};
    if (beyond_memory) return {lag, 0.0, 0.0, BoundMethod::exact_enumeration};
    double lower = 0.0;
    if (enumerated) lower = *enumerated;
    if (prov_lower) lower = std::max(lower, *prov_lower);
    b.lower = clamp_probability(lower);
    if (exact && enumerated) {
        b.upper = clamp_probability(*enumerated == 0.0 ? 0.0 : *enumerated + 1e-15);
        b.method = BoundMethod::exact_enumeration;
        if (prov_upper) b.upper = std::min(b.upper, *prov_upper);
    } else if (prov_upper) {
        b.upper = clamp_probability(*prov_upper);
        b.method = BoundMethod::analytic;
    }
    if (b.lower > b.upper + 1e-12)
        throw InvalidArgument("lag " + std::to_string(lag) + ": certified upper bound " + std::to_string(b.upper) +
                              " below enumerated value " + std::to_string(b.lower));
    b.lower = std::min(b.lower, b.upper);
    return b;
}

} // namespace detail

// Osc_j: the enumerated lower bound over contexts of length L completed by
// each constant fill, and the provider's upper bound (1 without one).
inline LagBound oscillation(const Kernel& kernel, std::size_t j, std::size_t L,
                            std::size_t budget = kDefaultEnumerationBudget) {
    if (j == 0) throw InvalidArgument("oscillation is defined for lags j >= 1");
    if (L < j) throw InvalidArgument("context length must be at least the lag");
    if (!kernel.alphabet().is_finite()) throw Intractable("enumeration needs a finite alphabet");
    if (!detail::enumerable(kernel, L + 1, budget)) throw Intractable("context pair enumeration exceeds the budget");
    const auto mem = kernel.effective_memory();
    const bool exact = mem && *mem <= L;
    double enumerated = 0.0;
    for (const auto& t : detail::tables_for_constant_fills(kernel, L, budget))
        enumerated = std::max(enumerated, table_oscillation(t, j));
    const auto* p = kernel.regularity();
    return detail::combine(j, enumerated, exact, mem && j > *mem, p ? p->osc_lower(j) : std::nullopt,
                           p ? p->osc_upper(j) : std::nullopt);
}

// Var_j: pairs agree at lags 1..j and vary at lags j+1..L above a shared fill.
inline LagBound variation(const Kernel& kernel, std::size_t j, std::size_t L,
                          std::size_t budget = kDefaultEnumerationBudget) {
    if (L < j) throw InvalidArgument("context length must be at least the lag");
    if (!kernel.alphabet().is_finite()) throw Intractable("enumeration needs a finite alphabet");
    if (!detail::enumerable(kernel, L + 1, budget)) throw Intractable("context pair enumeration exceeds the budget");
    const auto mem = kernel.effective_memory();
    const bool exact = mem && *mem <= L;
    double enumerated = 0.0;
    for (const auto& t : detail::tables_for_constant_fills(kernel, L, budget))
        enumerated = std::max(enumerated, table_variation(t, j, budget));
    const auto* p = kernel.regularity();
    return detail::combine(j, enumerated, exact, mem && j >= *mem, p ? p->var_lower(j) : std::nullopt,
                           p ? p->var_upper(j) : std::nullopt);
}

// Profile from the provider, enumeration (where tractable) and the memory of
// the kernel.
inline RegularityProfile compute_profile(const Kernel& kernel, const ProfileOptions& opt = {}) {
    RegularityProfile prof;
    prof.kernel_name = kernel.name();
    const auto* p = kernel.regularity();
    const auto mem = kernel.effective_memory();
    std::size_t L = opt.context_len;
    if (mem) L = std::min(L, *mem);
    std::vector<ContextTable> tables;
    if (detail::enumerable(kernel, L + 1, opt.budget)) tables = detail::tables_for_constant_fills(kernel, L, opt.budget);
    const bool exact = mem && *mem <= L && !tables.empty();
    for (std::size_t j = 1; j <= opt.max_lag; ++j) {
        std::optional<double> e;
        if (!tables.empty() && j <= L) {
            double v = 0.0;
            for (const auto& t : tables) v = std::max(v, table_oscillation(t, j));
            e = v;
        }
        prof.osc.push_back(detail::combine(j, e, exact, mem && j > *mem, p ? p->osc_lower(j) : std::nullopt,
                                           p ? p->osc_upper(j) : std::nullopt));
    }
    for (std::size_t j = 0; j <= opt.max_lag; ++j) {
        std::optional<double> e;
        if (!tables.empty() && j <= L) {
            double v = 0.0;
            for (const auto& t : tables) v = std::max(v, table_variation(t, j, opt.budget));
            e = v;
        }
        prof.var.push_back(detail::combine(j, e, exact, mem && j >= *mem, p ? p->var_lower(j) : std::nullopt,
                                           p ? p->var_upper(j) : std::nullopt));
    }
    if (mem && *mem <= opt.max_lag) {
        prof.osc_tail = TailCertificate{0.0, 0.0};
        prof.var_tail = TailCertificate{0.0, 0.0};
    } else if (p) {
        prof.osc_tail = p->osc_tail(opt.max_lag + 1);
        prof.var_tail = p->var_tail(opt.max_lag + 1);
    }
    if (p) {
        prof.osc_lower_diverges = p->osc_lower_sum_diverges();
        prof.var_lower_diverges = p->var_lower_sum_diverges();
        prof.inf_g = p->inf_probability();
    }
    return prof;
}

// Delta = 1 - sum_j Osc_j as [1 - sum upper - tail, 1 - sum lower].
inline Interval delta_constant(const RegularityProfile& prof) {
    if (!prof.osc_tail) throw UncertifiedTail("no certificate for the oscillation tail of " + prof.kernel_name);
    if (prof.osc_lower_diverges) return {-kInf, -kInf};
    Interval upper_sum = Interval::point(0.0);
    Interval lower_sum = Interval::point(0.0);
    for (const auto& b : prof.osc) {
        upper_sum += Interval::point(b.upper);
        lower_sum += Interval::point(b.lower);
    }
    upper_sum += Interval::point(prof.osc_tail->sum_upper);
    return {round_down(1.0 - upper_sum.hi), std::min(1.0, round_up(1.0 - lower_sum.lo))};
}

struct GammaValue {
    Interval value;
    bool flagged_zero = false; // the lower bounds on Var_j have a divergent sum
};

// Gamma = prod_j (1 - Var_j), accumulated in the log domain.
inline GammaValue gamma_constant(const RegularityProfile& prof) {
    if (prof.var_lower_diverges) return {{0.0, 0.0}, true};
    if (!prof.var_tail) throw UncertifiedTail("no certificate for the variation tail of " + prof.kernel_name);
    CompensatedSum log_lo, log_hi;
    for (const auto& b : prof.var) {
        if (b.upper >= 1.0)
            throw DegenerateLag("Var_" + std::to_string(b.lag) + " upper bound " + std::to_string(b.upper) + " is not below 1");
        log_lo.add(std::log1p(-b.upper));
        log_hi.add(std::log1p(-b.lower));
    }
    double tail_log = 0.0;
    if (prof.var_tail->sum_upper > 0.0) {
        if (!std::isfinite(prof.var_tail->sum_upper)) return {{0.0, std::exp(log_hi.value()) * (1.0 + 1e-15)}, false};
        if (prof.var_tail->sup_term >= 1.0) throw DegenerateLag("variation tail reaches 1");
        // -log(1 - v) <= v / (1 - v_max)
        tail_log = prof.var_tail->sum_upper / (1.0 - prof.var_tail->sup_term);
    }
    const double n = static_cast<double>(prof.var.size() + 1);
    const double slack = 4.0 * n * std::numeric_limits<double>::epsilon();
    const double lo_log = log_lo.value() - tail_log;
    const double lo = std::exp(lo_log - slack * (1.0 + std::abs(lo_log)));
    const double hi = std::exp(log_hi.value() + slack * (1.0 + std::abs(log_hi.value())));
    return {{std::clamp(lo, 0.0, 1.0), std::clamp(hi, 0.0, 1.0)}, false};
}

// gamma_1 = Var_0, gamma_k = Var_{k-1} prod_{i<k-1} (1 - Var_i).
inline std::vector<double> gamma_sequence(std::span<const double> var, std::size_t n) {
    std::vector<double> g(n);
    double survive = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double v = k - 1 < var.size() ? var[k - 1] : 0.0;
        g[k - 1] = v * survive;
        survive *= 1.0 - v;
    }
    return g;
}

inline std::vector<double> gamma_sequence(const RegularityProfile& prof, std::size_t n) {
    const auto v = prof.var_upper();
    if (n > v.size() && !(prof.var_tail && prof.var_tail->sum_upper == 0.0))
        throw InvalidArgument("profile has Var bounds only up to lag " + std::to_string(v.size()));
    return gamma_sequence(v, n);
}

struct MarkovDiagnostics {
    std::vector<std::vector<double>> Q;
    double d_Q = 0.0;
    std::vector<double> d_powers; // d(Q^m), m = 1..m_max
    double d_sum = 0.0;           // sum_{m <= m_max} d(Q^m) + certified tail bound
    double tail_bound = 0.0;
};

inline Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& Q) {
    const auto n = static_cast<Eigen::Index>(Q.size());
    Eigen::MatrixXd M(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(Q[static_cast<std::size_t>(i)].size()) != n) throw InvalidArgument("matrix must be square");
        for (Eigen::Index j = 0; j < n; ++j) M(i, j) = Q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return M;
}

// Largest total variation distance between two rows.
inline double dobrushin_coefficient(const Eigen::MatrixXd& M) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index k = i + 1; k < M.rows(); ++k) {
            CompensatedSum s;
            for (Eigen::Index j = 0; j < M.cols(); ++j) s.add(std::abs(M(i, j) - M(k, j)));
            d = std::max(d, 0.5 * s.value());
        }
    return std::min(d, 1.0);
}

inline void check_stochastic(const std::vector<std::vector<double>>& Q) {
    if (Q.empty()) throw InvalidArgument("transition matrix must be nonempty");
    for (const auto& row : Q) {
        if (row.size() != Q.size()) throw InvalidArgument("transition matrix must be square");
        CompensatedSum s;
        for (double p : row) {
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("transition matrix entry outside [0,1]");
            s.add(p);
        }
        if (std::abs(s.value() - 1.0) > 1e-12) throw InvalidArgument("transition matrix row does not sum to 1");
    }
}

inline MarkovDiagnostics dobrushin_diagnostics(const std::vector<std::vector<double>>& Q, std::size_t m_max = 64) {
    check_stochastic(Q);
    if (m_max == 0) throw InvalidArgument("m_max must be positive");
    MarkovDiagnostics out;
    out.Q = Q;
    const Eigen::MatrixXd M = to_matrix(Q);
    Eigen::MatrixXd P = M;
    CompensatedSum sum;
    std::optional<std::pair<std::size_t, double>> contracting; // (m0, d(Q^{m0})) with d < 1
    for (std::size_t m = 1; m <= m_max; ++m) {
        if (m > 1) P = P * M;
        const double d = dobrushin_coefficient(P);
        out.d_powers.push_back(d);
        sum.add(d);
        if (!contracting && d < 1.0) contracting = {m, d};
    }
    out.d_Q = out.d_powers.front();
    const double last = out.d_powers.back();
    if (out.d_Q < 1.0) {
        // d(Q^m) <= d(Q^{m_max}) d(Q)^{m - m_max}
        out.tail_bound = last * out.d_Q / (1.0 - out.d_Q);
    } else if (contracting) {
        // d(Q^{m_max + i + t m0}) <= d(Q^{m_max}) d(Q^{m0})^t for 1 <= i <= m0
        const auto [m0, rho] = *contracting;
        out.tail_bound = static_cast<double>(m0) * last / (1.0 - rho);
    } else {
        throw TailUnbounded("d(Q^m) = 1 for every m <= " + std::to_string(m_max));
    }
    out.d_sum = round_up(sum.value() + out.tail_bound);
    return out;
}

// Stationary row vector of an irreducible stochastic matrix.
inline std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& Q) {
    check_stochastic(Q);
    const Eigen::MatrixXd M = to_matrix(Q);
    const Eigen::Index n = M.rows();
    Eigen::MatrixXd A = M.transpose() - Eigen::MatrixXd::Identity(n, n);
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    const Eigen::VectorXd pi = A.fullPivLu().solve(b);
    if (!((A * pi - b).norm() < 1e-9)) throw NoStationaryMeasure("stationary system is singular");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::max(0.0, pi(i));
    return out;
}

struct RecursionBound {
    std::vector<double> terms;          // per-lag bound, lag 1..n
    std::vector<double> partial_sums;   // cumulative
    double total = 0.0;
    std::optional<double> closed_form;  // (1 - C)/C when C > 0
    bool within_closed_form = true;

    [[nodiscard]] double closed_form_or_throw() const {
        if (!closed_form) throw DeltaNonpositive("closed-form bound needs a positive constant");
        return *closed_form;
    }
};

namespace detail {

// x_j = c_j + sum_{k<j} c_{j-k} x_k, skipping zero coefficients.
inline std::vector<double> renewal_type_recursion(std::span<const double> c, std::size_t n) {
    std::vector<double> x(n, 0.0);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < std::min(c.size(), n); ++i)
        if (c[i] != 0.0) support.push_back(i + 1);
    for (std::size_t j = 1; j <= n; ++j) {
        CompensatedSum s;
        if (j <= c.size()) s.add(c[j - 1]);
        for (std::size_t d : support) {
            if (d >= j) break;
            s.add(c[d - 1] * x[j - d - 1]);
        }
        x[j - 1] = s.value();
    }
    return x;
}

inline RecursionBound finish(std::vector<double> terms, std::optional<double> constant) {
    RecursionBound r;
    r.terms = std::move(terms);
    CompensatedSum s;
    for (double t : r.terms) {
        s.add(t);
        r.partial_sums.push_back(s.value());
    }
    r.total = s.value();
    if (constant && *constant > 0.0) {
        r.closed_form = (1.0 - *constant) / *constant;
        r.within_closed_form = r.total <= *r.closed_form + 1e-9;
    }
    return r;
}

} // namespace detail

// alpha_j = Osc_j + sum_{k<j} Osc_{j-k} alpha_k bounds P(eta_j != omega_j).
inline RecursionBound coupling_error_bound_osc(std::span<const double> osc, std::size_t n,
                                               std::optional<double> delta = std::nullopt) {
    if (!delta) {
        CompensatedSum s;
        for (double o : osc) s.add(o);
        delta = 1.0 - s.value();
    }
    return detail::finish(detail::renewal_type_recursion(osc, n), delta);
}

inline RecursionBound coupling_error_bound_osc(const RegularityProfile& prof, std::size_t n) {
    const auto osc = prof.osc_upper();
    if (n > osc.size() && !(prof.osc_tail && prof.osc_tail->sum_upper == 0.0))
        throw InvalidArgument("profile has Osc bounds only up to lag " + std::to_string(osc.size()));
    return detail::finish(detail::renewal_type_recursion(osc, n), delta_constant(prof).lo);
}

// u_j = gamma_j + sum_{k<j} gamma_{j-k} u_k, the renewal probabilities of the
// auxiliary chain.
inline RecursionBound renewal_disagreement(std::span<const double> var, std::size_t n,
                                           std::optional<double> gamma = std::nullopt) {
    const auto g = gamma_sequence(var, n);
    if (!gamma) {
        double prod = 1.0;
        for (double v : var) prod *= 1.0 - v;
        gamma = prod;
    }
    return detail::finish(detail::renewal_type_recursion(g, n), gamma);
}

inline RecursionBound renewal_disagreement(const RegularityProfile& prof, std::size_t n) {
    const auto g = gamma_sequence(prof, n);
    const GammaValue gv = gamma_constant(prof);
    return detail::finish(detail::renewal_type_recursion(g, n), gv.value.lo);
}

struct ConcentrationConstants {
    Interval delta;
    GammaValue gamma;
    bool delta_applicable = false;
    bool gamma_applicable = false;
    Interval c_delta; // Delta^{-2}/8
    Interval c_gamma; // Gamma^{-2}/8

    // Larger of the conservative ends of Delta and Gamma.
    [[nodiscard]] double best() const {
        double c = 0.0;
        if (delta_applicable) c = std::max(c, delta.lo);
        if (gamma_applicable) c = std::max(c, gamma.value.lo);
        if (!(c > 0.0)) throw NotApplicable("neither Delta nor Gamma is certified positive");
        return c;
    }
    [[nodiscard]] std::string best_name() const {
        return gamma_applicable && (!delta_applicable || gamma.value.lo > delta.lo) ? "Gamma" : "Delta";
    }
    // C = best()^{-2}/8 and (1+r)^2/8 with r = (1 - best)/best coincide.
    [[nodiscard]] double gcb_constant() const {
        const double c = best();
        return round_up(1.0 / (8.0 * c * c));
    }
};

inline Interval inverse_square_over_eight(Interval c) {
    if (!(c.lo > 0.0)) return {round_down(1.0 / (8.0 * c.hi * c.hi)), kInf};
    return {round_down(1.0 / (8.0 * round_up(c.hi * c.hi))), round_up(1.0 / (8.0 * round_down(c.lo * c.lo)))};
}

inline ConcentrationConstants gcb_constants(const RegularityProfile& prof) {
    ConcentrationConstants c;
    c.delta = prof.osc_tail ? delta_constant(prof) : Interval{-kInf, 1.0};
    try {
        c.gamma = gamma_constant(prof);
    } catch (const DegenerateLag&) {
        c.gamma = {{0.0, 1.0}, false};
    } catch (const UncertifiedTail&) {
        c.gamma = {{0.0, 1.0}, false};
    }
    c.delta_applicable = c.delta.lo > 0.0;
    c.gamma_applicable = !c.gamma.flagged_zero && c.gamma.value.lo > 0.0;
    if (!c.delta_applicable && !c.gamma_applicable)
        throw NotApplicable("Delta <= 0 and Gamma = 0 for " + prof.kernel_name);
    if (c.delta_applicable) c.c_delta = inverse_square_over_eight(c.delta);
    if (c.gamma_applicable) c.c_gamma = inverse_square_over_eight(c.gamma.value);
    return c;
}

// exp(theta^2 C^{-2} |delta|^2 / 8)
inline double mgf_bound(double theta, double constant, double delta_norm_sq) {
    return std::exp(theta * theta * delta_norm_sq / (8.0 * constant * constant));
}

// 2 exp(-2 u^2 / (C^{-2} |delta|^2))
inline double deviation_bound(double u, double constant, double delta_norm_sq) {
    if (delta_norm_sq == 0.0) return u > 0.0 ? 0.0 : 2.0;
    return 2.0 * std::exp(-2.0 * u * u * constant * constant / delta_norm_sq);
}

} // namespace scum
