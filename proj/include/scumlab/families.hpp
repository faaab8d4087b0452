#pragma once

#include "enumeration.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "numeric.hpp"
#include "sequence.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace scum {

namespace detail {

inline void check_row(std::span<const double> row, const std::string& what) {
    CompensatedSum s;
    for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(what + ": probability outside [0,1]");
        s.add(p);
    }
    if (std::abs(s.value() - 1.0) > 1e-12) throw NormalizationError(what + ": row sums to " + std::to_string(s.value()));
}

inline double pad_up(double x) { return std::min(1.0, round_up(x * (1.0 + 1e-14) + 1e-16)); }
inline double pad_down(double x) { return std::max(0.0, round_down(x * (1.0 - 1e-14) - 1e-16)); }
inline double pad_up_unbounded(double x) { return std::isfinite(x) ? round_up(x * (1.0 + 1e-14) + 1e-16) : x; }

// Binary families use symbol 0 for -1 and symbol 1 for +1.
inline double spin(Symbol s) { return s == 0 ? -1.0 : 1.0; }

inline std::string spin_label(Symbol s) { return s == 0 ? "-1" : "+1"; }

} // namespace detail

// ---------------------------------------------------------------- i.i.d.

class IidKernel final : public Kernel {
public:
    explicit IidKernel(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw InvalidArgument("i.i.d. kernel needs at least one symbol");
        detail::check_row(probs_, "iid");
        provider_ = std::make_unique<FiniteMemoryProvider>(ContextTable(probs_.size(), 0, probs_));
    }
    [[nodiscard]] Alphabet alphabet() const override { return Alphabet::finite(probs_.size()); }
    [[nodiscard]] std::string name() const override { return "iid"; }
    [[nodiscard]] double probability(Symbol a, const History&) const override {
        return a < probs_.size() ? probs_[a] : 0.0;
    }
    [[nodiscard]] ConditionalDistribution distribution(const History&, const TruncationPolicy&) const override {
        return {probs_, 0.0, {}};
    }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override { return 0; }
    [[nodiscard]] const RegularityProvider* regularity() const override { return provider_.get(); }
    [[nodiscard]] std::span<const double> probabilities() const { return probs_; }

private:
    std::vector<double> probs_;
    std::unique_ptr<FiniteMemoryProvider> provider_;
};

// ---------------------------------------------------------------- Markov of order k

// Transition law of order k: rows indexed like ContextTable (symbol at lag i is
// the digit of weight n^{i-1}, so a context written oldest-first reads as a
// base-n number).
class MarkovKernel final : public Kernel {
public:
    explicit MarkovKernel(ContextTable table, std::string name = "markov")
        : table_(std::move(table)), name_(std::move(name)) {
        for (std::size_t c = 0; c < table_.contexts(); ++c) detail::check_row(table_.row(c), name_);
        provider_ = std::make_unique<FiniteMemoryProvider>(table_);
    }

    // One-step chain from a row-stochastic matrix.
    static std::shared_ptr<MarkovKernel> from_matrix(const std::vector<std::vector<double>>& Q) {
        const std::size_t n = Q.size();
        if (n == 0) throw InvalidArgument("transition matrix must be nonempty");
        std::vector<double> rows;
        for (const auto& r : Q) {
            if (r.size() != n) throw InvalidArgument("transition matrix must be square");
            rows.insert(rows.end(), r.begin(), r.end());
        }
        return std::make_shared<MarkovKernel>(ContextTable(n, 1, std::move(rows)));
    }

    [[nodiscard]] Alphabet alphabet() const override { return Alphabet::finite(table_.alphabet()); }
    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] double probability(Symbol a, const History& h) const override {
        return a < table_.alphabet() ? table_.at(context_index(h), a) : 0.0;
    }
    [[nodiscard]] ConditionalDistribution distribution(const History& h, const TruncationPolicy&) const override {
        const auto r = table_.row(context_index(h));
        return {std::vector<double>(r.begin(), r.end()), 0.0, {}};
    }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override { return table_.length(); }
    [[nodiscard]] const RegularityProvider* regularity() const override { return provider_.get(); }

    [[nodiscard]] const ContextTable& table() const { return table_; }
    [[nodiscard]] std::size_t order() const { return table_.length(); }

    [[nodiscard]] std::size_t context_index(const History& h) const {
        std::size_t c = 0;
        for (std::size_t lag = table_.length(); lag >= 1; --lag) c = c * table_.alphabet() + h.at(lag);
        return c;
    }

    // Transition matrix of the one-step chain; throws unless the order is 1.
    [[nodiscard]] std::vector<std::vector<double>> matrix() const {
        if (table_.length() != 1) throw OrderMismatch("transition matrix needs an order-1 chain");
        std::vector<std::vector<double>> Q(table_.alphabet());
        for (std::size_t c = 0; c < table_.contexts(); ++c) Q[c].assign(table_.row(c).begin(), table_.row(c).end());
        return Q;
    }

private:
    ContextTable table_;
    std::string name_;
    std::unique_ptr<FiniteMemoryProvider> provider_;
};

// ---------------------------------------------------------------- link functions

// Increasing psi: R -> (0,1) with psi(u) + psi(-u) = 1.
class Link {
public:
    static Link logistic() { return Link(Kind::logistic, {}, 0.5); }

    // Piecewise linear on u >= 0 through the knots (u_i, psi_i), starting at
    // (0, 1/2), constant after the last knot, extended by psi(-u) = 1 - psi(u).
    static Link table(std::vector<std::pair<double, double>> knots, double declared_lipschitz) {
        if (knots.empty() || knots.front().first != 0.0 || knots.front().second != 0.5)
            throw InvalidArgument("link table must start at (0, 1/2)");
        double slope = 0.0;
        for (std::size_t i = 1; i < knots.size(); ++i) {
            const double du = knots[i].first - knots[i - 1].first;
            const double dp = knots[i].second - knots[i - 1].second;
            if (!(du > 0.0) || dp < 0.0) throw InvalidArgument("link table must be increasing");
            slope = std::max(slope, dp / du);
        }
        if (!(knots.back().second < 1.0)) throw InvalidArgument("link table must stay below 1");
        if (slope > declared_lipschitz * (1.0 + 1e-12))
            throw InvalidArgument("declared Lipschitz constant below the table slope");
        return Link(Kind::table, std::move(knots), declared_lipschitz);
    }

    [[nodiscard]] double operator()(double u) const {
        if (kind_ == Kind::logistic) return 1.0 / (1.0 + std::exp(-2.0 * u));
        if (u < 0.0) return 1.0 - (*this)(-u);
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            if (u <= knots_[i].first) {
                const auto [u0, p0] = knots_[i - 1];
                const auto [u1, p1] = knots_[i];
                return p0 + (p1 - p0) * (u - u0) / (u1 - u0);
            }
        }
        return knots_.back().second;
    }

    [[nodiscard]] double sup_derivative() const { return lipschitz_; }

    // sup_u psi(u + t) - psi(u - t), for t >= 0.
    [[nodiscard]] double sup_increment(double t) const {
        if (kind_ == Kind::logistic) return std::tanh(t);
        return std::min(2.0 * lipschitz_ * t, 2.0 * knots_.back().second - 1.0);
    }

    // psi' bounded away from 0 on bounded sets.
    [[nodiscard]] bool locally_strictly_increasing() const { return kind_ == Kind::logistic; }

    [[nodiscard]] std::string name() const { return kind_ == Kind::logistic ? "logistic" : "table"; }
    [[nodiscard]] const std::vector<std::pair<double, double>>& knots() const { return knots_; }

private:
    enum class Kind { logistic, table };
    Link(Kind k, std::vector<std::pair<double, double>> knots, double lip)
        : kind_(k), knots_(std::move(knots)), lipschitz_(lip) {}

    Kind kind_;
    std::vector<std::pair<double, double>> knots_;
    double lipschitz_;
};

// ---------------------------------------------------------------- binary autoregressive

struct BinaryARSpec {
    CoefficientSequence xi;          // xi_1, xi_2, ...
    double xi0 = 0.0;
    bool xi0_is_sum = false;         // xi_0 = sum_{j>=1} xi_j
    Link psi = Link::logistic();
};

class BinaryARKernel final : public Kernel, public RegularityProvider {
public:
    explicit BinaryARKernel(BinaryARSpec spec) : spec_(std::move(spec)) {
        if (!spec_.xi.abs_summable()) throw DivergentSeries("binary AR coefficients are not absolutely summable");
        total_ = spec_.xi.signed_sum(1);
        if (spec_.xi0_is_sum) spec_.xi0 = total_.mid();
        abs_total_ = spec_.xi.abs_sum(1);
        if (!std::isfinite(abs_total_.hi)) throw DivergentSeries("binary AR coefficients are not absolutely summable");
    }

    [[nodiscard]] Alphabet alphabet() const override { return Alphabet::finite(2); }
    [[nodiscard]] std::string name() const override { return "binary_ar"; }
    [[nodiscard]] std::string label(Symbol s) const override { return detail::spin_label(s); }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override {
        const std::size_t end = spec_.xi.support_end();
        if (end == std::numeric_limits<std::size_t>::max()) return std::nullopt;
        return end;
    }
    [[nodiscard]] const RegularityProvider* regularity() const override { return this; }

    // r(x) = sum_j xi_j x_{-j} + xi_0
    [[nodiscard]] double field(const History& h) const {
        const std::size_t depth = h.explicit_depth();
        const std::size_t end = spec_.xi.support_end();
        CompensatedSum s;
        s.add(spec_.xi0);
        const std::size_t explicit_end = std::min(depth, end);
        for (std::size_t j = 1; j <= explicit_end; ++j) s.add(spec_.xi(j) * detail::spin(h.at(j)));
        if (end > depth) {
            std::vector<double> w;
            for (Symbol f : h.fill()) w.push_back(detail::spin(f));
            s.add(spec_.xi.periodic_sum(depth + 1, w, h.fill_phase()));
        }
        return s.value();
    }

    [[nodiscard]] double probability(Symbol a, const History& h) const override {
        if (a > 1) return 0.0;
        const double r = field(h);
        return a == 1 ? spec_.psi(r) : spec_.psi(-r);
    }
    [[nodiscard]] ConditionalDistribution distribution(const History& h, const TruncationPolicy&) const override {
        const double r = field(h);
        return {{spec_.psi(-r), spec_.psi(r)}, 0.0, {}};
    }

    // Osc_j <= 2 (sup psi') |xi_j|
    [[nodiscard]] std::optional<double> osc_upper(std::size_t j) const override {
        if (j == 0) return std::nullopt;
        return detail::pad_up(2.0 * spec_.psi.sup_derivative() * std::abs(spec_.xi(j)));
    }
    // A single past with every other coordinate set to +1 (or -1).
    [[nodiscard]] std::optional<double> osc_lower(std::size_t j) const override {
        if (j == 0) return std::nullopt;
        const double x = std::abs(spec_.xi(j));
        double best = 0.0;
        for (double sign : {1.0, -1.0}) {
            const double A = spec_.xi0 + sign * (total_.mid() - spec_.xi(j));
            best = std::max(best, spec_.psi(A + x) - spec_.psi(A - x));
        }
        return detail::pad_down(best);
    }
    [[nodiscard]] std::optional<double> var_upper(std::size_t j) const override {
        const double T = spec_.xi.abs_sum(j + 1).hi;
        if (j == 0) return detail::pad_up(spec_.psi(spec_.xi0 + T) - spec_.psi(spec_.xi0 - T));
        return detail::pad_up(std::min(2.0 * spec_.psi.sup_derivative() * T, spec_.psi.sup_increment(T)));
    }
    // Pasts whose last j symbols are all +1 (or all -1), completed by sign(xi_k) and -sign(xi_k).
    [[nodiscard]] std::optional<double> var_lower(std::size_t j) const override {
        const double T = spec_.xi.abs_sum(j + 1).lo;
        if (j == 0) return detail::pad_down(spec_.psi(spec_.xi0 + T) - spec_.psi(spec_.xi0 - T));
        const double Sj = total_.mid() - spec_.xi.signed_sum(j + 1).mid();
        double best = 0.0;
        for (double sign : {1.0, -1.0}) {
            const double A = spec_.xi0 + sign * Sj;
            best = std::max(best, spec_.psi(A + T) - spec_.psi(A - T));
        }
        return detail::pad_down(best);
    }
    [[nodiscard]] std::optional<TailCertificate> osc_tail(std::size_t from) const override {
        const double bound = detail::pad_up(2.0 * spec_.psi.sup_derivative() * spec_.xi.abs_sum(std::max<std::size_t>(from, 1)).hi);
        return TailCertificate{bound, std::min(1.0, bound)};
    }
    [[nodiscard]] std::optional<TailCertificate> var_tail(std::size_t from) const override {
        double sum = 0.0;
        std::size_t start = from;
        if (from == 0) {
            sum = *var_upper(0);
            start = 1;
        }
        const double rest = 2.0 * spec_.psi.sup_derivative() * spec_.xi.abs_tail_of_tails(start).hi;
        sum = detail::pad_up_unbounded(sum + rest);
        double sup = *var_upper(start);
        if (from == 0) sup = std::max(sup, *var_upper(0));
        return TailCertificate{sum, sup};
    }
    [[nodiscard]] bool var_lower_sum_diverges() const override {
        return spec_.psi.locally_strictly_increasing() && spec_.xi.has_tail() &&
               spec_.xi.tail() == CoefficientSequence::Tail::power && spec_.xi.tail_parameter() <= 2.0;
    }
    [[nodiscard]] std::optional<double> inf_probability() const override {
        return detail::pad_down(spec_.psi(-std::abs(spec_.xi0) - abs_total_.hi));
    }

    [[nodiscard]] const BinaryARSpec& spec() const { return spec_; }

private:
    BinaryARSpec spec_;
    Interval total_;
    Interval abs_total_;
};

// ---------------------------------------------------------------- Poisson regression

struct PoissonRegressionSpec {
    CoefficientSequence xi; // nonpositive
    double cap = 1.0;
};

class PoissonRegressionKernel final : public Kernel, public RegularityProvider {
public:
    explicit PoissonRegressionKernel(PoissonRegressionSpec spec) : spec_(std::move(spec)) {
        if (!(spec_.cap > 0.0)) throw InvalidArgument("Poisson regression cap must be positive");
        for (double x : spec_.xi.prefix())
            if (x > 0.0) throw InvalidArgument("Poisson regression coefficients must be nonpositive");
        if (spec_.xi.has_tail() && spec_.xi.tail_scale() > 0.0)
            throw InvalidArgument("Poisson regression coefficients must be nonpositive");
        if (!spec_.xi.abs_summable() || !std::isfinite(spec_.xi.abs_sum(1).hi))
            throw DivergentSeries("Poisson regression coefficients are not summable");
    }

    [[nodiscard]] Alphabet alphabet() const override { return Alphabet::countable(); }
    [[nodiscard]] std::string name() const override { return "poisson"; }
    [[nodiscard]] const RegularityProvider* regularity() const override { return this; }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override {
        const std::size_t end = spec_.xi.support_end();
        if (end == std::numeric_limits<std::size_t>::max()) return std::nullopt;
        return end;
    }

    // v(x) = exp(sum_j xi_j min(x_{-j}, c))
    [[nodiscard]] double intensity(const History& h) const {
        const std::size_t depth = h.explicit_depth();
        const std::size_t end = spec_.xi.support_end();
        CompensatedSum s;
        const std::size_t explicit_end = std::min(depth, end);
        for (std::size_t j = 1; j <= explicit_end; ++j) s.add(spec_.xi(j) * weight(h.at(j)));
        if (end > depth) {
            std::vector<double> w;
            for (Symbol f : h.fill()) w.push_back(weight(f));
            s.add(spec_.xi.periodic_sum(depth + 1, w, h.fill_phase()));
        }
        return std::exp(s.value());
    }

    [[nodiscard]] double probability(Symbol a, const History& h) const override { return pmf(a, intensity(h)); }

    [[nodiscard]] ConditionalDistribution distribution(const History& h, const TruncationPolicy& policy) const override {
        const double v = intensity(h);
        ConditionalDistribution d;
        CompensatedSum mass;
        double p = std::exp(-v);
        for (std::size_t a = 0; mass.value() < 1.0 - policy.tau; ++a) {
            if (a >= policy.support_cap) throw NormalizationError("Poisson mass below 1 - tau at the support cap");
            if (a > 0) p *= v / static_cast<double>(a);
            d.probabilities.push_back(p);
            mass.add(p);
        }
        d.truncation_mass = std::max(0.0, 1.0 - mass.value());
        d.extension = [v](Symbol a) { return pmf(a, v); };
        return d;
    }

    static double pmf(Symbol a, double v) {
        return std::exp(-v + static_cast<double>(a) * std::log(v) - std::lgamma(static_cast<double>(a) + 1.0));
    }

    // Changing coordinates moves log v by at most t, v <= 1, and Poisson laws
    // with means v, v' are within total variation 1 - exp(-|v - v'|).
    static double tv_for_log_shift(double t) { return -std::expm1(std::expm1(-t)); }

    [[nodiscard]] std::optional<double> osc_upper(std::size_t j) const override {
        if (j == 0) return std::nullopt;
        return detail::pad_up(tv_for_log_shift(spec_.cap * std::abs(spec_.xi(j))));
    }
    [[nodiscard]] std::optional<double> var_upper(std::size_t j) const override {
        return detail::pad_up(tv_for_log_shift(spec_.cap * spec_.xi.abs_sum(j + 1).hi));
    }
    [[nodiscard]] std::optional<TailCertificate> osc_tail(std::size_t from) const override {
        const double b = detail::pad_up(spec_.cap * spec_.xi.abs_sum(std::max<std::size_t>(from, 1)).hi);
        return TailCertificate{b, std::min(1.0, b)};
    }
    [[nodiscard]] std::optional<TailCertificate> var_tail(std::size_t from) const override {
        double sum = 0.0;
        std::size_t start = from;
        if (from == 0) {
            sum = *var_upper(0);
            start = 1;
        }
        const double rest = spec_.cap * spec_.xi.abs_tail_of_tails(start).hi;
        if (!std::isfinite(rest)) return TailCertificate{kInf, *var_upper(from)};
        return TailCertificate{round_up(sum + rest * (1.0 + 1e-14)), *var_upper(from)};
    }

    [[nodiscard]] const PoissonRegressionSpec& spec() const { return spec_; }

private:
    [[nodiscard]] double weight(Symbol s) const { return std::min(static_cast<double>(s), spec_.cap); }
    PoissonRegressionSpec spec_;
};

// ---------------------------------------------------------------- mixture of Markov chains

struct MarkovMixtureSpec {
    std::vector<double> lambda;           // lambda[j] weights the order-j component
    std::vector<ContextTable> components; // components[j] has context length j
};

class MarkovMixtureKernel final : public Kernel {
public:
    explicit MarkovMixtureKernel(MarkovMixtureSpec spec) : spec_(std::move(spec)) {
        if (spec_.lambda.empty() || spec_.lambda.size() != spec_.components.size())
            throw InvalidArgument("mixture needs one component per weight");
        for (double l : spec_.lambda)
            if (!(l >= 0.0)) throw InvalidArgument("mixture weights must be nonnegative");
        if (std::abs(compensated_total(spec_.lambda) - 1.0) > 1e-12) throw NormalizationError("mixture weights must sum to 1");
        n_ = spec_.components.front().alphabet();
        for (std::size_t j = 0; j < spec_.components.size(); ++j) {
            const auto& c = spec_.components[j];
            if (c.length() != j)
                throw OrderMismatch("component " + std::to_string(j) + " has context length " + std::to_string(c.length()));
            if (c.alphabet() != n_) throw InvalidArgument("mixture components must share the alphabet");
            for (std::size_t k = 0; k < c.contexts(); ++k) detail::check_row(c.row(k), "mixture component");
        }
        memory_ = 0;
        for (std::size_t j = 0; j < spec_.lambda.size(); ++j)
            if (spec_.lambda[j] > 0.0) memory_ = j;
        const PastSpec any = PastSpec::constant(0);
        provider_ = std::make_unique<FiniteMemoryProvider>(tabulate(*this, memory_, any));
    }

    [[nodiscard]] Alphabet alphabet() const override { return Alphabet::finite(n_); }
    [[nodiscard]] std::string name() const override { return "markov_mixture"; }
    [[nodiscard]] double probability(Symbol a, const History& h) const override {
        if (a >= n_) return 0.0;
        CompensatedSum s;
        std::size_t c = 0;
        for (std::size_t j = 0; j < spec_.components.size(); ++j) {
            // c indexes the last j symbols
            if (j > 0) c += static_cast<std::size_t>(h.at(j)) * spec_.components[j].digit_weight(j);
            if (spec_.lambda[j] > 0.0) s.add(spec_.lambda[j] * spec_.components[j].at(c, a));
        }
        return s.value();
    }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override { return memory_; }
    [[nodiscard]] const RegularityProvider* regularity() const override { return provider_.get(); }

    // Var_j <= sum_{i > j} lambda_i
    [[nodiscard]] double weight_tail(std::size_t j) const {
        CompensatedSum s;
        for (std::size_t i = j + 1; i < spec_.lambda.size(); ++i) s.add(spec_.lambda[i]);
        return s.value();
    }
    [[nodiscard]] const MarkovMixtureSpec& spec() const { return spec_; }

private:
    MarkovMixtureSpec spec_;
    std::size_t n_ = 0;
    std::size_t memory_ = 0;
    std::unique_ptr<FiniteMemoryProvider> provider_;
};

// ---------------------------------------------------------------- renewal

// q_j for j >= 0: explicit prefix q_0..q_{P-1}, then q_j = q_inf + c j^{-s}.
struct RenewalSpec {
    std::vector<double> prefix;
    double q_inf = 0.0;
    double tail_c = 0.0;
    double tail_s = 1.0;

    [[nodiscard]] double q(std::size_t j) const {
        if (j < prefix.size()) return prefix[j];
        if (tail_c == 0.0) return q_inf;
        return q_inf + tail_c * std::pow(static_cast<double>(j), -tail_s);
    }

    // Range of {q_m : m >= M} together with its limit q_inf.
    [[nodiscard]] std::pair<double, double> range_from(std::size_t M) const {
        double lo = q_inf, hi = q_inf;
        for (std::size_t m = M; m < prefix.size(); ++m) {
            lo = std::min(lo, prefix[m]);
            hi = std::max(hi, prefix[m]);
        }
        if (tail_c != 0.0) {
            const double first = q(std::max(M, prefix.size()));
            lo = std::min(lo, first);
            hi = std::max(hi, first);
        }
        return {lo, hi};
    }

    void validate() const {
        if (!(q_inf >= 0.0 && q_inf <= 1.0)) throw InvalidArgument("q_inf must lie in [0,1]");
        for (double v : prefix)
            if (!(v > 0.0 && v < 1.0)) throw InvalidArgument("renewal q_j must lie in (0,1)");
        if (tail_c != 0.0) {
            if (prefix.empty()) throw InvalidArgument("a power tail needs q_0 in the prefix");
            if (!(tail_s > 0.0)) throw InvalidArgument("renewal tail exponent must be positive");
            const double first = q(prefix.size());
            if (!(first > 0.0 && first < 1.0) || !(q_inf < 1.0) || (q_inf == 0.0 && tail_c < 0.0))
                throw InvalidArgument("renewal tail leaves (0,1)");
        } else if (!(q_inf > 0.0 && q_inf < 1.0)) {
            throw InvalidArgument("constant renewal tail must lie in (0,1)");
        }
    }
};

class RenewalKernel final : public Kernel, public RegularityProvider {
public:
    explicit RenewalKernel(RenewalSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    [[nodiscard]] Alphabet alphabet() const override { return Alphabet::finite(2); }
    [[nodiscard]] std::string name() const override { return "renewal"; }
    [[nodiscard]] const RegularityProvider* regularity() const override { return this; }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override {
        if (spec_.tail_c != 0.0) return std::nullopt;
        for (double v : spec_.prefix)
            if (v != spec_.q_inf) return std::nullopt;
        return 0;
    }

    // l(x): distance from the present to the last 1, minus one; nullopt if no 1.
    static std::optional<std::size_t> distance_to_last_one(const History& h) {
        const auto lag = h.last_lag_of(1);
        if (!lag) return std::nullopt;
        return *lag - 1;
    }

    [[nodiscard]] double hazard(const History& h) const {
        const auto l = distance_to_last_one(h);
        return l ? spec_.q(*l) : spec_.q_inf;
    }
    [[nodiscard]] double probability(Symbol a, const History& h) const override {
        if (a > 1) return 0.0;
        const double q = hazard(h);
        return a == 1 ? q : 1.0 - q;
    }
    [[nodiscard]] ConditionalDistribution distribution(const History& h, const TruncationPolicy&) const override {
        const double q = hazard(h);
        return {{1.0 - q, q}, 0.0, {}};
    }

    [[nodiscard]] std::optional<double> osc_upper(std::size_t j) const override {
        if (j == 0) return std::nullopt;
        return detail::pad_up(osc_exact(j));
    }
    [[nodiscard]] std::optional<double> osc_lower(std::size_t j) const override {
        if (j == 0) return std::nullopt;
        return detail::pad_down(osc_exact(j));
    }
    [[nodiscard]] std::optional<double> var_upper(std::size_t j) const override { return detail::pad_up(var_exact(j)); }
    [[nodiscard]] std::optional<double> var_lower(std::size_t j) const override { return detail::pad_down(var_exact(j)); }

    [[nodiscard]] std::optional<TailCertificate> osc_tail(std::size_t from) const override {
        from = std::max<std::size_t>(from, 1);
        const std::size_t P = spec_.prefix.size();
        // Beyond j = P + 1 the oscillation is |c| (j-1)^{-s}.
        CompensatedSum s;
        double sup = 0.0;
        for (std::size_t j = from; j <= P; ++j) {
            const double v = *osc_upper(j);
            s.add(v);
            sup = std::max(sup, v);
        }
        const std::size_t start = std::max(from, P + 1);
        double tail = 0.0;
        if (spec_.tail_c != 0.0) {
            if (spec_.tail_s <= 1.0) return TailCertificate{kInf, std::max(sup, *osc_upper(start))};
            tail = std::abs(spec_.tail_c) * hurwitz_zeta(spec_.tail_s, static_cast<double>(start - 1)).enclosure().hi;
            sup = std::max(sup, *osc_upper(start));
        }
        return TailCertificate{detail::pad_up_unbounded(s.value() + tail), sup};
    }
    [[nodiscard]] std::optional<TailCertificate> var_tail(std::size_t from) const override {
        const std::size_t P = std::max<std::size_t>(spec_.prefix.size(), 1);
        CompensatedSum s;
        double sup = 0.0;
        for (std::size_t j = from; j < P; ++j) {
            const double v = *var_upper(j);
            s.add(v);
            sup = std::max(sup, v);
        }
        const std::size_t start = std::max(from, P);
        double tail = 0.0;
        if (spec_.tail_c != 0.0) {
            if (spec_.tail_s <= 1.0) return TailCertificate{kInf, std::max(sup, *var_upper(start))};
            tail = std::abs(spec_.tail_c) * hurwitz_zeta(spec_.tail_s, static_cast<double>(start)).enclosure().hi;
            sup = std::max(sup, *var_upper(start));
        }
        return TailCertificate{detail::pad_up_unbounded(s.value() + tail), sup};
    }
    [[nodiscard]] bool osc_lower_sum_diverges() const override { return spec_.tail_c != 0.0 && spec_.tail_s <= 1.0; }
    [[nodiscard]] bool var_lower_sum_diverges() const override { return spec_.tail_c != 0.0 && spec_.tail_s <= 1.0; }
    [[nodiscard]] std::optional<double> inf_probability() const override {
        const auto [lo, hi] = spec_.range_from(0);
        return detail::pad_down(std::min(lo, 1.0 - hi));
    }

    [[nodiscard]] const RenewalSpec& spec() const { return spec_; }

private:
    // Only pasts whose first j-1 symbols are 0 react to lag j: a 1 there gives
    // l = j-1, a 0 leaves any l in {j, j+1, ...} or no 1 at all.
    [[nodiscard]] double osc_exact(std::size_t j) const {
        const double here = spec_.q(j - 1);
        const auto [lo, hi] = spec_.range_from(j);
        return std::max(std::abs(here - lo), std::abs(here - hi));
    }
    [[nodiscard]] double var_exact(std::size_t j) const {
        const auto [lo, hi] = spec_.range_from(j);
        return hi - lo;
    }

    RenewalSpec spec_;
};

// ---------------------------------------------------------------- Bramson-Kalikow-Friedli

struct BKFSpec {
    enum class Phi { linear, step };
    double epsilon = 0.1;
    std::vector<double> lambda;
    std::vector<std::size_t> m;
    Phi phi = Phi::linear;

    [[nodiscard]] double phi_at(double s) const {
        if (phi == Phi::linear) return 0.5 + (0.5 - epsilon) * s;
        if (s > 0.0) return 1.0 - epsilon;
        if (s < 0.0) return epsilon;
        return 0.5;
    }

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("BKF epsilon must lie in (0, 1/2)");
        if (lambda.empty() || lambda.size() != m.size()) throw InvalidArgument("BKF needs one window per weight");
        for (double l : lambda)
            if (!(l > 0.0)) throw InvalidArgument("BKF weights must be positive");
        if (std::abs(compensated_total(lambda) - 1.0) > 1e-12) throw NormalizationError("BKF weights must sum to 1");
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i] % 2 == 0) throw InvalidArgument("BKF windows must be odd");
            if (i > 0 && m[i] <= m[i - 1]) throw InvalidArgument("BKF windows must increase");
        }
    }
};

// With `keep` set, components beyond the first `keep` are replaced by the
// constant 1 - epsilon.
class BKFKernel final : public Kernel, public RegularityProvider {
public:
    explicit BKFKernel(BKFSpec spec, std::optional<std::size_t> keep = std::nullopt)
        : spec_(std::move(spec)), keep_(keep ? std::min(*keep, spec_.lambda.size()) : spec_.lambda.size()) {
        spec_.validate();
        CompensatedSum s;
        for (std::size_t i = keep_; i < spec_.lambda.size(); ++i) s.add(spec_.lambda[i]);
        replaced_weight_ = s.value();
    }

    [[nodiscard]] Alphabet alphabet() const override { return Alphabet::finite(2); }
    [[nodiscard]] std::string name() const override { return keep_ < spec_.lambda.size() ? "bkf_tail_replaced" : "bkf"; }
    [[nodiscard]] std::string label(Symbol s) const override { return detail::spin_label(s); }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override { return keep_ == 0 ? 0 : spec_.m[keep_ - 1]; }
    [[nodiscard]] const RegularityProvider* regularity() const override { return this; }

    [[nodiscard]] double plus_probability(const History& h) const {
        CompensatedSum g;
        double running = 0.0;
        std::size_t lag = 0;
        for (std::size_t i = 0; i < keep_; ++i) {
            for (; lag < spec_.m[i]; ++lag) running += detail::spin(h.at(lag + 1));
            g.add(spec_.lambda[i] * spec_.phi_at(running / static_cast<double>(spec_.m[i])));
        }
        g.add((1.0 - spec_.epsilon) * replaced_weight_);
        return g.value();
    }

    [[nodiscard]] double probability(Symbol a, const History& h) const override {
        if (a > 1) return 0.0;
        const double p = plus_probability(h);
        return a == 1 ? p : 1.0 - p;
    }
    [[nodiscard]] ConditionalDistribution distribution(const History& h, const TruncationPolicy&) const override {
        const double p = plus_probability(h);
        return {{1.0 - p, p}, 0.0, {}};
    }

    [[nodiscard]] std::optional<double> osc_upper(std::size_t j) const override {
        if (j == 0 || spec_.phi != BKFSpec::Phi::linear) return std::nullopt;
        return detail::pad_up(osc_linear(j));
    }
    [[nodiscard]] std::optional<double> osc_lower(std::size_t j) const override {
        if (j == 0 || spec_.phi != BKFSpec::Phi::linear) return std::nullopt;
        return detail::pad_down(osc_linear(j));
    }
    [[nodiscard]] std::optional<double> var_upper(std::size_t j) const override {
        const double slope = 1.0 - 2.0 * spec_.epsilon;
        CompensatedSum s;
        for (std::size_t i = 0; i < keep_; ++i) {
            if (spec_.m[i] <= j) continue;
            const double share = spec_.phi == BKFSpec::Phi::linear
                                     ? static_cast<double>(spec_.m[i] - j) / static_cast<double>(spec_.m[i])
                                     : 1.0;
            s.add(spec_.lambda[i] * share);
        }
        return detail::pad_up(slope * s.value());
    }
    [[nodiscard]] std::optional<double> var_lower(std::size_t j) const override {
        if (spec_.phi != BKFSpec::Phi::linear) return std::nullopt;
        return detail::pad_down(*var_upper(j) / (1.0 + 1e-13));
    }
    [[nodiscard]] std::optional<TailCertificate> osc_tail(std::size_t from) const override {
        if (spec_.phi != BKFSpec::Phi::linear) return std::nullopt;
        CompensatedSum s;
        double sup = 0.0;
        for (std::size_t j = std::max<std::size_t>(from, 1); j <= memory(); ++j) {
            const double v = *osc_upper(j);
            s.add(v);
            sup = std::max(sup, v);
        }
        return TailCertificate{detail::pad_up_unbounded(s.value()), sup};
    }
    [[nodiscard]] std::optional<TailCertificate> var_tail(std::size_t from) const override {
        CompensatedSum s;
        double sup = 0.0;
        for (std::size_t j = from; j < memory(); ++j) {
            const double v = *var_upper(j);
            s.add(v);
            sup = std::max(sup, v);
        }
        return TailCertificate{detail::pad_up_unbounded(s.value()), sup};
    }
    [[nodiscard]] std::optional<double> inf_probability() const override { return detail::pad_down(spec_.epsilon); }

    [[nodiscard]] const BKFSpec& spec() const { return spec_; }
    [[nodiscard]] std::size_t memory() const { return keep_ == 0 ? 0 : spec_.m[keep_ - 1]; }

private:
    [[nodiscard]] double osc_linear(std::size_t j) const {
        CompensatedSum s;
        for (std::size_t i = 0; i < keep_; ++i)
            if (spec_.m[i] >= j) s.add(spec_.lambda[i] / static_cast<double>(spec_.m[i]));
        return (1.0 - 2.0 * spec_.epsilon) * s.value();
    }

    BKFSpec spec_;
    std::size_t keep_;
    double replaced_weight_ = 0.0;
};

// ---------------------------------------------------------------- k-step Markov approximation

// g^[k](a | x_{-k}^{-1}) = g(a | x_{-k}^{-1} y), the history beyond lag k frozen to y.
class FrozenHistoryKernel final : public Kernel, public RegularityProvider {
public:
    FrozenHistoryKernel(KernelPtr source, std::size_t k, PastSpec y)
        : source_(std::move(source)), k_(k), y_(std::move(y)) {
        if (!source_) throw InvalidArgument("null source kernel");
        if (k_ == 0) throw InvalidArgument("Markov approximation order must be at least 1");
        y_.validate(source_->alphabet());
    }

    [[nodiscard]] Alphabet alphabet() const override { return source_->alphabet(); }
    [[nodiscard]] std::string name() const override { return source_->name() + "_markov" + std::to_string(k_); }
    [[nodiscard]] std::string label(Symbol s) const override { return source_->label(s); }
    [[nodiscard]] std::optional<std::size_t> effective_memory() const override { return k_; }
    [[nodiscard]] const RegularityProvider* regularity() const override { return this; }

    [[nodiscard]] double probability(Symbol a, const History& h) const override {
        const auto w = window(h);
        return source_->probability(a, History(w, y_));
    }
    [[nodiscard]] ConditionalDistribution distribution(const History& h, const TruncationPolicy& policy) const override {
        const auto w = window(h);
        return source_->distribution(History(w, y_), policy);
    }

    // Changing lag j <= k of the window is a lag-j change for g; pairs that
    // agree on lags 1..j are pairs of g-pasts agreeing there as well.
    [[nodiscard]] std::optional<double> osc_upper(std::size_t j) const override {
        if (j == 0) return std::nullopt;
        if (j > k_) return 0.0;
        return src() ? src()->osc_upper(j) : std::nullopt;
    }
    [[nodiscard]] std::optional<double> var_upper(std::size_t j) const override {
        if (j >= k_) return 0.0;
        return src() ? src()->var_upper(j) : std::nullopt;
    }
    [[nodiscard]] std::optional<TailCertificate> osc_tail(std::size_t from) const override {
        return finite_tail(std::max<std::size_t>(from, 1), k_ + 1, [this](std::size_t j) { return osc_upper(j); });
    }
    [[nodiscard]] std::optional<TailCertificate> var_tail(std::size_t from) const override {
        return finite_tail(from, k_, [this](std::size_t j) { return var_upper(j); });
    }
    [[nodiscard]] std::optional<double> inf_probability() const override {
        return src() ? src()->inf_probability() : std::nullopt;
    }

    [[nodiscard]] const Kernel& source() const { return *source_; }
    [[nodiscard]] std::size_t order() const { return k_; }
    [[nodiscard]] const PastSpec& frozen_past() const { return y_; }

private:
    [[nodiscard]] const RegularityProvider* src() const { return source_->regularity(); }

    [[nodiscard]] std::vector<Symbol> window(const History& h) const {
        std::vector<Symbol> w(k_);
        for (std::size_t lag = 1; lag <= k_; ++lag) w[k_ - lag] = h.at(lag);
        return w;
    }

    template <class F>
    static std::optional<TailCertificate> finite_tail(std::size_t from, std::size_t end, F f) {
        CompensatedSum s;
        double sup = 0.0;
        for (std::size_t j = from; j < end; ++j) {
            const auto v = f(j);
            if (!v) return std::nullopt;
            s.add(*v);
            sup = std::max(sup, *v);
        }
        return TailCertificate{detail::pad_up_unbounded(s.value()), sup};
    }

    KernelPtr source_;
    std::size_t k_;
    PastSpec y_;
};

// ---------------------------------------------------------------- builders

inline KernelPtr build_iid(std::vector<double> probs) { return std::make_shared<IidKernel>(std::move(probs)); }
inline KernelPtr build_markov(const std::vector<std::vector<double>>& Q) { return MarkovKernel::from_matrix(Q); }
inline KernelPtr build_markov_order(ContextTable table) { return std::make_shared<MarkovKernel>(std::move(table)); }
inline KernelPtr build_binary_ar(BinaryARSpec spec) { return std::make_shared<BinaryARKernel>(std::move(spec)); }
inline KernelPtr build_poisson_regression(PoissonRegressionSpec spec) {
    return std::make_shared<PoissonRegressionKernel>(std::move(spec));
}
inline KernelPtr build_markov_mixture(MarkovMixtureSpec spec) { return std::make_shared<MarkovMixtureKernel>(std::move(spec)); }
inline KernelPtr build_renewal(RenewalSpec spec) { return std::make_shared<RenewalKernel>(std::move(spec)); }
inline KernelPtr build_bkf(BKFSpec spec) { return std::make_shared<BKFKernel>(std::move(spec)); }

inline KernelPtr markov_approximation(KernelPtr kernel, std::size_t k, PastSpec y) {
    return std::make_shared<FrozenHistoryKernel>(std::move(kernel), k, std::move(y));
}

// The BKF kernel with components j > k replaced by 1 - epsilon, a kernel of
// memory m_k.
inline KernelPtr bkf_tail_replacement(BKFSpec spec, std::size_t k) {
    return std::make_shared<BKFKernel>(std::move(spec), k);
}

} // namespace scum
