#pragma once

#include "errors.hpp"
#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace scum {

inline constexpr std::size_t kDefaultEnumerationBudget = std::size_t{1} << 26;

// g(.|z) for every context z of length L over a finite alphabet. Context index
// c has the symbol at lag i as its base-n digit of weight n^{i-1}.
class ContextTable {
public:
    ContextTable(std::size_t alphabet, std::size_t length, std::vector<double> rows)
        : n_(alphabet), length_(length), rows_(std::move(rows)) {
        count_ = 1;
        for (std::size_t i = 0; i < length_; ++i) count_ *= n_;
        if (rows_.size() != count_ * n_) throw InvalidArgument("context table has wrong size");
    }

    [[nodiscard]] std::size_t alphabet() const { return n_; }
    [[nodiscard]] std::size_t length() const { return length_; }
    [[nodiscard]] std::size_t contexts() const { return count_; }
    [[nodiscard]] std::span<const double> row(std::size_t c) const { return {rows_.data() + c * n_, n_}; }
    [[nodiscard]] double at(std::size_t c, Symbol a) const { return rows_[c * n_ + a]; }

    [[nodiscard]] std::size_t digit_weight(std::size_t lag) const {
        std::size_t w = 1;
        for (std::size_t i = 1; i < lag; ++i) w *= n_;
        return w;
    }
    [[nodiscard]] Symbol symbol_at(std::size_t c, std::size_t lag) const {
        return static_cast<Symbol>((c / digit_weight(lag)) % n_);
    }

    // Context word oldest first, x_{-L} .. x_{-1}.
    [[nodiscard]] std::vector<Symbol> word(std::size_t c) const {
        std::vector<Symbol> w(length_);
        for (std::size_t i = 1; i <= length_; ++i) {
            w[length_ - i] = static_cast<Symbol>(c % n_);
            c /= n_;
        }
        return w;
    }

private:
    std::size_t n_;
    std::size_t length_;
    std::size_t count_ = 1;
    std::vector<double> rows_;
};

inline double total_variation(std::span<const double> p, std::span<const double> q) {
    CompensatedSum s;
    for (std::size_t a = 0; a < p.size(); ++a) s.add(std::abs(p[a] - q[a]));
    return 0.5 * s.value();
}

inline std::size_t power_count(std::size_t base, std::size_t exponent, std::size_t budget) {
    std::size_t v = 1;
    for (std::size_t i = 0; i < exponent; ++i) {
        if (v > budget / base) return budget + 1;
        v *= base;
    }
    return v;
}

// Tabulates the kernel on all contexts of length L completed by `fill`.
inline ContextTable tabulate(const Kernel& kernel, std::size_t L, const PastSpec& fill,
                             std::size_t budget = kDefaultEnumerationBudget) {
    const Alphabet A = kernel.alphabet();
    if (!A.is_finite()) throw Intractable("enumeration needs a finite alphabet");
    const std::size_t n = A.size();
    const std::size_t count = power_count(n, L, budget);
    if (count > budget || count * n > budget)
        throw Intractable("enumerating " + std::to_string(n) + "^" + std::to_string(L) + " contexts exceeds the budget");
    std::vector<double> rows(count * n);
    std::vector<Symbol> ctx(L, 0);
    for (std::size_t c = 0; c < count; ++c) {
        std::size_t rest = c;
        for (std::size_t i = 1; i <= L; ++i) {
            ctx[L - i] = static_cast<Symbol>(rest % n);
            rest /= n;
        }
        const History h(ctx, fill);
        for (std::size_t a = 0; a < n; ++a) rows[c * n + a] = kernel.probability(static_cast<Symbol>(a), h);
    }
    return ContextTable(n, L, std::move(rows));
}

// max over contexts differing only at lag j of the total variation of the rows.
inline double table_oscillation(const ContextTable& t, std::size_t j) {
    if (j == 0 || j > t.length()) return 0.0;
    const std::size_t n = t.alphabet();
    const std::size_t w = t.digit_weight(j);
    double best = 0.0;
    for (std::size_t c = 0; c < t.contexts(); ++c) {
        const std::size_t d = (c / w) % n;
        for (std::size_t b = d + 1; b < n; ++b) {
            const std::size_t c2 = c + (b - d) * w;
            best = std::max(best, total_variation(t.row(c), t.row(c2)));
        }
    }
    return best;
}

// max over contexts agreeing at lags 1..j of the total variation of the rows.
inline double table_variation(const ContextTable& t, std::size_t j, std::size_t budget = kDefaultEnumerationBudget) {
    if (j >= t.length()) return 0.0;
    const std::size_t n = t.alphabet();
    const std::size_t groups = t.digit_weight(j + 1); // n^j
    const std::size_t members = t.contexts() / groups;
    double best = 0.0;
    if (n == 2) {
        for (std::size_t g = 0; g < groups; ++g) {
            double lo = 1.0, hi = 0.0;
            for (std::size_t m = 0; m < members; ++m) {
                const double p = t.at(g + m * groups, 1);
                lo = std::min(lo, p);
                hi = std::max(hi, p);
            }
            best = std::max(best, hi - lo);
        }
        return best;
    }
    if (members > 0 && groups * members > budget / std::max<std::size_t>(1, members))
        throw Intractable("pairwise variation enumeration exceeds the budget");
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t m1 = 0; m1 < members; ++m1)
            for (std::size_t m2 = m1 + 1; m2 < members; ++m2)
                best = std::max(best, total_variation(t.row(g + m1 * groups), t.row(g + m2 * groups)));
    return best;
}

inline double table_min_probability(const ContextTable& t) {
    double m = 1.0;
    for (std::size_t c = 0; c < t.contexts(); ++c)
        for (double p : t.row(c)) m = std::min(m, p);
    return m;
}

// Exact moduli of a kernel whose dependence stops at a finite lag: since the
// kernel ignores everything beyond `memory`, the table suprema equal the
// suprema over infinite pasts.
class FiniteMemoryProvider : public RegularityProvider {
public:
    explicit FiniteMemoryProvider(const ContextTable& table, std::size_t budget = kDefaultEnumerationBudget)
        : memory_(table.length()) {
        osc_.assign(memory_ + 1, 0.0);
        var_.assign(memory_ + 1, 0.0);
        for (std::size_t j = 1; j <= memory_; ++j) osc_[j] = table_oscillation(table, j);
        for (std::size_t j = 0; j < memory_; ++j) var_[j] = table_variation(table, j, budget);
        inf_ = table_min_probability(table);
    }

    [[nodiscard]] std::optional<double> osc_upper(std::size_t j) const override { return pad(osc(j)); }
    [[nodiscard]] std::optional<double> osc_lower(std::size_t j) const override { return osc(j); }
    [[nodiscard]] std::optional<double> var_upper(std::size_t j) const override { return pad(var(j)); }
    [[nodiscard]] std::optional<double> var_lower(std::size_t j) const override { return var(j); }
    [[nodiscard]] std::optional<TailCertificate> osc_tail(std::size_t from) const override {
        return TailCertificate{sum_from(osc_, std::max<std::size_t>(from, 1)), sup_from(osc_, std::max<std::size_t>(from, 1))};
    }
    [[nodiscard]] std::optional<TailCertificate> var_tail(std::size_t from) const override {
        return TailCertificate{sum_from(var_, from), sup_from(var_, from)};
    }
    [[nodiscard]] std::optional<double> inf_probability() const override { return std::max(0.0, inf_ - 1e-15); }

    [[nodiscard]] std::size_t memory() const { return memory_; }

private:
    [[nodiscard]] double osc(std::size_t j) const { return j >= 1 && j <= memory_ ? osc_[j] : 0.0; }
    [[nodiscard]] double var(std::size_t j) const { return j < memory_ ? var_[j] : 0.0; }
    // Rounding in the row evaluations and the total variation sums.
    static double pad(double x) { return x == 0.0 ? 0.0 : std::min(1.0, x + 1e-15); }
    static double sum_from(const std::vector<double>& v, std::size_t from) {
        CompensatedSum s;
        for (std::size_t j = from; j < v.size(); ++j) s.add(pad(v[j]));
        return round_up(s.value());
    }
    static double sup_from(const std::vector<double>& v, std::size_t from) {
        double m = 0.0;
        for (std::size_t j = from; j < v.size(); ++j) m = std::max(m, pad(v[j]));
        return m;
    }

    std::size_t memory_;
    std::vector<double> osc_;
    std::vector<double> var_;
    double inf_ = 0.0;
};

} // namespace scum
