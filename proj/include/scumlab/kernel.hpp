#pragma once

#include "errors.hpp"
#include "numeric.hpp"
#include "random.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scum {

// Canonical symbol index. Families map their own labels ({-1,+1}, counts, ...)
// onto 0, 1, 2, ... and back for reporting.
using Symbol = std::uint32_t;

class Alphabet {
public:
    static Alphabet finite(std::size_t n) {
        if (n == 0) throw InvalidArgument("alphabet must be nonempty");
        return Alphabet(n);
    }
    static Alphabet countable() { return Alphabet(std::nullopt); }

    [[nodiscard]] bool is_finite() const { return size_.has_value(); }
    [[nodiscard]] std::size_t size() const {
        if (!size_) throw InvalidArgument("countable alphabet has no finite size");
        return *size_;
    }
    [[nodiscard]] bool contains(Symbol s) const { return !size_ || s < *size_; }

    friend bool operator==(const Alphabet&, const Alphabet&) = default;

private:
    explicit Alphabet(std::optional<std::size_t> n) : size_(n) {}
    std::optional<std::size_t> size_;
};

// A left-infinite past: an explicit word x_{-L} .. x_{-1} (stored oldest first)
// completed below -L by repeating a fill word backwards in time, so that
// x_{-L-1-i} = fill[i mod |fill|].
class PastSpec {
public:
    PastSpec(std::vector<Symbol> explicit_word, std::vector<Symbol> fill)
        : explicit_(std::move(explicit_word)), fill_(std::move(fill)) {
        if (fill_.empty()) throw InvalidArgument("past fill word must be nonempty");
    }

    static PastSpec constant(Symbol s) { return PastSpec({}, {s}); }

    [[nodiscard]] Symbol at(std::size_t lag) const {
        const std::size_t e = explicit_.size();
        if (lag <= e) return explicit_[e - lag];
        return fill_[(lag - e - 1) % fill_.size()];
    }

    [[nodiscard]] std::span<const Symbol> explicit_word() const { return explicit_; }
    [[nodiscard]] std::span<const Symbol> fill() const { return fill_; }

    void validate(const Alphabet& alphabet) const {
        for (Symbol s : explicit_)
            if (!alphabet.contains(s)) throw InvalidArgument("past symbol " + std::to_string(s) + " outside alphabet");
        for (Symbol s : fill_)
            if (!alphabet.contains(s)) throw InvalidArgument("fill symbol " + std::to_string(s) + " outside alphabet");
    }

    friend bool operator==(const PastSpec&, const PastSpec&) = default;

private:
    std::vector<Symbol> explicit_;
    std::vector<Symbol> fill_;
};

// Relative-lag view of a history: `recent` (oldest first) sits right before
// the present, and lags beyond it read `past` shifted by `skip` lags.
class History {
public:
    History(std::span<const Symbol> recent, const PastSpec& past, std::size_t skip = 0)
        : recent_(recent), past_(&past), skip_(skip) {}

    [[nodiscard]] Symbol at(std::size_t lag) const {
        const std::size_t r = recent_.size();
        if (lag <= r) return recent_[r - lag];
        return past_->at(lag - r + skip_);
    }

    // Lags 1..explicit_depth() are stored explicitly; from explicit_depth()+1 on
    // the history is periodic: at(explicit_depth() + 1 + i) = fill()[(fill_phase() + i) % |fill|].
    [[nodiscard]] std::size_t explicit_depth() const {
        const std::size_t e = past_->explicit_word().size();
        return recent_.size() + (e > skip_ ? e - skip_ : 0);
    }
    [[nodiscard]] std::span<const Symbol> fill() const { return past_->fill(); }
    [[nodiscard]] std::size_t fill_phase() const {
        const std::size_t e = past_->explicit_word().size();
        const std::size_t first = std::max(e, skip_) + 1; // past lag of the first fill coordinate
        return (first - e - 1) % past_->fill().size();
    }

    // Smallest lag carrying symbol s, or nullopt if s never occurs.
    [[nodiscard]] std::optional<std::size_t> last_lag_of(Symbol s) const {
        const std::size_t depth = explicit_depth();
        for (std::size_t lag = 1; lag <= depth; ++lag)
            if (at(lag) == s) return lag;
        const auto f = fill();
        const std::size_t phase = fill_phase();
        for (std::size_t i = 0; i < f.size(); ++i)
            if (f[(phase + i) % f.size()] == s) return depth + 1 + i;
        return std::nullopt;
    }

    [[nodiscard]] std::span<const Symbol> recent() const { return recent_; }
    [[nodiscard]] const PastSpec& past() const { return *past_; }
    [[nodiscard]] std::size_t skip() const { return skip_; }

private:
    std::span<const Symbol> recent_;
    const PastSpec* past_;
    std::size_t skip_;
};

struct TruncationPolicy {
    double tau = 1e-12;
    std::size_t support_cap = 1'000'000;
};

// g(.|x) with support enumerated from symbol 0 upwards. For countable
// alphabets the mass beyond the enumerated prefix is kept as truncation_mass
// and `extension` evaluates further symbols on demand.
struct ConditionalDistribution {
    std::vector<double> probabilities;
    double truncation_mass = 0.0;
    std::function<double(Symbol)> extension;

    [[nodiscard]] double prob(Symbol a) const {
        if (a < probabilities.size()) return probabilities[a];
        return extension ? extension(a) : 0.0;
    }
    [[nodiscard]] std::size_t support_size() const { return probabilities.size(); }
    [[nodiscard]] double enumerated_mass() const {
        return compensated_total(probabilities);
    }

    // Appends symbols until the truncation mass drops to `target` or below.
    void extend_until(double target, std::size_t cap) {
        if (!extension) return;
        while (truncation_mass > target) {
            if (probabilities.size() >= cap) throw SupportCapExceeded("support cap " + std::to_string(cap) + " reached");
            const double p = extension(static_cast<Symbol>(probabilities.size()));
            probabilities.push_back(p);
            truncation_mass = std::max(0.0, truncation_mass - p);
        }
    }
};

struct TailCertificate {
    double sum_upper = 0.0;  // bounds the sum of the per-lag quantities from the given lag on
    double sup_term = 0.0;   // bounds each of those per-lag quantities
};

// Analytic regularity knowledge a family can attach to its kernel. Every
// upper bound must be valid for the supremum over all infinite pasts.
class RegularityProvider {
public:
    virtual ~RegularityProvider() = default;
    [[nodiscard]] virtual std::optional<double> osc_upper(std::size_t /*j*/) const { return std::nullopt; }
    [[nodiscard]] virtual std::optional<double> var_upper(std::size_t /*j*/) const { return std::nullopt; }
    [[nodiscard]] virtual std::optional<double> osc_lower(std::size_t /*j*/) const { return std::nullopt; }
    [[nodiscard]] virtual std::optional<double> var_lower(std::size_t /*j*/) const { return std::nullopt; }
    // Bounds for sums over j >= from; sum_upper = +inf when divergent.
    [[nodiscard]] virtual std::optional<TailCertificate> osc_tail(std::size_t /*from*/) const { return std::nullopt; }
    [[nodiscard]] virtual std::optional<TailCertificate> var_tail(std::size_t /*from*/) const { return std::nullopt; }
    [[nodiscard]] virtual bool osc_lower_sum_diverges() const { return false; }
    [[nodiscard]] virtual bool var_lower_sum_diverges() const { return false; }
    // Certified lower bound on inf_{a,x} g(a|x).
    [[nodiscard]] virtual std::optional<double> inf_probability() const { return std::nullopt; }
};

class Kernel {
public:
    virtual ~Kernel() = default;

    [[nodiscard]] virtual Alphabet alphabet() const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual double probability(Symbol a, const History& history) const = 0;

    // Families override this when the whole row shares expensive work.
    [[nodiscard]] virtual ConditionalDistribution distribution(const History& history,
                                                               const TruncationPolicy& policy) const {
        ConditionalDistribution d;
        const Alphabet A = alphabet();
        if (A.is_finite()) {
            d.probabilities.resize(A.size());
            for (std::size_t a = 0; a < A.size(); ++a) d.probabilities[a] = probability(static_cast<Symbol>(a), history);
            return d;
        }
        CompensatedSum mass;
        while (mass.value() < 1.0 - policy.tau) {
            if (d.probabilities.size() >= policy.support_cap)
                throw NormalizationError("enumerated mass " + std::to_string(mass.value()) + " below 1 - tau at support cap");
            const double p = probability(static_cast<Symbol>(d.probabilities.size()), history);
            d.probabilities.push_back(p);
            mass.add(p);
        }
        d.truncation_mass = std::max(0.0, 1.0 - mass.value());
        // The extension may outlive the caller's history, so it keeps its own copy.
        auto recent = std::make_shared<std::vector<Symbol>>();
        for (std::size_t lag = history.explicit_depth(); lag >= 1; --lag) recent->push_back(history.at(lag));
        std::vector<Symbol> fill;
        const auto f = history.fill();
        for (std::size_t i = 0; i < f.size(); ++i) fill.push_back(f[(history.fill_phase() + i) % f.size()]);
        auto past = std::make_shared<PastSpec>(std::vector<Symbol>{}, std::move(fill));
        d.extension = [this, recent, past](Symbol a) { return probability(a, History(*recent, *past)); };
        return d;
    }

    // Lag beyond which the kernel ignores the past entirely; nullopt when the
    // memory is unbounded.
    [[nodiscard]] virtual std::optional<std::size_t> effective_memory() const { return std::nullopt; }
    [[nodiscard]] virtual const RegularityProvider* regularity() const { return nullptr; }
    [[nodiscard]] virtual std::string label(Symbol s) const { return std::to_string(s); }
};

using KernelPtr = std::shared_ptr<const Kernel>;

inline constexpr double kProbabilityTolerance = 1e-12;

// g(.|history) with the normalization contract checked.
inline ConditionalDistribution conditional_distribution(const Kernel& kernel, const History& history,
                                                        const TruncationPolicy& policy = {}) {
    ConditionalDistribution d = kernel.distribution(history, policy);
    const double mass = d.enumerated_mass();
    if (mass > 1.0 + 1e-9) throw NormalizationError("enumerated mass " + std::to_string(mass) + " exceeds 1");
    if (kernel.alphabet().is_finite()) {
        if (std::abs(mass - 1.0) > 1e-9) throw NormalizationError("row sums to " + std::to_string(mass));
    } else if (mass < 1.0 - policy.tau - 1e-15) {
        throw NormalizationError("enumerated mass " + std::to_string(mass) + " below 1 - tau");
    }
    for (double p : d.probabilities)
        if (!(p >= -kProbabilityTolerance && p <= 1.0 + kProbabilityTolerance))
            throw NormalizationError("probability outside [0,1]");
    return d;
}

// Sequential inverse CDF at a given uniform u in [0,1).
inline Symbol sample_symbol_at(ConditionalDistribution& dist, double u, const TruncationPolicy& policy = {}) {
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t a = 0; a < dist.probabilities.size(); ++a) {
        const double p = dist.probabilities[a];
        if (p > 0.0) last_positive = a;
        cumulative += p;
        if (u < cumulative) return static_cast<Symbol>(a);
    }
    if (dist.extension && dist.truncation_mass > 0.0) {
        for (std::size_t a = dist.probabilities.size();; ++a) {
            if (a >= policy.support_cap) throw SupportCapExceeded("draw fell beyond support cap");
            const double p = dist.extension(static_cast<Symbol>(a));
            dist.probabilities.push_back(p);
            dist.truncation_mass = std::max(0.0, dist.truncation_mass - p);
            cumulative += p;
            if (u < cumulative) return static_cast<Symbol>(a);
            if (p == 0.0 && dist.truncation_mass == 0.0) break;
        }
    }
    // Only rounding slack in the last ulp of the CDF remains.
    return static_cast<Symbol>(last_positive);
}

inline Symbol sample_symbol(ConditionalDistribution& dist, RandomStream& rng, const TruncationPolicy& policy = {}) {
    return sample_symbol_at(dist, rng.uniform(), policy);
}

struct Path {
    std::vector<Symbol> symbols;
    PastSpec past;
    std::uint64_t seed = 0;
};

// Appends n symbols to `word`, each drawn given past ++ word.
inline void extend_word(const Kernel& kernel, const PastSpec& past, std::vector<Symbol>& word, std::size_t n,
                        RandomStream& rng, const TruncationPolicy& policy = {}) {
    word.reserve(word.size() + n);
    for (std::size_t i = 0; i < n; ++i) {
        ConditionalDistribution d = kernel.distribution(History(word, past), policy);
        word.push_back(sample_symbol(d, rng, policy));
    }
}

inline Path sample_path(const Kernel& kernel, const PastSpec& past, std::size_t n, RandomStream& rng,
                        const TruncationPolicy& policy = {}) {
    if (n == 0) throw InvalidArgument("path length must be at least 1");
    past.validate(kernel.alphabet());
    Path path{{}, past, rng.seed()};
    extend_word(kernel, past, path.symbols, n, rng, policy);
    return path;
}

inline double path_log_likelihood(const Kernel& kernel, const PastSpec& past, std::span<const Symbol> word) {
    CompensatedSum total;
    for (std::size_t j = 0; j < word.size(); ++j) {
        const double p = kernel.probability(word[j], History(word.first(j), past));
        if (!(p > 0.0)) throw ZeroLikelihood("kernel value 0 at position " + std::to_string(j));
        total.add(std::log(p));
    }
    return total.value();
}

} // namespace scum
