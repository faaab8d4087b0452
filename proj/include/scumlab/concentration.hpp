#pragma once

#include "csv.hpp"
#include "enumeration.hpp"
#include "errors.hpp"
#include "kernel.hpp"
#include "numeric.hpp"
#include "random.hpp"
#include "regularity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scum {

// A function of the word omega_0 .. omega_n (window = n + 1) with its
// per-coordinate oscillations delta_j(f).
struct Observable {
    enum class Provenance { declared, enumerated };

    std::string kind;
    std::size_t window = 0;
    std::function<double(std::span<const Symbol>)> evaluate;
    std::vector<double> delta;
    Provenance provenance = Provenance::declared;
    double range = 0.0; // bound on sup f - inf f

    double operator()(std::span<const Symbol> w) const {
        if (w.size() != window)
            throw WindowMismatch("observable window " + std::to_string(window) + ", word length " + std::to_string(w.size()));
        return evaluate(w);
    }
    [[nodiscard]] double delta_norm_sq() const {
        CompensatedSum s;
        for (double d : delta) s.add(d * d);
        return round_up(s.value());
    }
    [[nodiscard]] double delta_sup() const { return delta.empty() ? 0.0 : *std::max_element(delta.begin(), delta.end()); }
    [[nodiscard]] double delta_l1() const { return round_up(compensated_total(delta)); }
};

// f = sum_j w_j 1{omega_j = a}
inline Observable weighted_sum(std::vector<double> w, Symbol a) {
    Observable o;
    o.kind = "weighted-sum";
    o.window = w.size();
    for (double x : w) o.delta.push_back(std::abs(x));
    o.range = compensated_total(o.delta);
    o.evaluate = [w = std::move(w), a](std::span<const Symbol> s) {
        CompensatedSum t;
        for (std::size_t j = 0; j < s.size(); ++j)
            if (s[j] == a) t.add(w[j]);
        return t.value();
    };
    return o;
}

namespace detail {

inline std::size_t block_index(std::span<const Symbol> w, std::size_t alphabet) {
    std::size_t c = 0;
    for (Symbol s : w) c = c * alphabet + s;
    return c;
}

// Exact delta_j of sum_{i < terms} phi(w_i .. w_{i+width-1}) scaled by `scale`:
// only the windows covering j change, so it suffices to enumerate the
// coordinates within width - 1 of j.
inline std::vector<double> local_delta(const std::vector<double>& phi, std::size_t width, std::size_t terms,
                                       std::size_t alphabet, double scale) {
    const std::size_t length = terms + width - 1;
    std::vector<double> delta(length, 0.0);
    for (std::size_t j = 0; j < length; ++j) {
        const std::size_t lo = j >= width - 1 ? j - (width - 1) : 0;
        const std::size_t hi = std::min(length - 1, j + width - 1);
        const std::size_t span_len = hi - lo + 1;
        std::size_t configs = 1;
        for (std::size_t i = 0; i < span_len; ++i) {
            if (configs > (std::size_t{1} << 24) / alphabet) throw Intractable("local enumeration for delta is too large");
            configs *= alphabet;
        }
        std::vector<Symbol> w(span_len);
        double best = 0.0;
        for (std::size_t c = 0; c < configs; ++c) {
            std::size_t rest = c;
            for (std::size_t i = 0; i < span_len; ++i) {
                w[span_len - 1 - i] = static_cast<Symbol>(rest % alphabet);
                rest /= alphabet;
            }
            auto local_sum = [&] {
                double s = 0.0;
                const std::size_t first = j >= width - 1 ? j - (width - 1) : 0;
                const std::size_t last = std::min(j, terms - 1);
                for (std::size_t i = first; i <= last; ++i)
                    s += phi[block_index(std::span<const Symbol>(w).subspan(i - lo, width), alphabet)];
                return s;
            };
            const Symbol original = w[j - lo];
            const double base = local_sum();
            for (Symbol b = original + 1; b < alphabet; ++b) {
                w[j - lo] = b;
                best = std::max(best, std::abs(local_sum() - base));
            }
            w[j - lo] = original;
        }
        delta[j] = best * scale;
    }
    return delta;
}

} // namespace detail

// S_n phi = sum_{i<n} phi(omega_i .. omega_{i+w-1}) times `scale`, on a word of
// n + w - 1 symbols. phi is tabulated over all |A|^w blocks (first symbol most
// significant).
inline Observable birkhoff(std::vector<double> phi, std::size_t width, std::size_t n, std::size_t alphabet,
                           double scale = 1.0) {
    if (width == 0 || n == 0) throw InvalidArgument("Birkhoff sums need a positive window and length");
    std::size_t blocks = 1;
    for (std::size_t i = 0; i < width; ++i) blocks *= alphabet;
    if (phi.size() != blocks) throw WindowMismatch("phi must be tabulated on all blocks of its window");
    Observable o;
    o.kind = "birkhoff";
    o.window = n + width - 1;
    o.delta = detail::local_delta(phi, width, n, alphabet, std::abs(scale));
    o.provenance = Observable::Provenance::enumerated;
    o.range = std::abs(scale) * static_cast<double>(n) *
              (*std::max_element(phi.begin(), phi.end()) - *std::min_element(phi.begin(), phi.end()));
    o.range = std::min(o.range, compensated_total(o.delta));
    o.evaluate = [phi = std::move(phi), width, n, alphabet, scale](std::span<const Symbol> s) {
        CompensatedSum t;
        for (std::size_t i = 0; i < n; ++i) t.add(phi[detail::block_index(s.subspan(i, width), alphabet)]);
        return scale * t.value();
    };
    return o;
}

// delta_j(phi) of a local function on its own window.
inline std::vector<double> local_function_delta(const std::vector<double>& phi, std::size_t width, std::size_t alphabet) {
    return detail::local_delta(phi, width, 1, alphabet, 1.0);
}

// rho_hat_{n,k}(sigma) = (1/(n-k+2)) #{j <= n-k+1 : omega_j^{j+k-1} = sigma}
inline Observable block_frequency(std::size_t n, std::vector<Symbol> sigma, std::size_t alphabet) {
    const std::size_t k = sigma.size();
    if (k == 0 || k > n + 1) throw WindowMismatch("block length must lie in 1..n+1");
    std::size_t blocks = 1;
    for (std::size_t i = 0; i < k; ++i) blocks *= alphabet;
    std::vector<double> phi(blocks, 0.0);
    phi[detail::block_index(sigma, alphabet)] = 1.0;
    Observable o = birkhoff(std::move(phi), k, n - k + 2, alphabet, 1.0 / static_cast<double>(n - k + 2));
    o.kind = "block-frequency";
    return o;
}

// ||rho_hat_{n,k} - rho||_inf against a reference law on k-blocks. One changed
// symbol moves at most k windows, so each delta_j is declared as k/(n-k+2).
inline Observable sup_deviation(std::size_t n, std::size_t k, std::vector<double> rho, std::size_t alphabet) {
    if (k == 0 || k > n + 1) throw WindowMismatch("block length must lie in 1..n+1");
    std::size_t blocks = 1;
    for (std::size_t i = 0; i < k; ++i) blocks *= alphabet;
    if (rho.size() != blocks) throw WindowMismatch("reference law must cover all k-blocks");
    Observable o;
    o.kind = "sup-deviation";
    o.window = n + 1;
    const double norm = static_cast<double>(n - k + 2);
    o.delta.assign(n + 1, static_cast<double>(k) / norm);
    o.range = 1.0;
    o.evaluate = [rho = std::move(rho), k, alphabet, norm](std::span<const Symbol> s) {
        std::vector<double> counts(rho.size(), 0.0);
        for (std::size_t j = 0; j + k <= s.size(); ++j) counts[detail::block_index(s.subspan(j, k), alphabet)] += 1.0;
        double d = 0.0;
        for (std::size_t b = 0; b < rho.size(); ++b) d = std::max(d, std::abs(counts[b] / norm - rho[b]));
        return d;
    };
    return o;
}

// Brute-force delta_j over all |A|^{n+1} words.
inline std::vector<double> enumerate_delta(const Observable& f, std::size_t alphabet, std::size_t budget = 1'000'000) {
    const std::size_t words = power_count(alphabet, f.window, budget);
    if (words > budget) throw Intractable("observable window too large to enumerate");
    std::vector<double> values(words);
    std::vector<Symbol> w(f.window);
    for (std::size_t c = 0; c < words; ++c) {
        std::size_t rest = c;
        for (std::size_t i = 0; i < f.window; ++i) {
            w[f.window - 1 - i] = static_cast<Symbol>(rest % alphabet);
            rest /= alphabet;
        }
        values[c] = f(w);
    }
    std::vector<double> delta(f.window, 0.0);
    std::size_t weight = 1;
    for (std::size_t j = f.window; j-- > 0;) {
        for (std::size_t c = 0; c < words; ++c) {
            const std::size_t digit = (c / weight) % alphabet;
            for (std::size_t b = digit + 1; b < alphabet; ++b)
                delta[j] = std::max(delta[j], std::abs(values[c] - values[c + (b - digit) * weight]));
        }
        weight *= alphabet;
    }
    return delta;
}

// Observable given by its values on every word (first symbol most significant).
inline Observable user_table(std::vector<double> values, std::size_t window, std::size_t alphabet) {
    if (power_count(alphabet, window, values.size()) != values.size())
        throw WindowMismatch("table must list a value for every word of the window");
    Observable o;
    o.kind = "user-table";
    o.window = window;
    o.range = *std::max_element(values.begin(), values.end()) - *std::min_element(values.begin(), values.end());
    o.evaluate = [values = std::move(values), alphabet](std::span<const Symbol> s) {
        return values[detail::block_index(s, alphabet)];
    };
    o.delta = enumerate_delta(o, alphabet, std::numeric_limits<std::size_t>::max() - 1);
    o.provenance = Observable::Provenance::enumerated;
    return o;
}

struct ObservableParams {
    std::size_t n = 0;
    std::size_t alphabet = 2;
    std::vector<double> weights; // weighted-sum
    Symbol symbol = 1;
    std::vector<Symbol> sigma;   // block-frequency
    std::size_t k = 1;           // sup-deviation
    std::vector<double> rho;
    std::vector<double> phi;     // birkhoff
    std::size_t width = 1;
    double scale = 1.0;
    std::vector<double> table;   // user-table, window n + 1
};

inline Observable make_observable(const std::string& kind, const ObservableParams& p) {
    if (kind == "weighted-sum") return weighted_sum(p.weights, p.symbol);
    if (kind == "block-frequency") return block_frequency(p.n, p.sigma, p.alphabet);
    if (kind == "sup-deviation") return sup_deviation(p.n, p.k, p.rho, p.alphabet);
    if (kind == "birkhoff") return birkhoff(p.phi, p.width, p.n, p.alphabet, p.scale);
    if (kind == "user-table") return user_table(p.table, p.n + 1, p.alphabet);
    throw InvalidArgument("unknown observable kind '" + kind + "'");
}

// ---------------------------------------------------------------- Monte Carlo checks

struct BoundCheckRow {
    std::string parameter;
    double estimate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double bound = 0.0;
    double margin = 0.0; // bound minus the CI lower end
    bool pass = true;
};

struct BoundCheck {
    std::string name;
    std::vector<BoundCheckRow> rows;

    [[nodiscard]] bool passed() const {
        return std::all_of(rows.begin(), rows.end(), [](const BoundCheckRow& r) { return r.pass; });
    }
    [[nodiscard]] CsvTable table() const {
        CsvTable t({"parameter", "estimate", "ci_lo", "ci_hi", "bound", "margin", "verdict"});
        for (const auto& r : rows)
            t.add_row({r.parameter, format_double(r.estimate), format_double(r.ci_lo), format_double(r.ci_hi),
                       format_double(r.bound), format_double(r.margin), r.pass ? "pass" : "fail"});
        return t;
    }
};

struct MonteCarloOptions {
    std::size_t replicas = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string tag = "mc";
    double confidence = 0.99;
    std::size_t burn_in = 0;
    TruncationPolicy policy;
};

// The last `length` symbols of a path of burn_in + length symbols, replica i.
inline std::vector<Symbol> sample_window(const Kernel& kernel, const PastSpec& past, std::size_t length,
                                         std::size_t burn_in, RandomStream& rng, const TruncationPolicy& policy = {}) {
    std::vector<Symbol> w;
    extend_word(kernel, past, w, burn_in + length, rng, policy);
    w.erase(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(burn_in));
    return w;
}

// f on N independent windows, in replica order.
inline std::vector<double> sample_observable(const Kernel& kernel, const PastSpec& past, const Observable& f,
                                             const MonteCarloOptions& opt, const std::string& batch) {
    past.validate(kernel.alphabet());
    std::vector<double> values(opt.replicas);
    const std::string tag = opt.tag + "/" + batch;
    parallel_for(opt.replicas, opt.workers, [&](std::size_t i) {
        RandomStream rng = replica_stream(opt.seed, tag, i);
        values[i] = f(sample_window(kernel, past, f.window, opt.burn_in, rng, opt.policy));
    });
    return values;
}

struct MeanEstimate {
    double mean = 0.0;
    double half_width = 0.0;
};

inline MeanEstimate independent_mean(const Kernel& kernel, const PastSpec& past, const Observable& f,
                                     const MonteCarloOptions& opt) {
    const auto v = sample_observable(kernel, past, f, opt, "mean");
    const auto m = sample_moments(v);
    return {m.mean, normal_quantile_two_sided(opt.confidence) * m.standard_error()};
}

inline std::string parameter_label(const std::string& name, double v) { return name + "=" + format_double(v); }

// E exp(theta (f - E f)) against exp(theta^2 C^{-2} |delta|^2 / 8). E f is
// replaced by the mean of an independent batch; its uncertainty enters as the
// factor exp(|theta| hw).
inline BoundCheck mgf_check(const Kernel& kernel, const PastSpec& past, const Observable& f,
                            const std::vector<double>& thetas, double constant, const MonteCarloOptions& opt) {
    if (!(constant > 0.0)) throw NotApplicable("mgf check needs a positive concentration constant");
    for (double t : thetas)
        if (std::abs(t) * f.range > 20.0) throw InvalidArgument("|theta| * range(f) exceeds 20 at theta = " + format_double(t));
    const MeanEstimate mean = independent_mean(kernel, past, f, opt);
    const auto values = sample_observable(kernel, past, f, opt, "main");
    const double z = normal_quantile_two_sided(opt.confidence);
    BoundCheck out;
    out.name = "mgf";
    std::vector<double> e(values.size());
    for (double theta : thetas) {
        for (std::size_t i = 0; i < values.size(); ++i) e[i] = std::exp(theta * (values[i] - mean.mean));
        const auto m = sample_moments(e);
        const double hw = z * m.standard_error();
        if (hw > 0.5 * m.mean) throw VarianceBlowup("mgf half-width " + format_double(hw) + " at theta = " + format_double(theta));
        BoundCheckRow r;
        r.parameter = parameter_label("theta", theta);
        r.estimate = m.mean;
        const double bias = std::exp(std::abs(theta) * mean.half_width);
        r.ci_lo = (m.mean - hw) / bias;
        r.ci_hi = (m.mean + hw) * bias;
        r.bound = mgf_bound(theta, constant, f.delta_norm_sq());
        r.margin = r.bound - r.ci_lo;
        r.pass = r.ci_lo <= r.bound;
        out.rows.push_back(r);
    }
    return out;
}

// P(|f - E f| > u) against 2 exp(-2 u^2 / (C^{-2} |delta|^2)).
inline BoundCheck deviation_check(const Kernel& kernel, const PastSpec& past, const Observable& f,
                                  const std::vector<double>& us, double constant, const MonteCarloOptions& opt,
                                  std::optional<double> delta_norm_sq = std::nullopt) {
    if (!(constant > 0.0)) throw NotApplicable("deviation check needs a positive concentration constant");
    const MeanEstimate mean = independent_mean(kernel, past, f, opt);
    const auto values = sample_observable(kernel, past, f, opt, "main");
    const double z = normal_quantile_two_sided(opt.confidence);
    const double norm_sq = delta_norm_sq.value_or(f.delta_norm_sq());
    BoundCheck out;
    out.name = "deviation";
    for (double u : us) {
        std::size_t est = 0, low = 0, high = 0;
        for (double v : values) {
            const double d = std::abs(v - mean.mean);
            est += d > u;
            low += d > u + mean.half_width;
            high += d > u - mean.half_width;
        }
        BoundCheckRow r;
        r.parameter = parameter_label("u", u);
        r.estimate = static_cast<double>(est) / static_cast<double>(values.size());
        r.ci_lo = wilson_interval(low, values.size(), z).lo;
        r.ci_hi = wilson_interval(high, values.size(), z).hi;
        r.bound = deviation_bound(u, constant, norm_sq);
        r.margin = r.bound - r.ci_lo;
        r.pass = r.ci_lo <= r.bound;
        out.rows.push_back(r);
    }
    return out;
}

// P(|S_n phi / n - E phi| > u) against 2 exp(-2 n u^2 C^2 / |delta(phi)|_1^2).
inline BoundCheck birkhoff_check(const Kernel& kernel, const PastSpec& past, const std::vector<double>& phi,
                                 std::size_t width, std::size_t n, const std::vector<double>& us, double constant,
                                 const MonteCarloOptions& opt) {
    const std::size_t A = kernel.alphabet().size();
    const Observable f = birkhoff(phi, width, n, A, 1.0 / static_cast<double>(n));
    const auto d = local_function_delta(phi, width, A);
    const double l1 = compensated_total(d);
    auto out = deviation_check(kernel, past, f, us, constant, opt, l1 * l1 / static_cast<double>(n));
    out.name = "birkhoff";
    return out;
}

// Smallest m such that the coupling bound sum over lags beyond m is below tol.
inline std::size_t default_burn_in(const RegularityProfile& prof, double tol = 1e-3, std::size_t horizon = 10000) {
    std::optional<RecursionBound> best;
    for (int route = 0; route < 2; ++route) {
        try {
            auto r = route == 0 ? coupling_error_bound_osc(prof, horizon) : renewal_disagreement(prof, horizon);
            if (!r.closed_form) continue;
            if (!best || *r.closed_form < *best->closed_form) best = std::move(r);
        } catch (const Error&) {
        }
    }
    if (!best) throw NotApplicable("no summable coupling bound for " + prof.kernel_name);
    for (std::size_t m = 0; m < horizon; ++m) {
        const double done = m == 0 ? 0.0 : best->partial_sums[m - 1];
        if (*best->closed_form - done < tol) return m;
    }
    return horizon;
}

// ---------------------------------------------------------------- empirical block laws

struct EmpiricalBlockLaw {
    std::size_t k = 0;
    std::size_t n = 0; // the path is omega_0 .. omega_n
    std::size_t alphabet = 0;
    std::vector<std::size_t> counts;

    [[nodiscard]] double normalizer() const { return static_cast<double>(n - k + 2); }
    [[nodiscard]] double frequency(std::span<const Symbol> sigma) const {
        return static_cast<double>(counts[detail::block_index(sigma, alphabet)]) / normalizer();
    }
    [[nodiscard]] double frequency(std::size_t index) const { return static_cast<double>(counts[index]) / normalizer(); }
    [[nodiscard]] double sup_distance(std::span<const double> rho) const {
        double d = 0.0;
        for (std::size_t b = 0; b < counts.size(); ++b) d = std::max(d, std::abs(frequency(b) - rho[b]));
        return d;
    }
};

inline EmpiricalBlockLaw empirical_blocks(std::span<const Symbol> path, std::size_t k, std::size_t alphabet) {
    if (k == 0 || k > path.size()) throw InvalidArgument("block length must lie in 1..n+1");
    EmpiricalBlockLaw e;
    e.k = k;
    e.n = path.size() - 1;
    e.alphabet = alphabet;
    std::size_t blocks = 1;
    for (std::size_t i = 0; i < k; ++i) blocks *= alphabet;
    e.counts.assign(blocks, 0);
    for (std::size_t j = 0; j + k <= path.size(); ++j) ++e.counts[detail::block_index(path.subspan(j, k), alphabet)];
    return e;
}

// Stationary k-block laws, first symbol most significant.
inline std::vector<double> iid_block_law(std::span<const double> p, std::size_t k) {
    std::vector<double> rho{1.0};
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> next;
        for (double r : rho)
            for (double q : p) next.push_back(r * q);
        rho = std::move(next);
    }
    return rho;
}

inline std::vector<double> markov_block_law(const std::vector<std::vector<double>>& Q, std::size_t k) {
    const auto pi = stationary_distribution(Q);
    const std::size_t n = Q.size();
    std::vector<double> rho(pi);
    std::size_t blocks = n;
    for (std::size_t i = 1; i < k; ++i) {
        std::vector<double> next(blocks * n);
        for (std::size_t b = 0; b < blocks; ++b)
            for (std::size_t s = 0; s < n; ++s) next[b * n + s] = rho[b] * Q[b % n][s];
        rho = std::move(next);
        blocks *= n;
    }
    return rho;
}

struct BlockReference {
    std::vector<double> rho;
    double error_budget = 0.0; // 0 for closed forms
};

// Long-run estimate with a batch-means error budget.
inline BlockReference estimated_block_law(const Kernel& kernel, const PastSpec& past, std::size_t k, std::size_t burn_in,
                                          std::size_t length, std::uint64_t seed, std::size_t batches = 20,
                                          double confidence = 0.99) {
    const std::size_t A = kernel.alphabet().size();
    RandomStream rng = replica_stream(seed, "reference", k);
    const auto w = sample_window(kernel, past, length, burn_in, rng);
    const auto all = empirical_blocks(w, k, A);
    BlockReference ref;
    for (std::size_t b = 0; b < all.counts.size(); ++b) ref.rho.push_back(all.frequency(b));
    const std::size_t per = length / batches;
    const double z = normal_quantile_two_sided(confidence);
    for (std::size_t b = 0; b < all.counts.size(); ++b) {
        std::vector<double> f;
        for (std::size_t i = 0; i < batches; ++i)
            f.push_back(empirical_blocks(std::span<const Symbol>(w).subspan(i * per, per), k, A).frequency(b));
        ref.error_budget = std::max(ref.error_budget, z * sample_moments(f).standard_error());
    }
    return ref;
}

// mu(||rho_hat_{n,k} - rho||_inf > (u + sqrt(2k)) / sqrt((n-k+2) Gamma)) against exp(-Gamma u^2).
inline BoundCheck dkw_check(const Kernel& kernel, const PastSpec& past, const std::vector<std::size_t>& ks, std::size_t n,
                            const std::vector<double>& us, double gamma,
                            const std::function<BlockReference(std::size_t)>& reference, const MonteCarloOptions& opt) {
    if (!(gamma > 0.0)) throw NotApplicable("the DKW bound needs Gamma > 0");
    const std::size_t A = kernel.alphabet().size();
    std::vector<BlockReference> refs;
    for (std::size_t k : ks) {
        if (k == 0 || k > n + 1) throw InvalidArgument("block length must lie in 1..n+1");
        refs.push_back(reference(k));
    }
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (double u : us) {
            const double allowed = 0.1 * u / std::sqrt(static_cast<double>(n - ks[i] + 2) * gamma);
            if (refs[i].error_budget > allowed)
                throw ReferenceUncertain("reference error " + format_double(refs[i].error_budget) + " exceeds " + format_double(allowed));
        }
    std::vector<double> dist(opt.replicas * ks.size());
    parallel_for(opt.replicas, opt.workers, [&](std::size_t r) {
        RandomStream rng = replica_stream(opt.seed, opt.tag + "/dkw", r);
        const auto w = sample_window(kernel, past, n + 1, opt.burn_in, rng, opt.policy);
        for (std::size_t i = 0; i < ks.size(); ++i) dist[r * ks.size() + i] = empirical_blocks(w, ks[i], A).sup_distance(refs[i].rho);
    });
    const double z = normal_quantile_two_sided(opt.confidence);
    BoundCheck out;
    out.name = "dkw";
    for (std::size_t i = 0; i < ks.size(); ++i)
        for (double u : us) {
            const double threshold = (u + std::sqrt(2.0 * static_cast<double>(ks[i]))) /
                                     std::sqrt(static_cast<double>(n - ks[i] + 2) * gamma);
            const double budget = refs[i].error_budget;
            std::size_t est = 0, low = 0, high = 0;
            for (std::size_t r = 0; r < opt.replicas; ++r) {
                const double d = dist[r * ks.size() + i];
                est += d > threshold;
                low += d > threshold + budget;
                high += d > threshold - budget;
            }
            BoundCheckRow row;
            row.parameter = "k=" + std::to_string(ks[i]) + ";u=" + format_double(u);
            row.estimate = static_cast<double>(est) / static_cast<double>(opt.replicas);
            row.ci_lo = wilson_interval(low, opt.replicas, z).lo;
            row.ci_hi = wilson_interval(high, opt.replicas, z).hi;
            row.bound = std::exp(-gamma * u * u);
            row.margin = row.bound - row.ci_lo;
            row.pass = row.ci_lo <= row.bound;
            out.rows.push_back(row);
        }
    return out;
}

} // namespace scum
