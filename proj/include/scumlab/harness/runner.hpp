#pragma once

#include "../concentration.hpp"
#include "../coupling.hpp"
#include "../csv.hpp"
#include "../distance.hpp"
#include "../errors.hpp"
#include "../regularity.hpp"
#include "../renewal.hpp"
#include "config.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace scum::harness {

inline constexpr const char* kVersion = "1.0.0";

struct ExperimentReport {
    std::string kind;
    json config;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::vector<std::pair<std::string, CsvTable>> tables; // the first is the main table
    std::vector<std::pair<std::string, json>> documents;
    std::vector<std::string> notes;
    std::vector<std::string> refutations;
    std::uint64_t replicas = 0;
    double seconds = 0.0;
    std::string version = kVersion;

    [[nodiscard]] bool refuted() const { return !refutations.empty(); }
    [[nodiscard]] int exit_code() const { return refuted() ? 2 : 0; }
    [[nodiscard]] const CsvTable& main_table() const { return tables.front().second; }

    [[nodiscard]] std::string summary() const {
        std::ostringstream out;
        out << "scumlab " << version << "\n";
        out << "experiment: " << kind << "\n";
        out << "seed: " << seed << "\nworkers: " << workers << "\n";
        out << "verdict: " << (refuted() ? "REFUTED" : "pass") << "\n";
        for (const auto& r : refutations) out << "  refutation: " << r << "\n";
        out << "replicas: " << replicas << "\n";
        out << "wall-clock seconds: " << seconds << "\n";
        for (const auto& n : notes) out << n << "\n";
        for (const auto& [name, t] : tables) out << "table " << name << ".csv: " << t.rows().size() << " rows\n";
        out << "config:\n" << config.dump(2) << "\n";
        return out.str();
    }
};

using Diagnostics = std::vector<std::string>;

namespace detail {

inline const std::map<std::string, std::set<std::string>>& allowed_params() {
    static const std::set<std::string> profile{"max_lag", "context_len"};
    static const std::set<std::string> mc{"replicas", "burn_in", "confidence", "constant"};
    auto join = [](std::initializer_list<std::set<std::string>> parts) {
        std::set<std::string> s;
        for (const auto& p : parts) s.insert(p.begin(), p.end());
        return s;
    };
    static const std::map<std::string, std::set<std::string>> m{
        {"regularity", profile},
        {"couple", join({profile, {"runs", "length", "a", "b", "confidence"}})},
        {"gcb-mgf", join({profile, mc, {"observable", "thetas"}})},
        {"gcb-deviation", join({profile, mc, {"observable", "us"}})},
        {"birkhoff", join({profile, mc, {"phi", "width", "n", "us"}})},
        {"dkw", join({profile, {"replicas", "burn_in", "confidence", "ks", "n", "us", "reference", "reference_length"}})},
        {"dbar", {"ks", "paths", "length", "burn_in", "confidence", "approximation", "depth", "constant", "profile_lag"}},
        {"renewal", {"n_max", "prefix_len"}},
    };
    return m;
}

inline void check_param_names(const ExperimentConfig& c) {
    const Node p = c.params();
    if (!p.raw().is_object()) Node::fail("params", "expected an object");
    const auto& allowed = allowed_params().at(c.kind);
    for (const auto& [k, v] : p.raw().items())
        if (!allowed.count(k)) Node::fail("params." + k, "unknown parameter for experiment '" + c.kind + "'");
}

struct KernelSpec {
    KernelPtr kernel;
    std::string family;
    json node;
};

inline KernelSpec kernel_spec(const Node& n) {
    KernelSpec k;
    k.kernel = parse_kernel(n);
    k.family = n.get<std::string>("family");
    k.node = n.raw();
    return k;
}

inline KernelSpec main_kernel(const ExperimentConfig& c) { return kernel_spec(c.root().child("kernel")); }

inline ProfileOptions profile_options(const Node& p, std::size_t default_lag = 16) {
    ProfileOptions o;
    o.max_lag = p.count("max_lag", default_lag, 1, 100000);
    o.context_len = p.count("context_len", 12, 0, 24);
    return o;
}

inline double confidence(const Node& p) { return p.number("confidence", 0.99, 0.5, 1.0 - 1e-12); }

inline std::vector<double> number_list(const Node& p, const std::string& key) {
    const auto v = p.get<std::vector<double>>(key);
    if (v.empty()) Node::fail(p.path() + "." + key, "must be nonempty");
    return v;
}

inline std::vector<std::size_t> count_list(const Node& p, const std::string& key) {
    const Node c = p.child(key);
    if (!c.raw().is_array() || c.raw().empty()) Node::fail(c.path(), "expected a nonempty array of integers");
    std::vector<std::size_t> out;
    for (const auto& x : c.raw()) {
        if (!x.is_number_integer() || x.get<long long>() <= 0) Node::fail(c.path(), "entries must be positive integers");
        out.push_back(x.get<std::size_t>());
    }
    return out;
}

// Closed-form stationary block law where the family has one.
inline std::optional<std::vector<double>> exact_block_law(const KernelSpec& k, std::size_t len) {
    if (k.family == "iid") return iid_block_law(k.node.at("probs").get<std::vector<double>>(), len);
    if (k.family == "markov") return markov_block_law(k.node.at("matrix").get<std::vector<std::vector<double>>>(), len);
    return std::nullopt;
}

inline std::size_t finite_alphabet(const Kernel& k, const std::string& what) {
    if (!k.alphabet().is_finite()) throw NotApplicable(what + " needs a finite alphabet");
    return k.alphabet().size();
}

inline Observable parse_observable(const Node& n, const KernelSpec& k) {
    const auto kind = n.get<std::string>("kind");
    ObservableParams p;
    if (kind == "weighted-sum") {
        if (n.has("weights")) {
            p.weights = n.get<std::vector<double>>("weights");
        } else {
            const std::size_t len = n.count("length", std::nullopt, 1, 1'000'000);
            p.weights.assign(len, n.number("weight"));
        }
        p.symbol = n.get<Symbol>("symbol", 1);
    } else {
        p.alphabet = finite_alphabet(*k.kernel, "observable '" + kind + "'");
        p.n = n.count("n", std::nullopt, 1, 10'000'000);
        if (kind == "block-frequency") {
            p.sigma = n.get<std::vector<Symbol>>("sigma");
        } else if (kind == "sup-deviation") {
            p.k = n.count("k", 1, 1, 16);
            if (n.has("rho")) {
                p.rho = n.get<std::vector<double>>("rho");
            } else if (auto r = exact_block_law(k, p.k)) {
                p.rho = *r;
            } else {
                Node::fail(n.path() + ".rho", "required for a kernel without a closed-form block law");
            }
        } else if (kind == "birkhoff") {
            p.phi = n.get<std::vector<double>>("phi");
            p.width = n.count("width", 1, 1, 24);
            p.scale = n.number("scale", 1.0);
        } else if (kind == "user-table") {
            p.table = n.get<std::vector<double>>("table");
        }
    }
    try {
        return make_observable(kind, p);
    } catch (const InvalidArgument& e) {
        Node::fail(n.path(), e.what());
    }
}

inline json profile_json(const RegularityProfile& prof) {
    auto bounds = [](const std::vector<LagBound>& v) {
        json a = json::array();
        for (const auto& b : v)
            a.push_back({{"lag", b.lag}, {"lower", b.lower}, {"upper", b.upper}, {"method", to_string(b.method)}});
        return a;
    };
    auto tail = [](const std::optional<TailCertificate>& t) -> json {
        if (!t) return nullptr;
        return {{"sum_upper", t->sum_upper}, {"sup_term", t->sup_term}};
    };
    json j{{"kernel", prof.kernel_name},
           {"osc", bounds(prof.osc)},
           {"var", bounds(prof.var)},
           {"osc_tail", tail(prof.osc_tail)},
           {"var_tail", tail(prof.var_tail)},
           {"osc_lower_sum_diverges", prof.osc_lower_diverges},
           {"var_lower_sum_diverges", prof.var_lower_diverges}};
    j["inf_probability"] = prof.inf_g ? json(*prof.inf_g) : json(nullptr);
    return j;
}

inline std::string interval_text(const Interval& i) { return "[" + format_double(i.lo) + ", " + format_double(i.hi) + "]"; }

// Concentration constant: the configured one or the best certified one.
inline double concentration_constant(const Node& p, const RegularityProfile& prof) {
    if (p.has("constant")) return p.number("constant", std::nullopt, 0.0, 1.0);
    return gcb_constants(prof).best();
}

// Without a profile "auto" burn-in is parsed but left at 0.
inline MonteCarloOptions mc_options(const ExperimentConfig& c, const Node& p, const RegularityProfile* prof,
                                    bool auto_burn_in) {
    MonteCarloOptions o;
    o.replicas = p.count("replicas", 100000, 2, 100'000'000);
    o.seed = c.seed;
    o.workers = c.workers;
    o.tag = c.kind;
    o.confidence = confidence(p);
    if (p.has("burn_in") && p.raw().at("burn_in").is_string()) {
        if (p.get<std::string>("burn_in") != "auto") Node::fail("params.burn_in", "expected a count or \"auto\"");
        if (prof) o.burn_in = default_burn_in(*prof);
    } else if (p.has("burn_in")) {
        o.burn_in = p.count("burn_in", 0, 0, 10'000'000);
    } else {
        o.burn_in = auto_burn_in && prof ? default_burn_in(*prof) : 0;
    }
    return o;
}

inline void add_check(ExperimentReport& r, const BoundCheck& check) {
    r.tables.emplace_back(r.kind, check.table());
    for (const auto& row : check.rows)
        if (!row.pass)
            r.refutations.push_back(check.name + " " + row.parameter + ": CI lower end " + format_double(row.ci_lo) +
                                    " above bound " + format_double(row.bound));
}

// ---------------------------------------------------------------- per-kind runners

inline void run_regularity(const ExperimentConfig& c, ExperimentReport& r) {
    const auto k = main_kernel(c);
    const Node p = c.params();
    const auto prof = compute_profile(*k.kernel, profile_options(p));
    CsvTable t({"quantity", "lag", "lower", "upper", "method"});
    for (const auto& b : prof.osc)
        t.add_row({"osc", std::to_string(b.lag), format_double(b.lower), format_double(b.upper), to_string(b.method)});
    for (const auto& b : prof.var)
        t.add_row({"var", std::to_string(b.lag), format_double(b.lower), format_double(b.upper), to_string(b.method)});
    const std::string beyond = std::to_string(prof.osc.size() + 1);
    auto tail_row = [&](const std::string& q, const std::optional<TailCertificate>& tc, const std::string& lag) {
        t.add_row({q, lag, "0", tc ? format_double(tc->sum_upper) : "NA", tc ? "tail-certificate" : "uncertified"});
    };
    tail_row("osc_tail_sum", prof.osc_tail, beyond);
    tail_row("var_tail_sum", prof.var_tail, std::to_string(prof.var.size()));
    r.tables.emplace_back("regularity", std::move(t));

    CsvTable ct({"constant", "lo", "hi", "status"});
    std::optional<ConcentrationConstants> cc;
    try {
        cc = gcb_constants(prof);
    } catch (const NotApplicable& e) {
        r.notes.push_back(std::string("concentration: ") + e.what());
    }
    std::optional<Interval> delta;
    try {
        delta = delta_constant(prof);
    } catch (const UncertifiedTail& e) {
        r.notes.push_back(std::string("Delta: ") + e.what());
    }
    std::optional<GammaValue> gamma;
    try {
        gamma = gamma_constant(prof);
    } catch (const Error& e) {
        r.notes.push_back(std::string("Gamma: ") + e.what());
    }
    if (delta) {
        ct.add_row({"Delta", format_double(delta->lo), format_double(delta->hi), delta->lo > 0.0 ? "positive" : "not-certified"});
        r.notes.push_back("Delta in " + interval_text(*delta));
    } else {
        ct.add_row({"Delta", "NA", "NA", "uncertified"});
    }
    if (gamma) {
        const std::string status = gamma->flagged_zero ? "flagged-zero" : gamma->value.lo > 0.0 ? "positive" : "not-certified";
        ct.add_row({"Gamma", format_double(gamma->value.lo), format_double(gamma->value.hi), status});
        r.notes.push_back("Gamma in " + interval_text(gamma->value) + (gamma->flagged_zero ? " (flagged 0)" : ""));
    } else {
        ct.add_row({"Gamma", "NA", "NA", "uncertified"});
    }
    if (cc && cc->delta_applicable)
        ct.add_row({"C_Delta", format_double(cc->c_delta.lo), format_double(cc->c_delta.hi), "applicable"});
    if (cc && cc->gamma_applicable)
        ct.add_row({"C_Gamma", format_double(cc->c_gamma.lo), format_double(cc->c_gamma.hi), "applicable"});
    if (cc) r.notes.push_back("best constant: " + cc->best_name() + " = " + format_double(cc->best()));
    r.tables.emplace_back("regularity_constants", std::move(ct));
    r.documents.emplace_back("regularity_profile", profile_json(prof));
}

inline CouplingExperiment coupling_options(const ExperimentConfig& c, const Node& p) {
    CouplingExperiment cfg;
    cfg.runs = p.count("runs", 100000, 2, 100'000'000);
    cfg.length = p.count("length", 100, 1, 100000);
    cfg.a = p.get<Symbol>("a", 0);
    cfg.b = p.get<Symbol>("b", 1);
    cfg.seed = c.seed;
    cfg.workers = c.workers;
    return cfg;
}

inline void run_couple(const ExperimentConfig& c, ExperimentReport& r) {
    const auto k = main_kernel(c);
    const auto past = parse_past(c);
    const Node p = c.params();
    const auto cfg = coupling_options(c, p);
    for (Symbol s : {cfg.a, cfg.b})
        if (!k.kernel->alphabet().contains(s)) Node::fail("params", "symbol " + std::to_string(s) + " outside the alphabet");
    const auto prof = compute_profile(*k.kernel, profile_options(p, cfg.length));
    const auto acc = run_coupling_experiment(*k.kernel, past, cfg);
    const auto st = disagreement_statistics(acc, prof, confidence(p));
    r.tables.emplace_back("couple", st.table());
    CsvTable sums({"bound", "sum_p_hat", "ci_lo", "ci_hi", "closed_form"});
    sums.add_row({"delta", format_double(st.sum.estimate), format_double(st.sum.lo), format_double(st.sum.hi),
                  format_optional(st.sum_bound_delta)});
    sums.add_row({"gamma", format_double(st.sum.estimate), format_double(st.sum.lo), format_double(st.sum.hi),
                  format_optional(st.sum_bound_gamma)});
    r.tables.emplace_back("couple_sum", std::move(sums));
    r.refutations = st.refutations;
    r.replicas = cfg.runs;
    r.notes.push_back("sum of disagreement frequencies in " + interval_text({st.sum.lo, st.sum.hi}));
    r.notes.push_back("(1 - Delta)/Delta = " + format_optional(st.sum_bound_delta));
    r.notes.push_back("(1 - Gamma)/Gamma = " + format_optional(st.sum_bound_gamma));
}

inline void run_gcb(const ExperimentConfig& c, ExperimentReport& r) {
    const auto k = main_kernel(c);
    const auto past = parse_past(c);
    const Node p = c.params();
    const auto prof = compute_profile(*k.kernel, profile_options(p));
    const double constant = concentration_constant(p, prof);
    const auto opt = mc_options(c, p, &prof, false);
    r.notes.push_back("concentration constant " + format_double(constant));
    r.notes.push_back("burn-in " + std::to_string(opt.burn_in));
    if (c.kind == "birkhoff") {
        const auto phi = p.get<std::vector<double>>("phi");
        const std::size_t width = p.count("width", 1, 1, 24);
        const std::size_t n = p.count("n", std::nullopt, 1, 10'000'000);
        add_check(r, birkhoff_check(*k.kernel, past, phi, width, n, number_list(p, "us"), constant, opt));
    } else {
        const Observable f = parse_observable(p.child("observable"), k);
        r.notes.push_back("|delta|^2 = " + format_double(f.delta_norm_sq()));
        if (c.kind == "gcb-mgf") add_check(r, mgf_check(*k.kernel, past, f, number_list(p, "thetas"), constant, opt));
        else add_check(r, deviation_check(*k.kernel, past, f, number_list(p, "us"), constant, opt));
    }
    r.replicas = 2 * opt.replicas;
}

inline std::string reference_mode(const Node& p) {
    const auto mode = p.get<std::string>("reference", "auto");
    if (mode != "auto" && mode != "exact" && mode != "estimate")
        Node::fail("params.reference", "expected auto, exact or estimate");
    return mode;
}

inline std::size_t reference_length(const Node& p) { return p.count("reference_length", 2'000'000, 1000, 1'000'000'000); }

inline void run_dkw(const ExperimentConfig& c, ExperimentReport& r) {
    const auto k = main_kernel(c);
    const auto past = parse_past(c);
    const Node p = c.params();
    finite_alphabet(*k.kernel, "the DKW check");
    const auto prof = compute_profile(*k.kernel, profile_options(p));
    const auto cc = gcb_constants(prof);
    if (!cc.gamma_applicable) throw NotApplicable("the DKW check needs a certified Gamma > 0");
    const double gamma = cc.gamma.value.lo;
    auto opt = mc_options(c, p, &prof, true);
    if (!p.has("replicas")) opt.replicas = 10000;
    const std::size_t n = p.count("n", std::nullopt, 1, 10'000'000);
    const auto ks = count_list(p, "ks");
    const auto us = number_list(p, "us");
    const auto mode = reference_mode(p);
    const std::size_t ref_len = reference_length(p);
    auto reference = [&](std::size_t len) -> BlockReference {
        if (mode != "estimate")
            if (auto e = exact_block_law(k, len)) return {*e, 0.0};
        if (mode == "exact") Node::fail("params.reference", "no closed-form block law for family " + k.family);
        return estimated_block_law(*k.kernel, past, len, opt.burn_in, ref_len, c.seed, 20, opt.confidence);
    };
    r.notes.push_back("Gamma lower end " + format_double(gamma));
    r.notes.push_back("burn-in " + std::to_string(opt.burn_in));
    add_check(r, dkw_check(*k.kernel, past, ks, n, us, gamma, reference, opt));
    r.replicas = opt.replicas;
}

inline DistanceOptions distance_options(const ExperimentConfig& c, const Node& p) {
    DistanceOptions o;
    o.paths = p.count("paths", 1000, 2, 100'000'000);
    o.length = p.count("length", 1000, 1, 100'000'000);
    o.burn_in = p.count("burn_in", 100, 0, 100'000'000);
    o.seed = c.seed;
    o.workers = c.workers;
    o.confidence = confidence(p);
    return o;
}

inline void run_dbar(const ExperimentConfig& c, ExperimentReport& r) {
    const Node p = c.params();
    const Node kn = c.root().child("kernel");
    const auto past = parse_past(c);
    const auto opt = distance_options(c, p);
    DbarReport rep;
    if (!p.has("approximation")) {
        if (kn.get<std::string>("family") != "bkf")
            Node::fail("params.approximation", "required unless the kernel is a BKF kernel");
        const auto spec = parse_bkf(kn);
        std::vector<std::size_t> ks;
        if (p.has("ks")) {
            ks = count_list(p, "ks");
        } else {
            for (std::size_t i = 1; i <= spec.lambda.size(); ++i) ks.push_back(i);
        }
        for (std::size_t kk : ks)
            if (kk > spec.lambda.size()) Node::fail("params.ks", "entries must not exceed the number of components");
        rep = bkf_dbar_scan(spec, ks, past, opt, p.count("profile_lag", 16, 1, 100000));
        r.replicas = 2 * opt.paths * ks.size();
    } else {
        const auto g = kernel_spec(kn);
        const auto h = kernel_spec(p.child("approximation"));
        require_finite_alphabets(*h.kernel, *g.kernel);
        const std::size_t depth = p.count("depth", 8, 0, 24);
        const auto prof = compute_profile(*g.kernel, {p.count("profile_lag", 16, 1, 100000), std::min<std::size_t>(depth, 12)});
        const double constant = concentration_constant(p, prof);
        DbarRow row;
        row.witness = dbar_empirical_witness(*h.kernel, *g.kernel, past, opt);
        row.kl = kl_rate(*h.kernel, *g.kernel, past, opt);
        row.bound_kl = dbar_upper_kl(*row.kl, constant).hi;
        const auto sup = dbar_upper_sup(*h.kernel, *g.kernel, depth, constant);
        row.bound_sup = sup.value;
        if (!sup.certified) r.notes.push_back("sup difference bound is not certified");
        rep.rows.push_back(row);
        r.replicas = 2 * opt.paths;
    }
    r.tables.emplace_back("dbar", rep.table());
    for (const auto& row : rep.rows)
        if (!row.ordered())
            r.refutations.push_back("d-bar ordering fails at k=" + std::to_string(row.k) + ": witness " +
                                    format_double(row.witness.estimate));
    for (const auto& row : rep.rows)
        if (row.kl) r.notes.push_back("k=" + std::to_string(row.k) + " KL rate in " + interval_text({row.kl->lo, row.kl->hi}));
}

inline void run_renewal(const ExperimentConfig& c, ExperimentReport& r) {
    const Node kn = c.root().child("kernel");
    const Node p = c.params();
    const auto spec = parse_renewal(kn);
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        Node::fail("kernel", e.what());
    }
    const auto cls = gcb_classification(spec, p.count("prefix_len", 10, 1, 1000));
    r.tables.emplace_back("renewal", classification_table({cls}));
    r.notes.push_back("renewal measure exists: " + std::string(cls.exists ? "true" : "false"));
    r.notes.push_back("GCB: " + to_string(cls.has_gcb) + " (" + cls.evidence + ")");
    if (!cls.exists) return;
    const auto m = stationary_marginals(spec, p.count("n_max", 20, 0, 100000));
    CsvTable t({"m", "lo", "hi"});
    for (std::size_t z = 0; z < m.zeros.size(); ++z)
        t.add_row({std::to_string(z), format_double(m.zeros[z].lo), format_double(m.zeros[z].hi)});
    r.tables.emplace_back("renewal_zero_runs", std::move(t));
    r.notes.push_back("mu([1]) in " + interval_text(m.one));
    r.notes.push_back("mean inter-arrival time in " + interval_text(m.mean_interarrival));
}

// Applicability checks that need the parsed kernel but no sampling.
inline void check_applicability(const ExperimentConfig& c, Diagnostics& d) {
    const Node p = c.params();
    const auto k = main_kernel(c);
    auto attempt = [&](const std::string& where, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            d.push_back(e.what());
        } catch (const Error& e) {
            d.push_back(where + ": " + e.what());
        }
    };
    attempt("params", [&] {
        if (c.kind == "couple") {
            (void)profile_options(p, coupling_options(c, p).length);
            (void)confidence(p);
        } else if (c.kind == "dbar") {
            (void)distance_options(c, p);
            (void)p.count("depth", 8, 0, 24);
            (void)p.count("profile_lag", 16, 1, 100000);
            if (p.has("ks")) (void)count_list(p, "ks");
            if (p.has("constant")) (void)p.number("constant", std::nullopt, 0.0, 1.0);
        } else if (c.kind == "renewal") {
            (void)p.count("n_max", 20, 0, 100000);
            (void)p.count("prefix_len", 10, 1, 1000);
        } else {
            (void)profile_options(p);
        }
        if (c.kind == "gcb-mgf" || c.kind == "gcb-deviation" || c.kind == "birkhoff" || c.kind == "dkw") {
            (void)mc_options(c, p, nullptr, false);
            if (p.has("constant")) (void)p.number("constant", std::nullopt, 0.0, 1.0);
        }
        if (c.kind == "dkw") {
            const auto mode = reference_mode(p);
            (void)reference_length(p);
            if (mode == "exact" && k.family != "iid" && k.family != "markov")
                Node::fail("params.reference", "no closed-form block law for family " + k.family);
        }
    });
    if (c.kind == "dbar") {
        if (!k.kernel->alphabet().is_finite())
            d.push_back("kernel: d-bar bounds are defined only for finite alphabets; " + k.kernel->name() +
                        " has a countable alphabet");
        if (p.has("approximation"))
            attempt("params.approximation", [&] {
                const auto h = kernel_spec(p.child("approximation"));
                if (!h.kernel->alphabet().is_finite())
                    d.push_back("params.approximation: d-bar bounds are defined only for finite alphabets");
                else if (k.kernel->alphabet().is_finite() && h.kernel->alphabet() != k.kernel->alphabet())
                    d.push_back("params.approximation: alphabet differs from the kernel's");
            });
        if (k.kernel->alphabet().is_finite())
            attempt("kernel", [&] {
                if (!inf_probability(*k.kernel).certified)
                    d.push_back("kernel: inf g is not certified for " + k.kernel->name());
            });
        return;
    }
    if (c.kind == "gcb-mgf" || c.kind == "gcb-deviation" || c.kind == "birkhoff" || c.kind == "dkw") {
        attempt("kernel", [&] {
            const auto prof = compute_profile(*k.kernel, profile_options(p));
            if (c.kind == "dkw") {
                finite_alphabet(*k.kernel, "the DKW check");
                if (!gcb_constants(prof).gamma_applicable) d.push_back("kernel: the DKW check needs a certified Gamma > 0");
            } else if (!p.has("constant")) {
                (void)gcb_constants(prof).best();
            }
        });
    }
    if (c.kind == "gcb-mgf" || c.kind == "gcb-deviation")
        attempt("params.observable", [&] {
            const Observable f = parse_observable(p.child("observable"), k);
            if (c.kind == "gcb-mgf") {
                const auto thetas = number_list(p, "thetas");
                for (std::size_t i = 0; i < thetas.size(); ++i)
                    if (std::abs(thetas[i]) * f.range > 20.0)
                        d.push_back("params.thetas[" + std::to_string(i) + "]: |theta| * range(f) = " +
                                    format_double(std::abs(thetas[i]) * f.range) + " exceeds 20");
            } else {
                number_list(p, "us");
            }
        });
    if (c.kind == "birkhoff")
        attempt("params", [&] {
            (void)p.get<std::vector<double>>("phi");
            (void)p.count("n");
            number_list(p, "us");
        });
    if (c.kind == "dkw")
        attempt("params", [&] {
            (void)p.count("n");
            count_list(p, "ks");
            number_list(p, "us");
        });
    if (c.kind == "renewal") attempt("kernel", [&] { parse_renewal(c.root().child("kernel")).validate(); });
    if (c.kind == "couple")
        attempt("params", [&] {
            for (const char* key : {"a", "b"})
                if (p.has(key) && !k.kernel->alphabet().contains(p.get<Symbol>(key)))
                    d.push_back(std::string("params.") + key + ": symbol outside the alphabet");
        });
}

} // namespace detail

// Schema and applicability diagnostics, without running anything.
inline Diagnostics validate(const ExperimentConfig& c) {
    Diagnostics d;
    try {
        detail::check_param_names(c);
    } catch (const ConfigError& e) {
        d.push_back(e.what());
    }
    bool kernel_ok = true;
    try {
        detail::main_kernel(c);
    } catch (const Error& e) {
        d.push_back(e.what());
        kernel_ok = false;
    }
    if (!kernel_ok) return d;
    try {
        parse_past(c).validate(detail::main_kernel(c).kernel->alphabet());
    } catch (const ConfigError& e) {
        d.push_back(e.what());
    } catch (const Error& e) {
        d.push_back(std::string("past: ") + e.what());
    }
    detail::check_applicability(c, d);
    return d;
}

inline Diagnostics validate(const json& doc, const std::optional<std::string>& kind_hint = std::nullopt) {
    try {
        return validate(parse_config(doc, kind_hint));
    } catch (const ConfigError& e) {
        return {e.what()};
    }
}

inline ExperimentReport run(const ExperimentConfig& c) {
    const auto diagnostics = validate(c);
    if (!diagnostics.empty()) {
        std::string msg;
        for (const auto& m : diagnostics) msg += (msg.empty() ? "" : "; ") + m;
        throw ConfigError(msg);
    }
    ExperimentReport r;
    r.kind = c.kind;
    r.config = c.document;
    r.seed = c.seed;
    r.workers = c.workers;
    const auto start = std::chrono::steady_clock::now();
    if (c.kind == "regularity") detail::run_regularity(c, r);
    else if (c.kind == "couple") detail::run_couple(c, r);
    else if (c.kind == "gcb-mgf" || c.kind == "gcb-deviation" || c.kind == "birkhoff") detail::run_gcb(c, r);
    else if (c.kind == "dkw") detail::run_dkw(c, r);
    else if (c.kind == "dbar") detail::run_dbar(c, r);
    else if (c.kind == "renewal") detail::run_renewal(c, r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// <dir>/<table>.csv for each table, <dir>/<doc>.json and <dir>/summary.txt.
inline void write_report(const ExperimentReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::filesystem::path& file, const std::string& text) {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw ConfigError(file.string() + ": cannot write");
        out << text;
    };
    for (const auto& [name, t] : r.tables) write(dir / (name + ".csv"), t.str());
    for (const auto& [name, j] : r.documents) write(dir / (name + ".json"), j.dump(2) + "\n");
    write(dir / "summary.txt", r.summary());
}

} // namespace scum::harness
