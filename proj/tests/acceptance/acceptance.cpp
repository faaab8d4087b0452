#include <scumlab/scumlab.hpp>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace scum;
using namespace scum::harness;

namespace {

namespace fs = std::filesystem;
using Matrix = std::vector<std::vector<double>>;

constexpr std::uint64_t kSeed = 20240607;

struct Outcome {
    bool pass = true;
    std::vector<std::string> failures;
    std::vector<std::string> facts;
    std::vector<std::pair<std::string, std::string>> csv;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures.push_back(what);
        }
    }
    void keep(const std::string& name, const CsvTable& t) { csv.emplace_back(name, t.str()); }
};

struct Criterion {
    int id;
    std::string title;
    double limit_seconds;
    std::function<Outcome(unsigned)> body;
};

double num(const std::string& cell) { return cell == "NA" ? std::nan("") : std::stod(cell); }

ExperimentReport run_json(const json& doc, unsigned workers) {
    json d = doc;
    d["seed"] = kSeed;
    d["workers"] = workers;
    return run(parse_config(d));
}

void keep_report(Outcome& o, const std::string& prefix, const ExperimentReport& r) {
    for (const auto& [name, t] : r.tables) o.keep(prefix + "_" + name, t);
    for (const auto& f : r.refutations) o.require(false, prefix + ": " + f);
}

// ---------------------------------------------------------------- oracles

ConditionalDistribution random_distribution(RandomStream& r, std::size_t n, bool sparse) {
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) {
        v = (sparse && r.uniform() < 0.3) ? 0.0 : -std::log(1.0 - r.uniform());
        s += v;
    }
    if (s == 0.0) {
        p[0] = 1.0;
        s = 1.0;
    }
    for (auto& v : p) v /= s;
    return {p, 0.0, {}};
}

Matrix random_stochastic(RandomStream& r, std::size_t n) {
    Matrix Q(n);
    for (auto& row : Q) row = random_distribution(r, n, false).probabilities;
    return Q;
}

// max over row pairs of half the l1 distance
double dobrushin_oracle(const Matrix& Q) {
    double d = 0.0;
    for (const auto& a : Q)
        for (const auto& b : Q) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
            d = std::max(d, 0.5 * s);
        }
    return d;
}

// left Perron vector from an eigendecomposition of Q^T
std::vector<double> stationary_oracle(const Matrix& Q) {
    Eigen::MatrixXd M(Q.size(), Q.size());
    for (std::size_t i = 0; i < Q.size(); ++i)
        for (std::size_t j = 0; j < Q.size(); ++j) M(j, i) = Q[i][j];
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()[i] - 1.0) < std::abs(es.eigenvalues()[best] - 1.0)) best = i;
    std::vector<double> pi(Q.size());
    double s = 0.0;
    for (std::size_t i = 0; i < Q.size(); ++i) s += pi[i] = es.eigenvectors().col(best)[static_cast<Eigen::Index>(i)].real();
    for (auto& v : pi) v /= s;
    return pi;
}

double markov_kl_oracle(const Matrix& H, const Matrix& G) {
    const auto pi = stationary_oracle(H);
    double s = 0.0;
    for (std::size_t b = 0; b < H.size(); ++b)
        for (std::size_t a = 0; a < H.size(); ++a) s += pi[b] * H[b][a] * std::log(H[b][a] / G[b][a]);
    return s;
}

double log_choose(double n, double k) { return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1); }

// P(|S - trials/2| > t) for S ~ Bin(trials, 1/2)
double fair_binomial_tail(std::size_t trials, double t) {
    double total = 0.0;
    const double N = static_cast<double>(trials);
    for (std::size_t s = 0; s <= trials; ++s)
        if (std::abs(static_cast<double>(s) - 0.5 * N) > t) total += std::exp(log_choose(N, static_cast<double>(s)) - N * std::log(2.0));
    return total;
}

// ---------------------------------------------------------------- kernel suite

const json kMarkov = {{"family", "markov"}, {"matrix", {{0.9, 0.1}, {0.2, 0.8}}}};
const json kAr = {{"family", "binary-ar"}, {"xi", {{"tail", "geometric"}, {"c", 0.25}, {"r", 0.5}}}};
const json kMixture = {{"family", "mixture"},
                       {"lambda", {0.4, 0.4, 0.2}},
                       {"components", {{{0.3, 0.7}}, {{0.8, 0.2}, {0.3, 0.7}}, {{0.9, 0.1}, {0.4, 0.6}, {0.6, 0.4}, {0.2, 0.8}}}}};
const json kRenewal = {{"family", "renewal"}, {"prefix", {2.0 / 3.0, 0.5}}, {"q_inf", 0.0}, {"tail_c", 1.0}, {"tail_s", 2.0}};
const json kIid = {{"family", "iid"}, {"probs", {0.5, 0.5}}};

struct SuiteMember {
    std::string name;
    json kernel;
    json past;
};

std::vector<SuiteMember> coupling_suite() {
    return {{"markov", kMarkov, {{"fill", {0}}}},
            {"ar", kAr, {{"fill", {0}}}},
            {"mixture", kMixture, {{"fill", {0}}}},
            {"renewal", kRenewal, {{"fill", {0}}}}};
}

// ---------------------------------------------------------------- criteria

Outcome maximal_coupling_exactness(unsigned) {
    Outcome o;
    RandomStream r(kSeed);
    double marg = 0.0, diag = 0.0, off = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(r.uniform() * 8);
        const auto l = random_distribution(r, n, t % 2), m = random_distribution(r, n, t % 5 == 0);
        const auto j = maximal_coupling_step(l, m);
        double tv = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            double row = 0.0, col = 0.0;
            for (std::size_t d = 0; d < n; ++d) {
                row += j.at(c, d);
                col += j.at(d, c);
            }
            marg = std::max({marg, std::abs(row - l.probabilities[c]), std::abs(col - m.probabilities[c])});
            diag = std::max(diag, std::abs(j.at(c, c) - std::min(l.probabilities[c], m.probabilities[c])));
            tv += 0.5 * std::abs(l.probabilities[c] - m.probabilities[c]);
        }
        off = std::max(off, std::abs(j.off_diagonal_mass() - tv));
    }
    o.require(marg <= 1e-10, "marginal error " + format_double(marg));
    o.require(diag <= 1e-12, "diagonal error " + format_double(diag));
    o.require(off <= 1e-10, "off-diagonal error " + format_double(off));
    CsvTable t({"check", "max_error", "tolerance"});
    t.add_row({"marginals", format_double(marg), "1e-10"});
    t.add_row({"diagonal", format_double(diag), "1e-12"});
    t.add_row({"off_diagonal", format_double(off), "1e-10"});
    o.keep("c1_coupling", t);
    o.facts.push_back("max errors " + format_double(marg) + ", " + format_double(diag) + ", " + format_double(off));
    return o;
}

Outcome markov_identity(unsigned) {
    Outcome o;
    RandomStream r(kSeed + 1);
    CsvTable t({"matrix", "size", "one_minus_d", "delta_lo", "gamma_lo"});
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto Q = random_stochastic(r, 2 + static_cast<std::size_t>(i % 7));
        const auto prof = compute_profile(*build_markov(Q));
        const double oracle = 1.0 - dobrushin_oracle(Q);
        const double d = delta_constant(prof).lo;
        const double g = gamma_constant(prof).value.lo;
        worst = std::max({worst, std::abs(d - oracle), std::abs(g - oracle)});
        t.add_row({std::to_string(i), std::to_string(Q.size()), format_double(oracle), format_double(d), format_double(g)});
    }
    o.require(worst <= 2e-12, "worst deviation " + format_double(worst));
    o.facts.push_back("worst |Delta or Gamma - (1 - d(Q))| = " + format_double(worst));
    o.keep("c2_markov_identity", t);
    return o;
}

Outcome coupling_error_bounds(unsigned workers) {
    Outcome o;
    for (const auto& m : coupling_suite()) {
        const bool renewal = m.name == "renewal";
        json doc = {{"experiment", "couple"}, {"kernel", m.kernel}, {"past", m.past},
                    {"params", {{"runs", 100000}, {"length", 100}, {"a", renewal ? 1 : 0}, {"b", renewal ? 0 : 1}}}};
        const auto r = run_json(doc, workers);
        keep_report(o, "c3_" + m.name, r);
        const std::size_t bound_col = renewal ? 5 : 4;
        for (const auto& row : r.main_table().rows()) {
            const double b = num(row[bound_col]);
            o.require(!std::isnan(b), m.name + ": no recursion bound at lag " + row[0]);
            o.require(num(row[2]) <= b + 1e-12, m.name + ": lag " + row[0] + " Wilson lower end above the bound");
        }
        const auto& sums = r.tables.at(1).second.rows().at(renewal ? 1 : 0);
        const double closed = num(sums[4]);
        o.require(!std::isnan(closed), m.name + ": no closed-form total bound");
        o.require(num(sums[2]) <= closed, m.name + ": total disagreement above the closed form");
        o.facts.push_back(m.name + " sum " + sums[1] + " <= " + sums[4]);
    }
    return o;
}

Outcome renewal_equation_oracle(unsigned workers) {
    Outcome o;
    CsvTable t({"kernel", "lag", "u_recursion", "u_simulated", "sigma"});
    const std::size_t n = 100, N = 100000;
    double worst = 0.0;
    for (const auto& m : coupling_suite()) {
        const auto k = parse_kernel(Node(m.kernel, "kernel"));
        const auto prof = compute_profile(*k, {n, 12});
        const auto var = prof.var_upper();
        const auto u = renewal_disagreement(var, n);
        const auto counts = auxiliary_renewal_counts(var, n, N, kSeed, workers, "c4/" + m.name);
        for (std::size_t j = 0; j < n; ++j) {
            const double p = u.terms[j];
            const double sim = static_cast<double>(counts[j]) / static_cast<double>(N);
            const double sigma = std::sqrt(std::max(p * (1 - p), 0.0) / static_cast<double>(N));
            const double z = sigma > 0 ? std::abs(sim - p) / sigma : (sim == p ? 0.0 : kInf);
            worst = std::max(worst, z);
            o.require(std::abs(sim - p) <= 4.0 * sigma + 1e-12, m.name + ": lag " + std::to_string(j + 1) + " off by " +
                                                                     format_double(z) + " sigma");
            t.add_row({m.name, std::to_string(j + 1), format_double(p), format_double(sim), format_double(sigma)});
        }
    }
    o.facts.push_back("largest deviation " + format_double(worst) + " sigma");
    o.keep("c4_renewal_equation", t);
    return o;
}

Outcome gcb_non_refutation(unsigned workers) {
    Outcome o;
    auto suite = coupling_suite();
    suite[3].past = {{"explicit", {1}}, {"fill", {0}}};
    suite.push_back({"iid", kIid, {{"fill", {0}}}});
    const json observable = {{"kind", "weighted-sum"}, {"length", 25}, {"weight", 0.2}};
    const std::vector<double> thetas{-1.0, -0.5, 0.5, 1.0}, us{0.5, 1.0, 1.5, 2.0, 2.5};
    for (const auto& m : suite) {
        const json mgf = {{"experiment", "gcb-mgf"}, {"kernel", m.kernel}, {"past", m.past},
                          {"params", {{"replicas", 100000}, {"thetas", thetas}, {"observable", observable}}}};
        const json dev = {{"experiment", "gcb-deviation"}, {"kernel", m.kernel}, {"past", m.past},
                          {"params", {{"replicas", 100000}, {"us", us}, {"observable", observable}}}};
        const auto rm = run_json(mgf, workers);
        const auto rd = run_json(dev, workers);
        keep_report(o, "c5_" + m.name + "_mgf", rm);
        keep_report(o, "c5_" + m.name + "_deviation", rd);
        if (m.name != "iid") continue;
        // f - E f = (1/5) sum (X_j - 1/2): E exp(theta (f - E f)) = cosh(theta/10)^25
        for (std::size_t i = 0; i < thetas.size(); ++i) {
            const auto& row = rm.main_table().rows()[i];
            const double oracle = std::pow(std::cosh(thetas[i] / 10.0), 25.0);
            o.require(num(row[2]) <= oracle && oracle <= num(row[3]), "iid mgf oracle outside the CI at " + row[0]);
        }
        // P(|S/5 - 5/2| > u) = P(|S - 25/2| > 5u), S ~ Bin(25, 1/2)
        for (std::size_t i = 0; i < us.size(); ++i) {
            const auto& row = rd.main_table().rows()[i];
            const double oracle = fair_binomial_tail(25, 5.0 * us[i]);
            o.require(num(row[2]) <= oracle && oracle <= num(row[3]), "iid deviation oracle outside the CI at " + row[0]);
        }
        o.facts.push_back("iid cosh and binomial oracles inside every CI");
    }
    return o;
}

Outcome dkw(unsigned workers) {
    Outcome o;
    const std::size_t n = 10000;
    for (const auto& [name, kernel] : std::vector<std::pair<std::string, json>>{{"iid", kIid}, {"markov", kMarkov}}) {
        const json doc = {{"experiment", "dkw"}, {"kernel", kernel},
                          {"params", {{"ks", {1, 2}}, {"n", n}, {"us", {1, 2, 3}}, {"replicas", 10000}, {"reference", "exact"}}}};
        const auto r = run_json(doc, workers);
        keep_report(o, "c6_" + name, r);
        if (name != "iid") continue;
        // k = 1 on a fair coin: sup distance is |S/(n+1) - 1/2|
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& row = r.main_table().rows()[i];
            const double u = static_cast<double>(i + 1);
            const double threshold = (u + std::sqrt(2.0)) / std::sqrt(static_cast<double>(n + 1));
            const double oracle = fair_binomial_tail(n + 1, threshold * static_cast<double>(n + 1));
            o.require(num(row[2]) <= oracle && oracle <= num(row[3]), "iid binomial oracle outside the CI at " + row[0]);
        }
    }
    return o;
}

Outcome dbar_sandwich(unsigned workers) {
    Outcome o;
    const json bkf = {{"family", "bkf"}, {"epsilon", 0.1}, {"lambda", {0.5, 0.3, 0.2}}, {"m", {1, 3, 5}}, {"phi", "linear"}};
    const json doc = {{"experiment", "dbar"}, {"kernel", bkf},
                      {"params", {{"ks", {1, 2}}, {"paths", 1000}, {"length", 1000}, {"burn_in", 100}}}};
    const auto r = run_json(doc, workers);
    keep_report(o, "c7_bkf", r);
    const std::vector<double> lower{0.05, 0.02};
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& row = r.main_table().rows()[i];
        const double lo = num(row[1]), w = num(row[2]), hw = num(row[3]), cor = num(row[6]);
        o.require(std::abs(lo - lower[i]) < 1e-15, "lower bound arithmetic at k=" + row[0]);
        o.require(lo <= w + hw, "lower bound above the witness at k=" + row[0]);
        o.require(w + hw <= cor, "witness above the Markov-approximation bound at k=" + row[0]);
        o.facts.push_back("k=" + row[0] + ": " + format_double(lo) + " <= " + format_double(w) + " +- " + format_double(hw) +
                          " <= " + format_double(cor));
    }

    CsvTable t({"pair", "oracle", "estimate", "lo", "hi"});
    DistanceOptions opt;
    opt.paths = 400;
    opt.length = 1000;
    opt.burn_in = 100;
    opt.seed = kSeed;
    opt.workers = workers;
    const double p = 0.6, q = 0.5;
    const double analytic = p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q));
    o.require(std::abs(analytic - 0.020136) <= 1e-6, "Bernoulli KL " + format_double(analytic));
    opt.tag = "c7/bernoulli";
    const auto kb = kl_rate(*build_iid({1 - p, p}), *build_iid({1 - q, q}), PastSpec::constant(0), opt);
    o.require(kb.lo <= analytic && analytic <= kb.hi, "Bernoulli KL oracle outside the CI");
    t.add_row({"bernoulli", format_double(analytic), format_double(kb.estimate), format_double(kb.lo), format_double(kb.hi)});
    const Matrix H{{0.9, 0.1}, {0.2, 0.8}}, G{{0.8, 0.2}, {0.3, 0.7}};
    const double mk = markov_kl_oracle(H, G);
    opt.tag = "c7/markov";
    const auto km = kl_rate(*build_markov(H), *build_markov(G), PastSpec::constant(0), opt);
    o.require(km.lo <= mk && mk <= km.hi, "Markov KL oracle outside the CI");
    t.add_row({"markov", format_double(mk), format_double(km.estimate), format_double(km.lo), format_double(km.hi)});
    o.keep("c7_kl", t);
    return o;
}

Outcome renewal_laws(unsigned workers) {
    Outcome o;
    const RenewalSpec positive{{0.5}, 0.2, 0.5, 0.5};
    const RenewalSpec stretched{{2.0 / 3.0, 0.5}, 0.0, 1.0, 0.5};
    const std::vector<RenewalSpec> specs{positive, stretched, {{0.3}, 0.3, 0.0, 1.0}, {{0.9, 0.1, 0.4}, 0.0, 2.0, 1.0}};

    double worst = 0.0;
    for (const auto& s : specs)
        for (std::size_t n : {10u, 1000u, 100000u}) {
            const auto law = interarrival(s, n);
            CompensatedSum t;
            for (double f : law.f) t.add(f);
            worst = std::max(worst, std::abs(t.value() + law.tail_mass - 1.0));
        }
    o.require(worst <= 1e-10, "normalization error " + format_double(worst));
    o.facts.push_back("normalization error " + format_double(worst));

    CsvTable freq({"law", "block", "target", "observed", "sigma"});
    auto batch_sigma = [](const std::vector<Symbol>& w, std::size_t len, std::size_t c) {
        const std::size_t batches = 20, per = w.size() / batches;
        std::vector<double> v;
        for (std::size_t i = 0; i < batches; ++i)
            v.push_back(empirical_blocks(std::span<const Symbol>(w).subspan(i * per, per), len, 2).frequency(c));
        return sample_moments(v).standard_error();
    };
    for (const auto& [name, s] : std::vector<std::pair<std::string, RenewalSpec>>{{"positive", positive}, {"stretched", stretched}}) {
        const auto m = stationary_marginals(s, 3);
        const auto k = build_renewal(s);
        RandomStream rng = replica_stream(kSeed, "c8/long-run/" + name, 0);
        const auto w = sample_window(*k, PastSpec::constant(1), 400000, 1000, rng);
        const auto ones = empirical_blocks(w, 1, 2);
        const double target = 0.5 * (m.one.lo + m.one.hi);
        const double sigma = batch_sigma(w, 1, 1);
        o.require(std::abs(ones.frequency(1) - target) <= 4.0 * sigma, name + ": long-run frequency of ones");
        freq.add_row({name, "1", format_double(target), format_double(ones.frequency(1)), format_double(sigma)});

        const auto chain = build_markov(renewal_markov_chain(s));
        RandomStream r1 = replica_stream(kSeed, "c8/image/" + name, 0);
        const auto states = sample_window(*chain, PastSpec::constant(0), 200000, 2000, r1);
        std::vector<Symbol> image(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) image[i] = states[i] == 0 ? 1 : 0;
        for (std::size_t len = 1; len <= 3; ++len) {
            const auto a = empirical_blocks(image, len, 2);
            const auto b = empirical_blocks(w, len, 2);
            for (std::size_t c = 0; c < a.counts.size(); ++c) {
                const double sg = std::hypot(batch_sigma(image, len, c), batch_sigma(w, len, c));
                o.require(std::abs(a.frequency(c) - b.frequency(c)) <= 4.0 * sg + 1e-12,
                          name + ": chain image block " + std::to_string(len) + ":" + std::to_string(c));
                freq.add_row({name + "/image", std::to_string(len) + ":" + std::to_string(c), format_double(b.frequency(c)),
                              format_double(a.frequency(c)), format_double(sg)});
            }
        }
    }
    o.keep("c8_frequencies", freq);

    auto classify = [&](const std::string& name, const RenewalSpec& s) {
        const json doc = {{"experiment", "renewal"},
                          {"kernel", {{"family", "renewal"}, {"prefix", s.prefix}, {"q_inf", s.q_inf}, {"tail_c", s.tail_c}, {"tail_s", s.tail_s}}},
                          {"params", {{"n_max", 10}}}};
        const auto r = run_json(doc, workers);
        keep_report(o, "c8_" + name, r);
        return r.main_table().rows().at(0).at(5);
    };
    o.require(classify("positive", positive) == "true", "q_inf = 0.2 family not classified as GCB");
    o.require(classify("stretched", stretched) == "false", "q_j = j^(-1/2) family not classified as non-GCB");
    return o;
}

Outcome regime_detection(unsigned workers) {
    Outcome o;
    const json slow = {{"family", "binary-ar"}, {"xi", {{"tail", "power"}, {"c", 0.1}, {"s", 1.5}}}, {"xi0_is_sum", true}};
    const json fast = {{"family", "binary-ar"}, {"xi", {{"tail", "power"}, {"c", 1.0}, {"s", 2.5}}}};
    const auto rs = run_json({{"experiment", "regularity"}, {"kernel", slow}}, workers);
    const auto rf = run_json({{"experiment", "regularity"}, {"kernel", fast}}, workers);
    keep_report(o, "c9_slow", rs);
    keep_report(o, "c9_fast", rf);
    const auto& cs = rs.tables.at(1).second.rows();
    const auto& cf = rf.tables.at(1).second.rows();
    o.require(cs.at(0)[0] == "Delta" && num(cs[0][1]) > 0.0, "c/j^1.5: Delta interval not strictly positive");
    o.require(cs.at(1)[0] == "Gamma" && cs[1][3] == "flagged-zero", "c/j^1.5: Gamma not flagged 0");
    o.require(cf.at(1)[0] == "Gamma" && num(cf[1][1]) > 0.0, "C/j^2.5: Gamma interval not strictly positive");
    o.facts.push_back("c/j^1.5: Delta in [" + cs[0][1] + ", " + cs[0][2] + "], Gamma " + cs[1][3]);
    o.facts.push_back("C/j^2.5: Gamma in [" + cf[1][1] + ", " + cf[1][2] + "]");
    return o;
}

void write_csvs(const fs::path& dir, const Outcome& o) {
    fs::create_directories(dir);
    for (const auto& [name, text] : o.csv) std::ofstream(dir / (name + ".csv"), std::ios::binary) << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    unsigned workers = 4;
    std::string out = "acceptance_out";
    app.add_option("--workers", workers, "worker threads for the primary run")->check(CLI::Range(1u, 256u));
    app.add_option("--out", out, "directory for the CSV outputs");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "maximal coupling exactness", 10, maximal_coupling_exactness},
        {2, "Markov identity Delta = Gamma = 1 - d(Q)", 5, markov_identity},
        {3, "coupling-error bounds", 300, coupling_error_bounds},
        {4, "renewal-equation oracle", 60, renewal_equation_oracle},
        {5, "GCB non-refutation", 600, gcb_non_refutation},
        {6, "DKW", 600, dkw},
        {7, "d-bar sandwich on BKF", 600, dbar_sandwich},
        {8, "renewal laws", 300, renewal_laws},
        {9, "regime detection", 60, regime_detection},
    };
    const unsigned other = workers == 1 ? 4 : 1;
    int failed = 0;
    std::vector<Outcome> primary;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body(workers);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        o.require(secs < c.limit_seconds, "runtime " + format_double(secs) + " s over " + format_double(c.limit_seconds) + " s");
        write_csvs(fs::path(out) / ("workers" + std::to_string(workers)), o);
        std::ostringstream line;
        line << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << ") in " << std::fixed;
        line.precision(1);
        line << secs << " s";
        for (const auto& f : o.facts) line << "; " << f;
        for (const auto& f : o.failures) line << "; FAILED: " << f;
        std::cout << line.str() << std::endl;
        failed += !o.pass;
        primary.push_back(std::move(o));
    }

    // Criterion 10: the same CSVs from a second worker count.
    Outcome repro;
    std::size_t compared = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].body(other);
        } catch (const std::exception& e) {
            repro.require(false, "criterion " + std::to_string(criteria[i].id) + " rerun threw: " + e.what());
            continue;
        }
        write_csvs(fs::path(out) / ("workers" + std::to_string(other)), o);
        repro.require(o.csv.size() == primary[i].csv.size(), "criterion " + std::to_string(criteria[i].id) + ": CSV count differs");
        for (std::size_t j = 0; j < std::min(o.csv.size(), primary[i].csv.size()); ++j) {
            ++compared;
            repro.require(o.csv[j] == primary[i].csv[j], o.csv[j].first + ".csv differs between workers " +
                                                             std::to_string(workers) + " and " + std::to_string(other));
        }
    }
    std::cout << (repro.pass ? "PASS" : "FAIL") << " criterion 10 (reproducibility across workers " << workers << " and "
              << other << "); " << compared << " CSVs compared";
    for (const auto& f : repro.failures) std::cout << "; FAILED: " << f;
    std::cout << std::endl;
    failed += !repro.pass;
    return failed == 0 ? 0 : 1;
}
