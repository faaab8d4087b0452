#pragma once

#include "../errors.hpp"
#include "../families.hpp"
#include "../kernel.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace scum::harness {

using json = nlohmann::json;

inline const std::set<std::string>& experiment_kinds() {
    static const std::set<std::string> kinds{"regularity", "couple",  "gcb-mgf", "gcb-deviation",
                                             "birkhoff",   "dkw",     "dbar",    "renewal"};
    return kinds;
}

// Field access with errors that name the offending path.
class Node {
public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    [[nodiscard]] const std::string& path() const { return path_; }
    [[nodiscard]] const json& raw() const { return *j_; }
    [[nodiscard]] bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

    [[nodiscard]] Node child(const std::string& key) const {
        if (!j_->is_object()) fail(path_, "expected an object");
        if (!j_->contains(key)) fail(join(key), "missing required field");
        return {j_->at(key), join(key)};
    }
    [[nodiscard]] std::optional<Node> optional_child(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return child(key);
    }

    template <class T>
    [[nodiscard]] T as() const {
        try {
            check_type<T>();
            return j_->get<T>();
        } catch (const nlohmann::json::exception&) {
            fail(path_, "has the wrong type");
        }
    }

    template <class T>
    [[nodiscard]] T get(const std::string& key) const {
        return child(key).as<T>();
    }
    template <class T>
    [[nodiscard]] T get(const std::string& key, T fallback) const {
        return has(key) ? child(key).as<T>() : fallback;
    }

    [[nodiscard]] double number(const std::string& key, std::optional<double> fallback = std::nullopt,
                                std::optional<double> lo = std::nullopt, std::optional<double> hi = std::nullopt) const {
        if (!has(key)) {
            if (!fallback) fail(join(key), "missing required field");
            return *fallback;
        }
        const double v = child(key).as<double>();
        if ((lo && v < *lo) || (hi && v > *hi)) {
            std::ostringstream msg;
            msg << "value " << v << " outside [" << (lo ? std::to_string(*lo) : "-inf") << ", "
                << (hi ? std::to_string(*hi) : "inf") << "]";
            fail(join(key), msg.str());
        }
        return v;
    }
    [[nodiscard]] std::size_t count(const std::string& key, std::optional<std::size_t> fallback = std::nullopt,
                                    std::size_t lo = 0, std::size_t hi = std::numeric_limits<std::size_t>::max()) const {
        if (!has(key)) {
            if (!fallback) fail(join(key), "missing required field");
            return *fallback;
        }
        const Node c = child(key);
        if (!c.raw().is_number_integer() || c.raw().get<long long>() < 0) fail(c.path(), "expected a nonnegative integer");
        const auto v = c.raw().get<std::size_t>();
        if (v < lo || v > hi)
            fail(c.path(), "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

private:
    [[nodiscard]] std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    void check_type() const {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!j_->is_string()) fail(path_, "expected a string");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!j_->is_boolean()) fail(path_, "expected a boolean");
        } else if constexpr (std::is_arithmetic_v<T>) {
            if (!j_->is_number()) fail(path_, "expected a number");
        } else {
            if (!j_->is_array()) fail(path_, "expected an array");
        }
    }

    const json* j_;
    std::string path_;
};

struct ExperimentConfig {
    json document;
    std::string kind;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string output = "scumlab_out";

    [[nodiscard]] Node root() const { return {document, ""}; }
    [[nodiscard]] Node params() const {
        static const json empty = json::object();
        return document.contains("params") ? Node(document.at("params"), "params") : Node(empty, "params");
    }
};

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config");
    try {
        return json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline ExperimentConfig parse_config(json doc, const std::optional<std::string>& kind_hint = std::nullopt) {
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    ExperimentConfig c;
    const Node root(doc, "");
    if (root.has("experiment")) c.kind = root.get<std::string>("experiment");
    else if (kind_hint) c.kind = *kind_hint;
    else Node::fail("experiment", "missing required field");
    if (!experiment_kinds().count(c.kind)) Node::fail("experiment", "unknown experiment kind '" + c.kind + "'");
    if (root.has("seed")) c.seed = root.child("seed").as<std::uint64_t>();
    if (root.has("workers")) c.workers = static_cast<unsigned>(root.count("workers", 1, 1, 256));
    if (root.has("output")) c.output = root.get<std::string>("output");
    if (!root.has("kernel")) Node::fail("kernel", "missing required field");
    static const std::set<std::string> known{"experiment", "seed", "workers", "output", "kernel", "past", "params"};
    for (const auto& [k, v] : doc.items())
        if (!known.count(k)) Node::fail(k, "unknown field");
    c.document = std::move(doc);
    return c;
}

inline CoefficientSequence parse_sequence(const Node& n) {
    const auto prefix = n.get<std::vector<double>>("prefix", {});
    const auto tail = n.get<std::string>("tail", "none");
    if (tail == "none") return CoefficientSequence::finite(prefix);
    if (tail == "power") return CoefficientSequence::power(prefix, n.number("c"), n.number("s", std::nullopt, 0.0));
    if (tail == "geometric") return CoefficientSequence::geometric(prefix, n.number("c"), n.number("r", std::nullopt, 0.0, 1.0));
    Node::fail(n.path() + ".tail", "expected none, power or geometric");
}

// Rows of a context table listed by context index (lag-i symbol as the digit
// of weight n^{i-1}).
inline ContextTable parse_context_table(const Node& n, std::size_t alphabet, std::size_t length) {
    const auto rows = n.as<std::vector<std::vector<double>>>();
    std::vector<double> flat;
    for (const auto& r : rows) {
        if (r.size() != alphabet) Node::fail(n.path(), "every row needs " + std::to_string(alphabet) + " entries");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    try {
        return ContextTable(alphabet, length, std::move(flat));
    } catch (const InvalidArgument& e) {
        Node::fail(n.path(), e.what());
    }
}

inline BKFSpec parse_bkf(const Node& n) {
    BKFSpec s;
    s.epsilon = n.number("epsilon");
    s.lambda = n.get<std::vector<double>>("lambda");
    s.m = n.get<std::vector<std::size_t>>("m");
    const auto phi = n.get<std::string>("phi", "linear");
    if (phi == "linear") s.phi = BKFSpec::Phi::linear;
    else if (phi == "step") s.phi = BKFSpec::Phi::step;
    else Node::fail(n.path() + ".phi", "expected linear or step");
    try {
        s.validate();
    } catch (const Error& e) {
        Node::fail(n.path(), e.what());
    }
    return s;
}

inline KernelPtr parse_kernel(const Node& n) {
    const auto family = n.get<std::string>("family");
    try {
        if (family == "iid") return build_iid(n.get<std::vector<double>>("probs"));
        if (family == "markov") return build_markov(n.get<std::vector<std::vector<double>>>("matrix"));
        if (family == "binary-ar") {
            BinaryARSpec s;
            s.xi = parse_sequence(n.child("xi"));
            s.xi0 = n.number("xi0", 0.0);
            s.xi0_is_sum = n.get<bool>("xi0_is_sum", false);
            if (n.get<std::string>("link", "logistic") != "logistic") Node::fail(n.path() + ".link", "only logistic is configurable");
            return build_binary_ar(std::move(s));
        }
        if (family == "poisson") return build_poisson_regression({parse_sequence(n.child("xi")), n.number("cap", 1.0, 0.0)});
        if (family == "mixture") {
            MarkovMixtureSpec s;
            s.lambda = n.get<std::vector<double>>("lambda");
            const Node comps = n.child("components");
            if (!comps.raw().is_array() || comps.raw().size() != s.lambda.size())
                Node::fail(comps.path(), "expected one component per weight");
            const std::size_t A = n.count("alphabet", 2, 2, 64);
            for (std::size_t j = 0; j < s.lambda.size(); ++j)
                s.components.push_back(parse_context_table(Node(comps.raw()[j], comps.path() + "[" + std::to_string(j) + "]"), A, j));
            return build_markov_mixture(std::move(s));
        }
        if (family == "renewal")
            return build_renewal({n.get<std::vector<double>>("prefix"), n.number("q_inf", 0.0, 0.0, 1.0), n.number("tail_c", 0.0),
                                  n.number("tail_s", 1.0, 0.0)});
        if (family == "bkf") return build_bkf(parse_bkf(n));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        Node::fail(n.path(), e.what());
    }
    Node::fail(n.path() + ".family", "unknown kernel family '" + family + "'");
}

inline RenewalSpec parse_renewal(const Node& n) {
    if (n.get<std::string>("family") != "renewal") Node::fail(n.path() + ".family", "expected a renewal kernel");
    return {n.get<std::vector<double>>("prefix"), n.number("q_inf", 0.0, 0.0, 1.0), n.number("tail_c", 0.0),
            n.number("tail_s", 1.0, 0.0)};
}

inline PastSpec parse_past(const ExperimentConfig& c) {
    const auto past = c.root().optional_child("past");
    if (!past) return PastSpec::constant(0);
    const auto word = past->get<std::vector<Symbol>>("explicit", {});
    const auto fill = past->get<std::vector<Symbol>>("fill", {0});
    if (fill.empty()) Node::fail(past->path() + ".fill", "must be nonempty");
    return PastSpec(word, fill);
}

} // namespace scum::harness
