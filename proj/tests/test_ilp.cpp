#include "doctest.h"

#include <filesystem>
#include <functional>
#include <map>
#include <set>

#include "ilpnli/ilp.hpp"
#include "ilpnli/rng.hpp"

using namespace ilpnli;

namespace {

FactBase toy_background() {
    FactBase b;
    b.insert(parse_atom("parent(ann,amy)"));
    b.insert(parse_atom("parent(amy,amelia)"));
    b.insert(parse_atom("parent(amy,andy)"));
    b.insert(parse_atom("parent(linda,garin)"));
    return b;
}

// Union-find over constants: a fact belongs to the support iff it shares a
// component with the example's constants.
std::set<Atom> component_oracle(const FactBase& background, const Atom& example) {
    std::map<std::string, std::string> parent;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent[x] = x;
            return x;
        }
        if (it->second == x) return x;
        return parent[x] = find(it->second);
    };
    auto unite = [&](const std::string& a, const std::string& b) { parent[find(a)] = find(b); };
    for (const auto& f : background)
        for (size_t i = 1; i < f.args.size(); ++i) unite(f.args[0].name, f.args[i].name);
    std::set<std::string> roots;
    for (const auto& t : example.args) roots.insert(find(t.name));
    std::set<Atom> out;
    for (const auto& f : background)
        if (!f.args.empty() && roots.count(find(f.args[0].name))) out.insert(f);
    return out;
}

}  // namespace

TEST_CASE("premise_search reproduces the toy support set") {
    SupportSet s = premise_search(toy_background(), parse_atom("grandparent(ann,amelia)"));
    std::set<Atom> got(s.premises.begin(), s.premises.end());
    std::set<Atom> want = {parse_atom("parent(ann,amy)"), parse_atom("parent(amy,amelia)"),
                           parse_atom("parent(amy,andy)")};
    CHECK(got == want);
    CHECK(s.premises.size() == 3);
    CHECK(s.reached_terms.count("linda") == 0);
}

TEST_CASE("premise_search single connected fact") {
    FactBase b;
    b.insert(parse_atom("parent(a,b)"));
    SupportSet s = premise_search(b, parse_atom("parent2(a,b)"));
    REQUIRE(s.premises.size() == 1);
    CHECK(s.premises[0] == parse_atom("parent(a,b)"));
}

TEST_CASE("premise_search matches the connected-component oracle") {
    Rng rng(407);
    for (int trial = 0; trial < 100; ++trial) {
        FactBase b;
        size_t n_consts = 4 + rng.below(8);
        size_t n_facts = 3 + rng.below(12);
        for (size_t i = 0; i < n_facts; ++i) {
            Atom a;
            a.predicate = "e" + std::to_string(rng.below(3));
            a.args = {Term{"c" + std::to_string(rng.below(n_consts))},
                      Term{"c" + std::to_string(rng.below(n_consts))}};
            if (!b.contains(a)) b.insert(a);
        }
        Atom ex;
        ex.predicate = "q";
        ex.args = {Term{"c" + std::to_string(rng.below(n_consts))},
                   Term{"c" + std::to_string(rng.below(n_consts))}};
        SupportSet s = premise_search(b, ex);
        std::set<Atom> got(s.premises.begin(), s.premises.end());
        REQUIRE(got == component_oracle(b, ex));
        CHECK(got.size() == s.premises.size());  // no duplicates
    }
}

TEST_CASE("extract_rule finds the minimal chain instantiation") {
    SupportSet s = premise_search(toy_background(), parse_atom("grandparent(ann,amelia)"));
    auto rule = extract_rule(parse_atom("grandparent(ann,amelia)"), s, builtin_metarule("chain"));
    REQUIRE(rule.has_value());
    CHECK(rule->str() == "grandparent(ann,amelia) :- parent(ann,amy), parent(amy,amelia).");

    SupportSet s2 = premise_search(toy_background(), parse_atom("grandparent(amelia,ann)"));
    CHECK_FALSE(
        extract_rule(parse_atom("grandparent(amelia,ann)"), s2, builtin_metarule("chain"))
            .has_value());
}

TEST_CASE("extracted rules ground-verify through forward chaining") {
    Rng rng(408);
    auto meta = builtin_metarule("chain");
    for (int trial = 0; trial < 50; ++trial) {
        FactBase b;
        size_t n = 5 + rng.below(5);
        for (size_t i = 0; i + 1 < n; ++i) {
            Atom a = parse_atom("p(x" + std::to_string(i) + ",x" + std::to_string(i + 1) + ")");
            b.insert(a);
        }
        size_t start = rng.below(n - 2);
        Atom ex = parse_atom("g(x" + std::to_string(start) + ",x" + std::to_string(start + 2) + ")");
        SupportSet s = premise_search(b, ex);
        auto rule = extract_rule(ex, s, meta);
        REQUIRE(rule.has_value());
        FactBase body_facts;
        for (const auto& a : rule->body) body_facts.insert(a);
        FactBase closed = forward_chain(body_facts, {parse_clause("g(A,B) :- p(A,C), p(C,B).")});
        CHECK(closed.contains(ex));
    }
}

TEST_CASE("domain schemas expose rules and constraints") {
    for (const std::string d : {"kinship", "city", "ancestor"}) {
        CHECK_FALSE(domain_rules(d).empty());
        CHECK_FALSE(domain_constraints(d).empty());
        CHECK_FALSE(domain_target_predicate(d).empty());
    }
    CHECK(domain_fallback_metarule("ancestor") == "tailrec");
    CHECK(domain_fallback_metarule("kinship") == "chain");
    CHECK_THROWS_AS(domain_rules("volcano"), std::invalid_argument);
}

TEST_CASE("config invariants are enforced") {
    DomainConfig c;
    c.domain = "kinship";
    c.n_examples = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.n_examples = 4;
    c.neutral_fraction = 1.2;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.neutral_fraction = 0.2;
    c.domain = "weather";
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("generated labels pass the classify oracle") {
    for (const std::string d : {"kinship", "city", "ancestor"}) {
        DomainConfig c;
        c.domain = d;
        c.n_entities = 16;
        c.n_examples = 10;
        c.seed = 7;
        IlpDataset ds = generate_domain(c);
        CHECK(ds.positives.size() + ds.negatives.size() == 10);
        auto rules = domain_rules(d);
        auto constraints = domain_constraints(d);
        for (const auto& k : ds.positives)
            CHECK(classify(ds.background, rules, constraints, k) == Label::Entailment);
        for (const auto& k : ds.negatives)
            CHECK(classify(ds.background, rules, constraints, k) != Label::Entailment);
    }
}

TEST_CASE("kinship negatives with no neutral budget all contradict") {
    DomainConfig c;
    c.domain = "kinship";
    c.n_entities = 12;
    c.n_examples = 8;
    c.seed = 7;
    c.neutral_fraction = 0;
    IlpDataset ds = generate_domain(c);
    auto rules = domain_rules("kinship");
    auto constraints = domain_constraints("kinship");
    for (const auto& k : ds.negatives)
        CHECK(classify(ds.background, rules, constraints, k) == Label::Contradiction);
}

TEST_CASE("minimal kinship instance yields one two-hop example") {
    DomainConfig c;
    c.domain = "kinship";
    c.n_entities = 2;
    c.n_examples = 1;
    c.seed = 3;
    c.neutral_fraction = 0;
    c.contradiction_fraction = 0;
    IlpDataset ds = generate_domain(c);
    REQUIRE(ds.positives.size() == 1);
    CHECK(ds.positives[0].predicate == "grandparent");
    CHECK(classify(ds.background, domain_rules("kinship"), domain_constraints("kinship"),
                   ds.positives[0]) == Label::Entailment);
}

TEST_CASE("generation exhausts gracefully when the budget is too small") {
    DomainConfig c;
    c.domain = "kinship";
    c.n_entities = 3;
    c.n_examples = 500;
    c.seed = 1;
    CHECK_THROWS_AS(generate_domain(c), GenerationExhausted);
}

TEST_CASE("generate_domain is bit-deterministic") {
    DomainConfig c;
    c.domain = "city";
    c.n_entities = 20;
    c.n_examples = 12;
    c.seed = 99;
    IlpDataset a = generate_domain(c);
    IlpDataset b = generate_domain(c);
    CHECK(a.background == b.background);
    CHECK(a.positives == b.positives);
    CHECK(a.negatives == b.negatives);
    CHECK(dataset_manifest(a, c) == dataset_manifest(b, c));
    c.seed = 100;
    IlpDataset other = generate_domain(c);
    CHECK(dataset_manifest(a, c) != dataset_manifest(other, c));
}

TEST_CASE("generate_names yields distinct lowercase names") {
    auto names = generate_names(200, 5);
    std::set<std::string> uniq(names.begin(), names.end());
    CHECK(uniq.size() == 200);
    for (const auto& n : names) {
        CHECK_FALSE(n.empty());
        CHECK(Term{n}.is_constant());
    }
    CHECK(generate_names(200, 5) == names);
}

TEST_CASE("dataset files round-trip through disk") {
    DomainConfig c;
    c.domain = "ancestor";
    c.n_entities = 16;
    c.n_examples = 8;
    c.seed = 11;
    IlpDataset ds = generate_domain(c);
    auto dir = std::filesystem::temp_directory_path() / "ilpnli-test-dataset";
    std::filesystem::remove_all(dir);
    write_dataset(dir.string(), ds, c);
    IlpDataset back = read_dataset(dir.string(), "ancestor");
    CHECK(back.background == ds.background);
    CHECK(back.positives == ds.positives);
    CHECK(back.negatives == ds.negatives);
    std::filesystem::remove_all(dir);
}
