#include "doctest.h"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ilpnli/render.hpp"
#include "ilpnli/rng.hpp"

using namespace ilpnli;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(FIXTURE_DIR) + "/" + name);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void collect_atoms(const FormulaPtr& f, std::set<std::string>& atoms) {
    if (f->kind == FormulaKind::Atom) {
        atoms.insert(f->atom.str());
        return;
    }
    for (const auto& c : f->children) collect_atoms(c, atoms);
}

bool eval_formula(const FormulaPtr& f, const std::map<std::string, bool>& assignment) {
    switch (f->kind) {
    case FormulaKind::Atom: return assignment.at(f->atom.str());
    case FormulaKind::Not: return !eval_formula(f->children[0], assignment);
    case FormulaKind::And:
        for (const auto& c : f->children)
            if (!eval_formula(c, assignment)) return false;
        return true;
    case FormulaKind::Or:
        for (const auto& c : f->children)
            if (eval_formula(c, assignment)) return true;
        return false;
    case FormulaKind::Implies:
        return !eval_formula(f->children[0], assignment) || eval_formula(f->children[1], assignment);
    }
    return false;
}

// Exhaustive truth-table equivalence over the union of both formulas' atoms.
bool equivalent(const FormulaPtr& a, const FormulaPtr& b) {
    std::set<std::string> atom_set;
    collect_atoms(a, atom_set);
    collect_atoms(b, atom_set);
    std::vector<std::string> atoms(atom_set.begin(), atom_set.end());
    REQUIRE(atoms.size() <= 16);
    for (uint64_t mask = 0; mask < (1ull << atoms.size()); ++mask) {
        std::map<std::string, bool> assignment;
        for (size_t i = 0; i < atoms.size(); ++i) assignment[atoms[i]] = mask & (1ull << i);
        if (eval_formula(a, assignment) != eval_formula(b, assignment)) return false;
    }
    return true;
}

FormulaPtr random_formula(Rng& rng, int depth, int& atom_budget) {
    if (depth <= 0 || atom_budget <= 1 || rng.chance(0.35)) {
        --atom_budget;
        return f_atom(parse_atom("a" + std::to_string(rng.below(6)) + "(x,y)"));
    }
    switch (rng.below(4)) {
    case 0: return f_not(random_formula(rng, depth - 1, atom_budget));
    case 1: {
        std::vector<FormulaPtr> kids;
        size_t n = 2 + rng.below(2);
        for (size_t i = 0; i < n; ++i) kids.push_back(random_formula(rng, depth - 1, atom_budget));
        return f_and(std::move(kids));
    }
    case 2: {
        std::vector<FormulaPtr> kids;
        size_t n = 2 + rng.below(2);
        for (size_t i = 0; i < n; ++i) kids.push_back(random_formula(rng, depth - 1, atom_budget));
        return f_or(std::move(kids));
    }
    default:
        return f_implies(random_formula(rng, depth - 1, atom_budget),
                         random_formula(rng, depth - 1, atom_budget));
    }
}

NliExample city_example() {
    NliExample ex;
    ex.id = "city-0";
    ex.domain = "city";
    ex.premise_atoms = {parse_atom("city(delwino,ebadong)"), parse_atom("city(ebadong,borovan)")};
    ex.hypothesis_atom = parse_atom("legalCity(delwino,borovan)");
    ex.label = Label::Entailment;
    ex.metarule_id = "chain";
    refresh_logic_text(ex);
    return ex;
}

}  // namespace

TEST_CASE("formula constructors enforce arity and flatten collapses nesting") {
    auto a = f_atom(parse_atom("p(x,y)"));
    auto b = f_atom(parse_atom("q(x,y)"));
    CHECK_THROWS_AS(f_and({a}), std::invalid_argument);
    CHECK_THROWS_AS(f_or({}), std::invalid_argument);
    auto nested = f_and({f_and({a, b}), a});
    auto flat = flatten(nested);
    CHECK(flat->children.size() == 3);
    CHECK(formula_str(flat) == "(p(x,y) & q(x,y) & p(x,y))");
}

TEST_CASE("every rewrite rule preserves the truth table") {
    Rng rng(409);
    for (int trial = 0; trial < 1000; ++trial) {
        int budget = 10;
        FormulaPtr f = random_formula(rng, 4, budget);
        for (RewriteRule rule : {RewriteRule::ImplicationElim, RewriteRule::CommuteConjunction,
                                 RewriteRule::DoubleNegation}) {
            FormulaPtr g = rewrite_equivalent(f, rule, rng.next());
            REQUIRE(equivalent(f, g));
        }
    }
}

TEST_CASE("implication elimination yields the documented three-disjunct clause") {
    auto body = f_and({f_atom(parse_atom("par(A,C)")), f_atom(parse_atom("par(C,B)"))});
    auto impl = f_implies(body, f_atom(parse_atom("gp(A,B)")));
    auto want = f_or({f_not(f_atom(parse_atom("par(A,C)"))), f_not(f_atom(parse_atom("par(C,B)"))),
                      f_atom(parse_atom("gp(A,B)"))});
    auto got = rewrite_equivalent(impl, RewriteRule::ImplicationElim, 0);
    CHECK(formula_equal(got, want));
    CHECK(formula_str(got) == "(~par(A,C) | ~par(C,B) | gp(A,B))");
}

TEST_CASE("double negation cancels everywhere") {
    auto a = f_atom(parse_atom("p(x,y)"));
    auto f = f_and({f_not(f_not(a)), f_not(f_not(f_not(a)))});
    auto g = rewrite_equivalent(f, RewriteRule::DoubleNegation, 0);
    CHECK(formula_str(g) == "(p(x,y) & ~p(x,y))");
}

TEST_CASE("commute conjunction permutes children of one And node") {
    auto f = f_and({f_atom(parse_atom("a(x,y)")), f_atom(parse_atom("b(x,y)")),
                    f_atom(parse_atom("c(x,y)"))});
    bool moved = false;
    for (uint64_t s = 0; s < 32 && !moved; ++s)
        moved = !formula_equal(rewrite_equivalent(f, RewriteRule::CommuteConjunction, s), f);
    CHECK(moved);
}

TEST_CASE("builtin template sets validate") {
    for (const std::string d : {"kinship", "city", "ancestor"}) {
        TemplateSet ts = builtin_templates(d);
        CHECK_NOTHROW(ts.validate());
        for (const auto& [pred, variants] : ts.templates) CHECK(variants.size() >= 2);
    }
    CHECK_THROWS_AS(builtin_templates("volcano"), std::invalid_argument);
}

TEST_CASE("template validation rejects malformed slots") {
    TemplateSet ts = builtin_templates("city");
    ts.templates["city"] = {"no slots here", "also none"};
    CHECK_THROWS_AS(ts.validate(), std::invalid_argument);
    ts = builtin_templates("city");
    ts.templates["city"] = {"{0} and {0} twice to {1}", "ok {0} to {1}"};
    CHECK_THROWS_AS(ts.validate(), std::invalid_argument);
}

TEST_CASE("display names capitalize unless overridden") {
    TemplateSet ts = builtin_templates("city");
    CHECK(display_name(ts, "delwino") == "Delwino");
    ts.display_names["nyc"] = "New York City";
    CHECK(display_name(ts, "nyc") == "New York City");
}

TEST_CASE("city linearization matches the frozen surface strings") {
    TemplateSet ts = builtin_templates("city");
    NliExample ex = city_example();
    auto premise = f_and({f_atom(ex.premise_atoms[0]), f_atom(ex.premise_atoms[1])});
    CHECK(linearize(premise, ts, 13) == read_fixture("city_premise.txt"));
    CHECK(linearize_hypothesis(ex.hypothesis_atom, ts, 2) == read_fixture("city_hypothesis.txt"));
}

TEST_CASE("missing templates and names raise typed errors") {
    TemplateSet ts = builtin_templates("city");
    CHECK_THROWS_AS(linearize(f_atom(parse_atom("teleport(a,b)")), ts, 0), MissingTemplate);
}

TEST_CASE("render_example keeps atoms, label, and determinism") {
    TemplateSet ts = builtin_templates("city");
    NliExample ex = city_example();
    NliExample nl = render_example(ex, ts, 0.5, 42);
    CHECK(nl.id == "city-0-nl");
    CHECK(nl.form == "nl");
    CHECK(nl.label == ex.label);
    CHECK(nl.premise_atoms == ex.premise_atoms);
    CHECK(nl.hypothesis_atom == ex.hypothesis_atom);
    CHECK(nl.premise_text != ex.premise_text);
    CHECK(render_example(ex, ts, 0.5, 42).premise_text == nl.premise_text);
    CHECK_THROWS_AS(render_example(nl, ts, 0.5, 42), RenderError);  // already nl form
}

TEST_CASE("rendered positives extend the triplet index idempotently") {
    TemplateSet ts = builtin_templates("city");
    NliExample ex = city_example();
    NliExample nl = render_example(ex, ts, 0.5, 42);
    std::vector<Triplet> triplets = {{"anchor-7", "city-0", "anchor-7-neg",
                                      NegativeMode::PermuteBody}};
    auto extended = with_rendered_positives(triplets, {ex, nl});
    REQUIRE(extended.size() == 2);
    CHECK(extended[0].positive_id == "city-0");
    CHECK(extended[1].positive_id == "city-0-nl");
    CHECK(extended[1].anchor_id == "anchor-7");
    CHECK(extended[1].negative_id == "anchor-7-neg");
    // Running it again neither duplicates nor drops anything.
    auto again = with_rendered_positives(extended, {ex, nl});
    CHECK(again.size() == extended.size());
    // No rendering in the corpus: triplets pass through untouched.
    CHECK(with_rendered_positives(triplets, {ex}).size() == 1);
}

TEST_CASE("template sets round-trip through their text format") {
    TemplateSet ts = builtin_templates("kinship");
    std::string text = serialize_template_set(ts);
    TemplateSet back = parse_template_set(text);
    CHECK(serialize_template_set(back) == text);
    CHECK(back.templates == ts.templates);
    CHECK(back.and_connectives == ts.and_connectives);
}
