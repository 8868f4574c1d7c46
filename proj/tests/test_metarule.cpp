#include "doctest.h"

#include "ilpnli/metarule.hpp"
#include "ilpnli/rng.hpp"

using namespace ilpnli;

namespace {

HornClause gp_rule() { return parse_clause("grandparent(A,B) :- parent(A,C), parent(C,B)."); }
HornClause city_rule() { return parse_clause("legalCity(A,B) :- city(A,C), city(C,B)."); }
// Head arguments permuted relative to the chain pattern.
HornClause head_permuted_rule() {
    return parse_clause("grandparent(C,B) :- parent(A,C), parent(C,B).");
}

HornClause random_chain_instance(Rng& rng, const std::string& prefix) {
    std::vector<std::string> preds;
    for (int i = 0; i < 3; ++i) preds.push_back(prefix + std::to_string(rng.below(4)));
    HornClause r;
    r.head = parse_atom(preds[0] + "(A,B)");
    r.body = {parse_atom(preds[1] + "(A,C)"), parse_atom(preds[2] + "(C,B)")};
    if (rng.chance(0.5)) std::swap(r.body[0], r.body[1]);
    return r;
}

}  // namespace

TEST_CASE("builtin metarules validate and have the documented shapes") {
    auto metas = builtin_metarules();
    REQUIRE(metas.size() == 3);
    for (const auto& m : metas) CHECK_NOTHROW(m.validate());
    CHECK(builtin_metarule("chain").str() == "chain: P(A,B) :- Q(A,C), R(C,B).");
    CHECK(builtin_metarule("chain_hp").str() == "chain_hp: P(C,B) :- Q(A,C), R(C,B).");
    CHECK(builtin_metarule("tailrec").str() == "tailrec: P(A,B) :- Q(A,C), P(C,B).");
    CHECK_THROWS_AS(builtin_metarule("nope"), std::invalid_argument);
}

TEST_CASE("match_metarule recovers the documented chain substitution") {
    auto m = match_metarule(gp_rule(), builtin_metarule("chain"));
    REQUIRE(m.has_value());
    CHECK(m->so_bindings.at("P") == "grandparent");
    CHECK(m->so_bindings.at("Q") == "parent");
    CHECK(m->so_bindings.at("R") == "parent");
}

TEST_CASE("match_metarule treats the body as a multiset") {
    HornClause swapped = parse_clause("grandparent(A,B) :- parent(C,B), parent(A,C).");
    CHECK(match_metarule(swapped, builtin_metarule("chain")).has_value());
    HornClause tailrec = parse_clause("anc(A,B) :- par(A,C), anc(C,B).");
    CHECK(match_metarule(tailrec, builtin_metarule("tailrec")).has_value());
    CHECK_FALSE(match_metarule(tailrec, builtin_metarule("chain_hp")).has_value());
}

TEST_CASE("instantiate round-trips a match") {
    auto meta = builtin_metarule("chain");
    auto m = match_metarule(gp_rule(), meta);
    REQUIRE(m.has_value());
    HornClause back = instantiate(meta, *m);
    CHECK(match_metarule(back, meta).has_value());
    CHECK(back.head.predicate == "grandparent");
}

TEST_CASE("kinship and city chain rules are isomorphic") {
    auto metas = builtin_metarules();
    CHECK(isomorphic(gp_rule(), city_rule(), metas));
    CHECK(isomorphic(city_rule(), gp_rule(), metas));
}

TEST_CASE("head-permuted rule is not isomorphic to the chain rule") {
    auto metas = builtin_metarules();
    CHECK_FALSE(isomorphic(gp_rule(), head_permuted_rule(), metas));
    CHECK_FALSE(isomorphic(head_permuted_rule(), gp_rule(), metas));
}

TEST_CASE("ground chain instances compare by structure not by names") {
    auto metas = builtin_metarules();
    HornClause a = parse_clause("gp(ann,rita) :- p(ann,amy), p(amy,rita).");
    HornClause b = parse_clause("legalCity(delwino,borovan) :- city(delwino,ebadong), city(ebadong,borovan).");
    CHECK(isomorphic(a, b, metas));
    // Head arguments swapped: same atoms, different induced correspondence.
    HornClause c = parse_clause("gp(rita,ann) :- p(ann,amy), p(amy,rita).");
    CHECK_FALSE(isomorphic(a, c, metas));
    // Collapsed constants break bijectivity.
    HornClause d = parse_clause("gp(ann,ann) :- p(ann,ann), p(ann,ann).");
    CHECK_FALSE(isomorphic(a, d, metas));
}

TEST_CASE("isomorphic is an equivalence relation on chain instances") {
    auto metas = builtin_metarules();
    Rng rng(406);
    std::vector<HornClause> rules;
    for (int i = 0; i < 12; ++i) rules.push_back(random_chain_instance(rng, i % 2 ? "u" : "v"));
    for (const auto& r : rules) CHECK(isomorphic(r, r, metas));
    for (size_t i = 0; i < rules.size(); ++i)
        for (size_t j = 0; j < rules.size(); ++j)
            CHECK(isomorphic(rules[i], rules[j], metas) == isomorphic(rules[j], rules[i], metas));
    for (size_t i = 0; i < rules.size(); ++i)
        for (size_t j = 0; j < rules.size(); ++j)
            for (size_t k = 0; k < rules.size(); ++k)
                if (isomorphic(rules[i], rules[j], metas) && isomorphic(rules[j], rules[k], metas))
                    CHECK(isomorphic(rules[i], rules[k], metas));
}

TEST_CASE("metarule directives parse and extend the builtin set") {
    Metarule m = parse_metarule_directive("#metarule inverse: P(B,A) :- Q(A,B).");
    CHECK(m.id == "inverse");
    CHECK(m.body.size() == 1);
    CHECK_NOTHROW(m.validate());
    CHECK_THROWS_AS(parse_metarule_directive("#metarule bad P(A,B) :- Q(A,B)."), std::exception);

    Program prog = parse_program("#metarule inverse: P(B,A) :- Q(A,B).\np(a,b).\n");
    auto metas = metarules_for(prog);
    CHECK(metas.size() == 4);
}

TEST_CASE("malformed metarule templates are rejected") {
    Metarule m;
    m.id = "bad";
    m.head = parse_atom("P(A,b)");  // constant argument
    m.body = {parse_atom("Q(A,B)")};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);

    Metarule arity;
    arity.id = "bad2";
    arity.head = Atom{"P", {Term{"A"}, Term{"B"}}};
    arity.body = {Atom{"P", {Term{"A"}}}};  // P used at two arities
    CHECK_THROWS_AS(arity.validate(), std::invalid_argument);
}
