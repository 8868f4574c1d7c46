#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ilpnli/logic.hpp"

namespace ilpnli {

// Second-order clause template. Pattern atoms reuse Atom with the predicate
// field holding a second-order variable (uppercase initial) and the argument
// terms holding first-order variables.
struct Metarule {
    std::string id;
    Atom head;
    std::vector<Atom> body;

    std::set<std::string> so_vars() const;
    std::set<std::string> fo_vars() const;

    // Throws std::invalid_argument when the template is malformed
    // (inconsistent second-order arity, non-variable arguments, ...).
    void validate() const;

    std::string str() const;
};

struct SecondOrderSubstitution {
    std::map<std::string, std::string> so_bindings;  // second-order var -> predicate
    Substitution fo_bindings;

    std::string str() const;
};

// Extends `subst` so that `pattern` (a metarule pattern atom) maps onto
// `atom`. Returns false and leaves `subst` partially updated on conflict;
// callers branch on a copy.
bool match_pattern_atom(const Atom& pattern, const Atom& atom, SecondOrderSubstitution& subst);

// Matches a first-order rule against a metarule, treating the rule body as an
// unordered multiset. Returns the first binding in a deterministic order.
std::optional<SecondOrderSubstitution> match_metarule(const HornClause& rule,
                                                      const Metarule& meta);

// All distinct bindings (needed for the bijectivity test below).
std::vector<SecondOrderSubstitution> all_metarule_matches(const HornClause& rule,
                                                          const Metarule& meta);

// True iff some metarule matches both rules with an induced first-order
// correspondence that is a bijection between the two rules' term sets.
bool isomorphic(const HornClause& rule1, const HornClause& rule2,
                const std::vector<Metarule>& metarules);

// chain:    P(A,B) :- Q(A,C), R(C,B)
// chain_hp: P(C,B) :- Q(A,C), R(C,B)   (head-permuted chain)
// tailrec:  P(A,B) :- Q(A,C), P(C,B)
std::vector<Metarule> builtin_metarules();

const Metarule& builtin_metarule(const std::string& id);

// Applies the bindings back to the template (round-trip check support).
HornClause instantiate(const Metarule& meta, const SecondOrderSubstitution& subst);

// Parses "#metarule <id>: <head> :- <body>." directive lines.
Metarule parse_metarule_directive(const std::string& line);

// Built-ins plus any #metarule directives carried by the program.
std::vector<Metarule> metarules_for(const Program& program);

}  // namespace ilpnli
