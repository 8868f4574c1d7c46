#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ilpnli {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line, int column)
        : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                             std::to_string(column) + ": " + msg),
          line(line),
          column(column) {}

    int line;
    int column;
};

class FixpointNotReached : public std::runtime_error {
public:
    explicit FixpointNotReached(size_t rounds)
        : std::runtime_error("forward chaining did not reach a fixpoint within " +
                             std::to_string(rounds) + " rounds"),
          rounds(rounds) {}

    size_t rounds;
};

// A term is a constant or a variable; which one is decidable from the first
// character (uppercase initial = variable).
struct Term {
    std::string name;

    bool is_variable() const { return !name.empty() && name[0] >= 'A' && name[0] <= 'Z'; }
    bool is_constant() const { return !is_variable(); }

    auto operator<=>(const Term&) const = default;
};

bool valid_term_name(const std::string& name);

struct Atom {
    std::string predicate;
    std::vector<Term> args;

    bool ground() const;
    std::string str() const;

    auto operator<=>(const Atom&) const = default;
};

// Definite clause: head :- body. An empty body makes it a fact.
struct HornClause {
    Atom head;
    std::vector<Atom> body;

    bool is_fact() const { return body.empty(); }
    bool range_restricted() const;
    std::string str() const;

    auto operator<=>(const HornClause&) const = default;
};

struct Substitution {
    std::map<std::string, Term> bindings;

    bool empty() const { return bindings.empty(); }
    const Term* lookup(const std::string& var) const;

    // Fails (returns false) on an inconsistent rebinding.
    bool bind(const std::string& var, const Term& value);

    std::string str() const;
};

Term apply_substitution(const Term& t, const Substitution& theta);
Atom apply_substitution(const Atom& a, const Substitution& theta);
HornClause apply_substitution(const HornClause& c, const Substitution& theta);

// Composition: apply(x, compose(t1, t2)) == apply(apply(x, t1), t2).
Substitution compose(const Substitution& first, const Substitution& second);

// One-way matching of a pattern against a ground atom.
std::optional<Substitution> match_atom(const Atom& pattern, const Atom& ground);

// Set of ground atoms.
struct FactBase {
    std::set<Atom> facts;

    FactBase() = default;
    explicit FactBase(std::vector<Atom> atoms);

    void insert(const Atom& a);  // throws std::invalid_argument on non-ground atoms
    bool contains(const Atom& a) const { return facts.count(a) > 0; }
    size_t size() const { return facts.size(); }
    bool empty() const { return facts.empty(); }

    auto begin() const { return facts.begin(); }
    auto end() const { return facts.end(); }

    auto operator<=>(const FactBase&) const = default;
};

enum class Label { Entailment, Contradiction, Neutral };

const char* label_name(Label l);
Label label_from_name(const std::string& name);
// Rank ordinal used for correlation: contradiction < neutral < entailment.
int label_ordinal(Label l);

enum class ConstraintKind { Antisymmetric, Irreflexive };

struct IntegrityConstraint {
    ConstraintKind kind;
    std::string predicate;
};

// Upper bound on the number of immediate-consequence rounds needed for
// closure: |Herbrand base| + 1 (saturating).
size_t herbrand_bound(const FactBase& facts, const std::vector<HornClause>& rules);

FactBase forward_chain(const FactBase& facts, const std::vector<HornClause>& rules,
                       size_t max_rounds);
FactBase forward_chain(const FactBase& facts, const std::vector<HornClause>& rules);

Label classify(const FactBase& facts, const std::vector<HornClause>& rules,
               const std::vector<IntegrityConstraint>& constraints, const Atom& query);

struct Program {
    FactBase facts;
    std::vector<HornClause> rules;
    // Raw '#' directive lines (metarule definitions etc.), with line numbers.
    std::vector<std::pair<int, std::string>> directives;
};

Program parse_program(const std::string& text);
Atom parse_atom(const std::string& text);
HornClause parse_clause(const std::string& text);

// Canonical text form: sorted facts, rules in order, one clause per line.
// A fixpoint of parse-then-serialize.
std::string serialize(const Program& program);

std::string atoms_str(const std::vector<Atom>& atoms);

}  // namespace ilpnli
