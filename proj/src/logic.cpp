#include "ilpnli/logic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ilpnli {

bool valid_term_name(const std::string& name) {
    if (name.empty())
        return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_';
        if (!ok)
            return false;
    }
    return true;
}

bool Atom::ground() const {
    for (const Term& t : args)
        if (t.is_variable())
            return false;
    return true;
}

std::string Atom::str() const {
    std::string out = predicate;
    out += '(';
    for (size_t i = 0; i < args.size(); ++i) {
        if (i)
            out += ',';
        out += args[i].name;
    }
    out += ')';
    return out;
}

bool HornClause::range_restricted() const {
    if (body.empty())
        return true;
    std::set<std::string> body_vars;
    for (const Atom& b : body)
        for (const Term& t : b.args)
            if (t.is_variable())
                body_vars.insert(t.name);
    for (const Term& t : head.args)
        if (t.is_variable() && !body_vars.count(t.name))
            return false;
    return true;
}

std::string HornClause::str() const {
    std::string out = head.str();
    if (!body.empty()) {
        out += " :- ";
        for (size_t i = 0; i < body.size(); ++i) {
            if (i)
                out += ", ";
            out += body[i].str();
        }
    }
    out += '.';
    return out;
}

const Term* Substitution::lookup(const std::string& var) const {
    auto it = bindings.find(var);
    return it == bindings.end() ? nullptr : &it->second;
}

bool Substitution::bind(const std::string& var, const Term& value) {
    auto [it, inserted] = bindings.emplace(var, value);
    return inserted || it->second == value;
}

std::string Substitution::str() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [var, value] : bindings) {
        if (!first)
            out += ", ";
        first = false;
        out += var + "/" + value.name;
    }
    out += "}";
    return out;
}

Term apply_substitution(const Term& t, const Substitution& theta) {
    if (t.is_variable())
        if (const Term* image = theta.lookup(t.name))
            return *image;
    return t;
}

Atom apply_substitution(const Atom& a, const Substitution& theta) {
    Atom out{a.predicate, {}};
    out.args.reserve(a.args.size());
    for (const Term& t : a.args)
        out.args.push_back(apply_substitution(t, theta));
    return out;
}

HornClause apply_substitution(const HornClause& c, const Substitution& theta) {
    HornClause out;
    out.head = apply_substitution(c.head, theta);
    out.body.reserve(c.body.size());
    for (const Atom& b : c.body)
        out.body.push_back(apply_substitution(b, theta));
    return out;
}

Substitution compose(const Substitution& first, const Substitution& second) {
    Substitution out;
    for (const auto& [var, value] : first.bindings)
        out.bindings.emplace(var, apply_substitution(value, second));
    for (const auto& [var, value] : second.bindings)
        out.bindings.emplace(var, value);  // no-op where first already binds var
    return out;
}

std::optional<Substitution> match_atom(const Atom& pattern, const Atom& ground) {
    if (pattern.predicate != ground.predicate || pattern.args.size() != ground.args.size())
        return std::nullopt;
    Substitution theta;
    for (size_t i = 0; i < pattern.args.size(); ++i) {
        const Term& p = pattern.args[i];
        const Term& g = ground.args[i];
        if (p.is_variable()) {
            if (!theta.bind(p.name, g))
                return std::nullopt;
        } else if (p != g) {
            return std::nullopt;
        }
    }
    return theta;
}

FactBase::FactBase(std::vector<Atom> atoms) {
    for (Atom& a : atoms)
        insert(a);
}

void FactBase::insert(const Atom& a) {
    if (!a.ground())
        throw std::invalid_argument("non-ground atom in fact base: " + a.str());
    facts.insert(a);
}

const char* label_name(Label l) {
    switch (l) {
    case Label::Entailment: return "entailment";
    case Label::Contradiction: return "contradiction";
    case Label::Neutral: return "neutral";
    }
    return "?";
}

Label label_from_name(const std::string& name) {
    if (name == "entailment")
        return Label::Entailment;
    if (name == "contradiction")
        return Label::Contradiction;
    if (name == "neutral")
        return Label::Neutral;
    throw std::invalid_argument("unknown label: " + name);
}

int label_ordinal(Label l) {
    switch (l) {
    case Label::Contradiction: return 0;
    case Label::Neutral: return 1;
    case Label::Entailment: return 2;
    }
    return -1;
}

size_t herbrand_bound(const FactBase& facts, const std::vector<HornClause>& rules) {
    std::set<std::string> constants;
    std::map<std::string, size_t> arities;
    auto visit = [&](const Atom& a) {
        arities.emplace(a.predicate, a.args.size());
        for (const Term& t : a.args)
            if (t.is_constant())
                constants.insert(t.name);
    };
    for (const Atom& f : facts)
        visit(f);
    for (const HornClause& r : rules) {
        visit(r.head);
        for (const Atom& b : r.body)
            visit(b);
    }
    const double cap = 1e7;
    double total = 0;
    for (const auto& [pred, arity] : arities) {
        total += std::pow(static_cast<double>(constants.size()), static_cast<double>(arity));
        if (total > cap)
            return static_cast<size_t>(cap);
    }
    return static_cast<size_t>(total) + 1;
}

namespace {

// Enumerates ground instantiations of `body[i..]` against `facts`,
// calling `emit` with the completed substitution.
template <class Fn>
void join_body(const std::vector<Atom>& body, size_t i, const FactBase& facts,
               Substitution& theta, Fn&& emit) {
    if (i == body.size()) {
        emit(theta);
        return;
    }
    Atom pattern = apply_substitution(body[i], theta);
    for (const Atom& fact : facts) {
        auto step = match_atom(pattern, fact);
        if (!step)
            continue;
        Substitution extended = theta;
        bool ok = true;
        for (const auto& [var, value] : step->bindings)
            ok = ok && extended.bind(var, value);
        if (ok)
            join_body(body, i + 1, facts, extended, emit);
    }
}

}  // namespace

FactBase forward_chain(const FactBase& facts, const std::vector<HornClause>& rules,
                       size_t max_rounds) {
    if (max_rounds < 1)
        throw std::invalid_argument("max_rounds must be >= 1");
    for (const HornClause& r : rules)
        if (!r.range_restricted())
            throw std::invalid_argument("rule is not range-restricted: " + r.str());

    FactBase current = facts;
    for (size_t round = 0; round < max_rounds; ++round) {
        std::vector<Atom> derived;
        for (const HornClause& rule : rules) {
            if (rule.is_fact()) {
                if (!current.contains(rule.head))
                    derived.push_back(rule.head);
                continue;
            }
            Substitution theta;
            join_body(rule.body, 0, current, theta, [&](const Substitution& full) {
                Atom head = apply_substitution(rule.head, full);
                if (!current.contains(head))
                    derived.push_back(head);
            });
        }
        if (derived.empty())
            return current;
        for (const Atom& a : derived)
            current.insert(a);
    }
    // One more sweep to distinguish "closed exactly at the bound" from overflow.
    for (const HornClause& rule : rules) {
        bool grew = false;
        if (rule.is_fact()) {
            grew = !current.contains(rule.head);
        } else {
            Substitution theta;
            join_body(rule.body, 0, current, theta, [&](const Substitution& full) {
                if (!current.contains(apply_substitution(rule.head, full)))
                    grew = true;
            });
        }
        if (grew)
            throw FixpointNotReached(max_rounds);
    }
    return current;
}

FactBase forward_chain(const FactBase& facts, const std::vector<HornClause>& rules) {
    return forward_chain(facts, rules, herbrand_bound(facts, rules));
}

Label classify(const FactBase& facts, const std::vector<HornClause>& rules,
               const std::vector<IntegrityConstraint>& constraints, const Atom& query) {
    if (!query.ground())
        throw std::invalid_argument("classify requires a ground query: " + query.str());
    FactBase model = forward_chain(facts, rules);
    if (model.contains(query))
        return Label::Entailment;
    for (const IntegrityConstraint& c : constraints) {
        if (c.predicate != query.predicate || query.args.size() != 2)
            continue;
        if (c.kind == ConstraintKind::Irreflexive && query.args[0] == query.args[1])
            return Label::Contradiction;
        if (c.kind == ConstraintKind::Antisymmetric && query.args[0] != query.args[1]) {
            Atom reversed{query.predicate, {query.args[1], query.args[0]}};
            if (model.contains(reversed))
                return Label::Contradiction;
        }
    }
    return Label::Neutral;
}

namespace {

struct Cursor {
    const std::string& text;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    char advance() {
        char c = text[pos++];
        if (c == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        return c;
    }

    void skip_space_and_comments() {
        while (!done()) {
            char c = peek();
            if (c == '%') {
                while (!done() && peek() != '\n')
                    advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                return;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }

    std::string identifier() {
        if (done())
            fail("expected identifier, got end of input");
        std::string name;
        while (!done()) {
            char c = peek();
            bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_';
            if (!ok)
                break;
            name += advance();
        }
        if (name.empty())
            fail(std::string("expected identifier, got '") + peek() + "'");
        return name;
    }

    void expect(char c) {
        skip_space_and_comments();
        if (done())
            fail(std::string("expected '") + c + "', got end of input");
        if (peek() != c)
            fail(std::string("expected '") + c + "', got '" + peek() + "'");
        advance();
    }
};

Atom parse_atom_at(Cursor& cur) {
    cur.skip_space_and_comments();
    Atom atom;
    atom.predicate = cur.identifier();
    cur.expect('(');
    while (true) {
        cur.skip_space_and_comments();
        atom.args.push_back(Term{cur.identifier()});
        cur.skip_space_and_comments();
        if (cur.done())
            cur.fail("unterminated atom");
        if (cur.peek() == ',') {
            cur.advance();
            continue;
        }
        break;
    }
    cur.expect(')');
    if (atom.args.empty())
        cur.fail("atom needs at least one argument");
    return atom;
}

HornClause parse_clause_at(Cursor& cur) {
    HornClause clause;
    clause.head = parse_atom_at(cur);
    cur.skip_space_and_comments();
    if (!cur.done() && cur.peek() == ':') {
        cur.advance();
        if (cur.done() || cur.peek() != '-')
            cur.fail("expected ':-'");
        cur.advance();
        while (true) {
            clause.body.push_back(parse_atom_at(cur));
            cur.skip_space_and_comments();
            if (!cur.done() && cur.peek() == ',') {
                cur.advance();
                continue;
            }
            break;
        }
    }
    cur.expect('.');
    return clause;
}

}  // namespace

Atom parse_atom(const std::string& text) {
    Cursor cur{text};
    Atom atom = parse_atom_at(cur);
    cur.skip_space_and_comments();
    if (!cur.done())
        cur.fail("trailing input after atom");
    return atom;
}

HornClause parse_clause(const std::string& text) {
    Cursor cur{text};
    HornClause clause = parse_clause_at(cur);
    cur.skip_space_and_comments();
    if (!cur.done())
        cur.fail("trailing input after clause");
    return clause;
}

Program parse_program(const std::string& text) {
    Program program;
    Cursor cur{text};
    std::map<std::string, size_t> arities;
    auto check_arity = [&](const Atom& a, int line, int col) {
        auto [it, inserted] = arities.emplace(a.predicate, a.args.size());
        if (!inserted && it->second != a.args.size())
            throw ParseError("predicate '" + a.predicate + "' used with arity " +
                                 std::to_string(a.args.size()) + " but earlier with arity " +
                                 std::to_string(it->second),
                             line, col);
    };
    while (true) {
        cur.skip_space_and_comments();
        if (cur.done())
            break;
        if (cur.peek() == '#') {
            int line = cur.line;
            std::string directive;
            while (!cur.done() && cur.peek() != '\n')
                directive += cur.advance();
            program.directives.emplace_back(line, directive);
            continue;
        }
        int line = cur.line, col = cur.col;
        HornClause clause = parse_clause_at(cur);
        check_arity(clause.head, line, col);
        for (const Atom& b : clause.body)
            check_arity(b, line, col);
        if (clause.is_fact()) {
            if (!clause.head.ground())
                throw ParseError("fact must be ground: " + clause.head.str(), line, col);
            program.facts.insert(clause.head);
        } else {
            if (!clause.range_restricted())
                throw ParseError("rule is not range-restricted: " + clause.str(), line, col);
            program.rules.push_back(clause);
        }
    }
    return program;
}

std::string serialize(const Program& program) {
    std::string out;
    for (const auto& [line, directive] : program.directives) {
        out += directive;
        out += '\n';
    }
    for (const Atom& fact : program.facts) {
        out += fact.str();
        out += ".\n";
    }
    for (const HornClause& rule : program.rules) {
        out += rule.str();
        out += '\n';
    }
    return out;
}

std::string atoms_str(const std::vector<Atom>& atoms) {
    std::string out;
    for (size_t i = 0; i < atoms.size(); ++i) {
        if (i)
            out += ", ";
        out += atoms[i].str();
    }
    return out;
}

}  // namespace ilpnli
