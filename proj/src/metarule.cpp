#include "ilpnli/metarule.hpp"

#include <algorithm>
#include <numeric>

namespace ilpnli {

namespace {

bool upper_initial(const std::string& s) {
    return !s.empty() && s[0] >= 'A' && s[0] <= 'Z';
}

}  // namespace

std::set<std::string> Metarule::so_vars() const {
    std::set<std::string> out{head.predicate};
    for (const Atom& b : body)
        out.insert(b.predicate);
    return out;
}

std::set<std::string> Metarule::fo_vars() const {
    std::set<std::string> out;
    for (const Term& t : head.args)
        out.insert(t.name);
    for (const Atom& b : body)
        for (const Term& t : b.args)
            out.insert(t.name);
    return out;
}

void Metarule::validate() const {
    if (id.empty())
        throw std::invalid_argument("metarule needs an id");
    if (body.empty())
        throw std::invalid_argument("metarule '" + id + "' needs a non-empty body");
    std::map<std::string, size_t> so_arity;
    auto visit = [&](const Atom& a) {
        if (!upper_initial(a.predicate))
            throw std::invalid_argument("metarule '" + id + "': predicate position '" +
                                        a.predicate + "' must be a second-order variable");
        auto [it, inserted] = so_arity.emplace(a.predicate, a.args.size());
        if (!inserted && it->second != a.args.size())
            throw std::invalid_argument("metarule '" + id + "': second-order variable '" +
                                        a.predicate + "' used with two arities");
        if (a.args.empty())
            throw std::invalid_argument("metarule '" + id + "': zero-arity pattern atom");
        for (const Term& t : a.args)
            if (!t.is_variable())
                throw std::invalid_argument("metarule '" + id + "': argument '" + t.name +
                                            "' must be a first-order variable");
    };
    visit(head);
    for (const Atom& b : body)
        visit(b);
}

std::string Metarule::str() const {
    HornClause as_clause{head, body};
    return id + ": " + as_clause.str();
}

std::string SecondOrderSubstitution::str() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [v, p] : so_bindings) {
        if (!first)
            out += ", ";
        first = false;
        out += v + "/" + p;
    }
    out += "} ";
    out += fo_bindings.str();
    return out;
}

bool match_pattern_atom(const Atom& pattern, const Atom& atom, SecondOrderSubstitution& subst) {
    if (pattern.args.size() != atom.args.size())
        return false;
    auto [it, inserted] = subst.so_bindings.emplace(pattern.predicate, atom.predicate);
    if (!inserted && it->second != atom.predicate)
        return false;
    for (size_t i = 0; i < pattern.args.size(); ++i)
        if (!subst.fo_bindings.bind(pattern.args[i].name, atom.args[i]))
            return false;
    return true;
}

std::vector<SecondOrderSubstitution> all_metarule_matches(const HornClause& rule,
                                                          const Metarule& meta) {
    std::vector<SecondOrderSubstitution> out;
    if (rule.body.empty() || rule.body.size() != meta.body.size())
        return out;

    SecondOrderSubstitution base;
    if (!match_pattern_atom(meta.head, rule.head, base))
        return out;

    // Conjunction commutativity: try every alignment of body atoms.
    std::vector<size_t> perm(meta.body.size());
    std::iota(perm.begin(), perm.end(), 0);
    do {
        SecondOrderSubstitution subst = base;
        bool ok = true;
        for (size_t i = 0; ok && i < meta.body.size(); ++i)
            ok = match_pattern_atom(meta.body[i], rule.body[perm[i]], subst);
        if (ok && std::find_if(out.begin(), out.end(), [&](const SecondOrderSubstitution& s) {
                return s.so_bindings == subst.so_bindings &&
                       s.fo_bindings.bindings == subst.fo_bindings.bindings;
            }) == out.end())
            out.push_back(std::move(subst));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

std::optional<SecondOrderSubstitution> match_metarule(const HornClause& rule,
                                                      const Metarule& meta) {
    auto matches = all_metarule_matches(rule, meta);
    if (matches.empty())
        return std::nullopt;
    return matches.front();
}

bool isomorphic(const HornClause& rule1, const HornClause& rule2,
                const std::vector<Metarule>& metarules) {
    for (const Metarule& meta : metarules) {
        auto ms1 = all_metarule_matches(rule1, meta);
        if (ms1.empty())
            continue;
        auto ms2 = all_metarule_matches(rule2, meta);
        for (const auto& m1 : ms1) {
            for (const auto& m2 : ms2) {
                // Induced correspondence over the metarule's first-order
                // variables must be a function in both directions.
                std::map<std::string, std::string> fwd, bwd;
                bool bijective = true;
                for (const std::string& v : meta.fo_vars()) {
                    const Term* t1 = m1.fo_bindings.lookup(v);
                    const Term* t2 = m2.fo_bindings.lookup(v);
                    if (!t1 || !t2) {
                        bijective = false;
                        break;
                    }
                    auto [f, fnew] = fwd.emplace(t1->name, t2->name);
                    auto [b, bnew] = bwd.emplace(t2->name, t1->name);
                    if ((!fnew && f->second != t2->name) || (!bnew && b->second != t1->name)) {
                        bijective = false;
                        break;
                    }
                }
                if (bijective)
                    return true;
            }
        }
    }
    return false;
}

std::vector<Metarule> builtin_metarules() {
    auto var = [](const char* n) { return Term{n}; };
    Metarule chain{"chain",
                   Atom{"P", {var("A"), var("B")}},
                   {Atom{"Q", {var("A"), var("C")}}, Atom{"R", {var("C"), var("B")}}}};
    Metarule chain_hp{"chain_hp",
                      Atom{"P", {var("C"), var("B")}},
                      {Atom{"Q", {var("A"), var("C")}}, Atom{"R", {var("C"), var("B")}}}};
    Metarule tailrec{"tailrec",
                     Atom{"P", {var("A"), var("B")}},
                     {Atom{"Q", {var("A"), var("C")}}, Atom{"P", {var("C"), var("B")}}}};
    return {chain, chain_hp, tailrec};
}

const Metarule& builtin_metarule(const std::string& id) {
    static const std::vector<Metarule> rules = builtin_metarules();
    for (const Metarule& m : rules)
        if (m.id == id)
            return m;
    throw std::invalid_argument("unknown metarule id: " + id);
}

HornClause instantiate(const Metarule& meta, const SecondOrderSubstitution& subst) {
    auto apply = [&](const Atom& pattern) {
        auto it = subst.so_bindings.find(pattern.predicate);
        if (it == subst.so_bindings.end())
            throw std::invalid_argument("unbound second-order variable: " + pattern.predicate);
        Atom out{it->second, {}};
        for (const Term& t : pattern.args)
            out.args.push_back(apply_substitution(t, subst.fo_bindings));
        return out;
    };
    HornClause clause;
    clause.head = apply(meta.head);
    for (const Atom& b : meta.body)
        clause.body.push_back(apply(b));
    return clause;
}

Metarule parse_metarule_directive(const std::string& line) {
    std::string text = line;
    const std::string prefix = "#metarule";
    if (text.rfind(prefix, 0) != 0)
        throw ParseError("expected '#metarule' directive", 1, 1);
    text = text.substr(prefix.size());
    size_t colon = text.find(':');
    if (colon == std::string::npos || text.find(":-") == colon)
        throw ParseError("expected '<id>:' in metarule directive", 1, 1);
    Metarule meta;
    std::string id = text.substr(0, colon);
    id.erase(std::remove_if(id.begin(), id.end(), [](char c) { return c == ' ' || c == '\t'; }),
             id.end());
    meta.id = id;
    HornClause pattern = parse_clause(text.substr(colon + 1));
    meta.head = pattern.head;
    meta.body = pattern.body;
    meta.validate();
    return meta;
}

std::vector<Metarule> metarules_for(const Program& program) {
    std::vector<Metarule> out = builtin_metarules();
    for (const auto& [line, directive] : program.directives) {
        if (directive.rfind("#metarule", 0) != 0)
            continue;
        Metarule meta = parse_metarule_directive(directive);
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const Metarule& m) { return m.id == meta.id; });
        if (it != out.end())
            *it = meta;
        else
            out.push_back(meta);
    }
    return out;
}

}  // namespace ilpnli
