#include "ilpnli/render.hpp"

#include <algorithm>
#include <sstream>

#include "ilpnli/rng.hpp"

namespace ilpnli {

FormulaPtr f_atom(Atom a) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Atom;
    f->atom = std::move(a);
    return f;
}

FormulaPtr f_not(FormulaPtr child) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Not;
    f->children.push_back(std::move(child));
    return f;
}

namespace {

FormulaPtr make_nary(FormulaKind kind, std::vector<FormulaPtr> children) {
    if (children.size() < 2)
        throw std::invalid_argument("And/Or need at least two children");
    auto f = std::make_shared<Formula>();
    f->kind = kind;
    f->children = std::move(children);
    return f;
}

}  // namespace

FormulaPtr f_and(std::vector<FormulaPtr> children) {
    return make_nary(FormulaKind::And, std::move(children));
}

FormulaPtr f_or(std::vector<FormulaPtr> children) {
    return make_nary(FormulaKind::Or, std::move(children));
}

FormulaPtr f_implies(FormulaPtr lhs, FormulaPtr rhs) {
    auto f = std::make_shared<Formula>();
    f->kind = FormulaKind::Implies;
    f->children = {std::move(lhs), std::move(rhs)};
    return f;
}

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a->kind != b->kind || a->children.size() != b->children.size())
        return false;
    if (a->kind == FormulaKind::Atom)
        return a->atom == b->atom;
    for (size_t i = 0; i < a->children.size(); ++i)
        if (!formula_equal(a->children[i], b->children[i]))
            return false;
    return true;
}

std::string formula_str(const FormulaPtr& f) {
    switch (f->kind) {
    case FormulaKind::Atom:
        return f->atom.str();
    case FormulaKind::Not:
        return "~" + formula_str(f->children[0]);
    case FormulaKind::And:
    case FormulaKind::Or: {
        std::string sep = f->kind == FormulaKind::And ? " & " : " | ";
        std::string out = "(";
        for (size_t i = 0; i < f->children.size(); ++i) {
            if (i)
                out += sep;
            out += formula_str(f->children[i]);
        }
        return out + ")";
    }
    case FormulaKind::Implies:
        return "(" + formula_str(f->children[0]) + " -> " + formula_str(f->children[1]) + ")";
    }
    return "?";
}

FormulaPtr flatten(const FormulaPtr& f) {
    if (f->kind == FormulaKind::Atom)
        return f;
    std::vector<FormulaPtr> children;
    for (const FormulaPtr& c : f->children) {
        FormulaPtr fc = flatten(c);
        if ((f->kind == FormulaKind::And || f->kind == FormulaKind::Or) && fc->kind == f->kind)
            children.insert(children.end(), fc->children.begin(), fc->children.end());
        else
            children.push_back(fc);
    }
    auto out = std::make_shared<Formula>();
    out->kind = f->kind;
    out->children = std::move(children);
    return out;
}

namespace {

FormulaPtr eliminate_implications(const FormulaPtr& f) {
    if (f->kind == FormulaKind::Atom)
        return f;
    std::vector<FormulaPtr> children;
    for (const FormulaPtr& c : f->children)
        children.push_back(eliminate_implications(c));
    if (f->kind == FormulaKind::Implies) {
        const FormulaPtr& lhs = children[0];
        std::vector<FormulaPtr> disjuncts;
        if (lhs->kind == FormulaKind::And)
            for (const FormulaPtr& conjunct : lhs->children)
                disjuncts.push_back(f_not(conjunct));
        else
            disjuncts.push_back(f_not(lhs));
        disjuncts.push_back(children[1]);
        return f_or(std::move(disjuncts));
    }
    auto out = std::make_shared<Formula>();
    out->kind = f->kind;
    out->children = std::move(children);
    return out;
}

FormulaPtr cancel_double_negation(const FormulaPtr& f) {
    if (f->kind == FormulaKind::Atom)
        return f;
    if (f->kind == FormulaKind::Not && f->children[0]->kind == FormulaKind::Not)
        return cancel_double_negation(f->children[0]->children[0]);
    std::vector<FormulaPtr> children;
    for (const FormulaPtr& c : f->children)
        children.push_back(cancel_double_negation(c));
    auto out = std::make_shared<Formula>();
    out->kind = f->kind;
    out->children = std::move(children);
    return out;
}

size_t count_ands(const FormulaPtr& f) {
    size_t n = f->kind == FormulaKind::And ? 1 : 0;
    for (const FormulaPtr& c : f->children)
        n += count_ands(c);
    return n;
}

FormulaPtr commute_nth_and(const FormulaPtr& f, size_t& remaining, Rng& rng) {
    std::vector<FormulaPtr> children;
    bool permute_here = false;
    if (f->kind == FormulaKind::And) {
        if (remaining == 0)
            permute_here = true;
        else
            --remaining;
    }
    for (const FormulaPtr& c : f->children)
        children.push_back(c->kind == FormulaKind::Atom ? c : commute_nth_and(c, remaining, rng));
    if (permute_here)
        rng.shuffle(children);
    if (f->kind == FormulaKind::Atom)
        return f;
    auto out = std::make_shared<Formula>();
    out->kind = f->kind;
    out->atom = f->atom;
    out->children = std::move(children);
    return out;
}

}  // namespace

FormulaPtr rewrite_equivalent(const FormulaPtr& f, RewriteRule rule, uint64_t seed) {
    switch (rule) {
    case RewriteRule::ImplicationElim:
        return eliminate_implications(f);
    case RewriteRule::DoubleNegation:
        return cancel_double_negation(f);
    case RewriteRule::CommuteConjunction: {
        size_t n = count_ands(f);
        if (n == 0)
            return f;
        Rng rng(seed);
        size_t target = rng.below(n);
        return commute_nth_and(f, target, rng);
    }
    }
    return f;
}

void TemplateSet::validate() const {
    auto check_slots = [this](const std::string& text, size_t max_slots, const char* where) {
        std::vector<int> counts(max_slots, 0);
        for (size_t i = 0; i + 2 < text.size() + 1; ++i) {
            if (text[i] != '{')
                continue;
            size_t close = text.find('}', i);
            if (close == std::string::npos || close == i + 1)
                throw std::invalid_argument(domain + ": malformed slot in " + where + " '" +
                                            text + "'");
            size_t idx = std::stoul(text.substr(i + 1, close - i - 1));
            if (idx >= max_slots)
                throw std::invalid_argument(domain + ": slot {" + std::to_string(idx) +
                                            "} out of range in '" + text + "'");
            ++counts[idx];
        }
        return counts;
    };
    for (const auto& [pred, variants] : templates) {
        if (variants.size() < 2)
            throw std::invalid_argument(domain + ": predicate '" + pred +
                                        "' needs at least 2 templates");
        // A predicate's templates must agree on their slot set and use each
        // slot exactly once.
        int slot_count = -1;
        for (const std::string& t : variants) {
            auto counts = check_slots(t, 8, "template");
            bool ended = false;
            int used = 0;
            for (int c : counts) {
                if (c == 0) {
                    ended = true;
                } else if (c != 1 || ended) {
                    throw std::invalid_argument(domain + ": template '" + t +
                                                "' must use each slot exactly once");
                } else {
                    ++used;
                }
            }
            if (used == 0)
                throw std::invalid_argument(domain + ": template '" + t + "' has no slots");
            if (slot_count == -1)
                slot_count = used;
            else if (used != slot_count)
                throw std::invalid_argument(domain + ": templates for '" + pred +
                                            "' disagree on slot count");
        }
    }
    for (const std::string& w : not_wrappers)
        if (w.find("{0}") == std::string::npos)
            throw std::invalid_argument(domain + ": negation wrapper needs a {0} slot");
}

std::string display_name(const TemplateSet& templates, const std::string& constant) {
    auto it = templates.display_names.find(constant);
    if (it != templates.display_names.end())
        return it->second;
    if (constant.empty())
        throw MissingDisplayName(constant);
    std::string out = constant;
    if (out[0] >= 'a' && out[0] <= 'z')
        out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return out;
}

namespace {

std::string fill_slots(const std::string& tmpl, const Atom& atom, const TemplateSet& ts) {
    std::string out;
    for (size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '{') {
            size_t close = tmpl.find('}', i);
            size_t idx = std::stoul(tmpl.substr(i + 1, close - i - 1));
            if (idx >= atom.args.size())
                throw RenderError("template slot {" + std::to_string(idx) +
                                  "} exceeds arity of " + atom.str());
            const Term& t = atom.args[idx];
            out += t.is_variable() ? t.name : display_name(ts, t.name);
            i = close;
        } else {
            out += tmpl[i];
        }
    }
    return out;
}

std::string atom_clause(const Atom& atom, const TemplateSet& ts, Rng& rng) {
    auto it = ts.templates.find(atom.predicate);
    if (it == ts.templates.end() || it->second.empty())
        throw MissingTemplate(atom.predicate);
    const std::string& tmpl = it->second[rng.below(it->second.size())];
    return fill_slots(tmpl, atom, ts);
}

std::string pick(const std::vector<std::string>& variants, Rng& rng) {
    if (variants.empty())
        return "";
    return variants[rng.below(variants.size())];
}

std::string sentence_case(std::string text) {
    for (char& c : text)
        if (c >= 'a' && c <= 'z') {
            c = static_cast<char>(c - 'a' + 'A');
            break;
        } else if (c != ' ') {
            break;
        }
    return text;
}

std::string finish_sentence(std::string text) {
    text = sentence_case(std::move(text));
    if (!text.empty() && text.back() != '.' && text.back() != '!' && text.back() != '?')
        text += '.';
    return text;
}

// Clause (sentence fragment) for a node below the top level.
std::string clause_of(const FormulaPtr& f, const TemplateSet& ts, Rng& rng) {
    switch (f->kind) {
    case FormulaKind::Atom:
        return atom_clause(f->atom, ts, rng);
    case FormulaKind::Not: {
        std::string wrapper = pick(ts.not_wrappers, rng);
        if (wrapper.empty())
            wrapper = "it is not the case that {0}";
        std::string inner = clause_of(f->children[0], ts, rng);
        size_t slot = wrapper.find("{0}");
        return wrapper.substr(0, slot) + inner + wrapper.substr(slot + 3);
    }
    case FormulaKind::And: {
        std::string out;
        for (size_t i = 0; i < f->children.size(); ++i) {
            if (i)
                out += " and ";
            out += clause_of(f->children[i], ts, rng);
        }
        return out;
    }
    case FormulaKind::Or: {
        std::string sep = pick(ts.or_connectives, rng);
        if (sep.empty())
            sep = ", or ";
        std::string out;
        for (size_t i = 0; i < f->children.size(); ++i) {
            if (i)
                out += sep;
            out += clause_of(f->children[i], ts, rng);
        }
        return out;
    }
    case FormulaKind::Implies:
        return "if " + clause_of(f->children[0], ts, rng) + ", then " +
               clause_of(f->children[1], ts, rng);
    }
    return "";
}

const Atom* chained_atom(const FormulaPtr& prev, const FormulaPtr& cur) {
    if (!prev || prev->kind != FormulaKind::Atom || cur->kind != FormulaKind::Atom)
        return nullptr;
    const Atom& p = prev->atom;
    const Atom& c = cur->atom;
    if (p.args.size() < 2 || c.args.size() < 2)
        return nullptr;
    return c.args.front() == p.args.back() ? &c : nullptr;
}

}  // namespace

std::string linearize(const FormulaPtr& ast, const TemplateSet& templates, uint64_t seed) {
    Rng rng(seed);
    // Top-level conjunctions become a sentence sequence; anything else is a
    // single sentence.
    if (ast->kind != FormulaKind::And)
        return finish_sentence(clause_of(ast, templates, rng));

    std::string out;
    FormulaPtr prev;
    for (size_t i = 0; i < ast->children.size(); ++i) {
        const FormulaPtr& child = ast->children[i];
        std::string sentence;
        const Atom* chained = i > 0 ? chained_atom(prev, child) : nullptr;
        auto chain_it =
            chained ? templates.chain_templates.find(chained->predicate)
                    : templates.chain_templates.end();
        if (chained && chain_it != templates.chain_templates.end() &&
            !chain_it->second.empty()) {
            const std::string& tmpl =
                chain_it->second[rng.below(chain_it->second.size())];
            sentence = fill_slots(tmpl, *chained, templates);
        } else {
            sentence = clause_of(child, templates, rng);
            if (i > 0)
                sentence = pick(templates.and_connectives, rng) + sentence;
        }
        if (i)
            out += ' ';
        out += finish_sentence(std::move(sentence));
        prev = child;
    }
    return out;
}

std::string linearize_hypothesis(const Atom& hypothesis, const TemplateSet& templates,
                                 uint64_t seed) {
    Rng rng(seed);
    std::string lead = pick(templates.therefore_connectives, rng);
    return finish_sentence(lead + atom_clause(hypothesis, templates, rng));
}

NliExample render_example(const NliExample& example, const TemplateSet& templates,
                          double equivalence_rate, uint64_t seed) {
    if (example.form != "logic")
        throw RenderError("render_example expects a logic-form example");
    if (example.premise_atoms.empty())
        throw std::invalid_argument("render_example needs at least one premise atom");

    Rng rng(seed);
    NliExample out = example;
    out.id = example.id + "-nl";
    out.form = "nl";
    out.seed = seed;

    FormulaPtr premise;
    if (example.premise_atoms.size() == 1) {
        premise = f_atom(example.premise_atoms[0]);
    } else {
        std::vector<FormulaPtr> conjuncts;
        for (const Atom& a : example.premise_atoms)
            conjuncts.push_back(f_atom(a));
        premise = f_and(std::move(conjuncts));
    }
    if (example.premise_atoms.size() >= 2 && rng.chance(equivalence_rate)) {
        premise = rewrite_equivalent(premise, RewriteRule::CommuteConjunction, rng.next());
        out.provenance.push_back("rewrite(commute_conjunction)");
    }
    out.premise_text = linearize(premise, templates, rng.next());
    out.hypothesis_text = linearize_hypothesis(example.hypothesis_atom, templates, rng.next());
    out.provenance.push_back("render(" + templates.domain + ")");
    return out;
}

std::vector<Triplet> with_rendered_positives(const std::vector<Triplet>& triplets,
                                             const std::vector<NliExample>& corpus) {
    std::set<std::string> ids;
    for (const auto& ex : corpus) ids.insert(ex.id);
    std::vector<Triplet> out;
    for (const auto& t : triplets)
        if (!t.positive_id.ends_with("-nl")) out.push_back(t);
    size_t base = out.size();
    for (size_t i = 0; i < base; ++i) {
        std::string rendered = out[i].positive_id + "-nl";
        if (ids.count(rendered))
            out.push_back(Triplet{out[i].anchor_id, rendered, out[i].negative_id,
                                  out[i].negative_mode});
    }
    return out;
}

TemplateSet builtin_templates(const std::string& domain) {
    TemplateSet ts;
    ts.domain = domain;
    ts.and_connectives = {"and ", "also, ", "in addition, "};
    ts.or_connectives = {", or ", ", or else "};
    ts.not_wrappers = {"it is not the case that {0}", "it is false that {0}"};
    ts.therefore_connectives = {"therefore, ", "hence, ", "so, "};

    if (domain == "city") {
        ts.templates["city"] = {"from {0}, one can take a train to {1}",
                                "the city {1} can be accessed by train from {0}",
                                "{1} is connected to {0} by train",
                                "you can take a train from {0} to {1}"};
        ts.chain_templates["city"] = {
            "and from there, it is possible to travel to {1} by train"};
        ts.templates["legalCity"] = {"the train network connects {0} and {1}",
                                     "these will allow you to reach {0} from {1}",
                                     "{1} is reachable from {0} by rail"};
        ts.templates["hub"] = {"{0} is a hub station", "{0} is a major junction"};
        ts.templates["terminus"] = {"{0} is a terminus", "{0} is an end station"};
    } else if (domain == "kinship" || domain == "ancestor") {
        ts.templates["parent"] = {"{0} is a parent of {1}", "{0} has a child named {1}",
                                  "{1} is a child of {0}"};
        ts.templates["male"] = {"{0} is male", "{0} is a man"};
        ts.templates["female"] = {"{0} is female", "{0} is a woman"};
        if (domain == "kinship")
            ts.templates["grandparent"] = {"{0} is a grandparent of {1}",
                                           "{1} is a grandchild of {0}"};
        else
            ts.templates["ancestor"] = {"{0} is an ancestor of {1}",
                                        "{1} descends from {0}"};
    } else {
        throw std::invalid_argument("no built-in templates for domain: " + domain);
    }
    ts.validate();
    return ts;
}

TemplateSet parse_template_set(const std::string& text) {
    TemplateSet ts;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto split = [&](const std::string& rest) {
        size_t bar = rest.find('|');
        if (bar == std::string::npos)
            throw ParseError("expected '<key>|<text>'", lineno, 1);
        return std::make_pair(rest.substr(0, bar), rest.substr(bar + 1));
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        size_t space = line.find(' ');
        if (space == std::string::npos)
            throw ParseError("expected '<kind> <payload>'", lineno, 1);
        std::string kind = line.substr(0, space);
        std::string rest = line.substr(space + 1);
        if (kind == "domain") {
            ts.domain = rest;
        } else if (kind == "template") {
            auto [pred, tmpl] = split(rest);
            ts.templates[pred].push_back(tmpl);
        } else if (kind == "chain") {
            auto [pred, tmpl] = split(rest);
            ts.chain_templates[pred].push_back(tmpl);
        } else if (kind == "connective") {
            auto [which, tmpl] = split(rest);
            if (which == "and")
                ts.and_connectives.push_back(tmpl);
            else if (which == "or")
                ts.or_connectives.push_back(tmpl);
            else if (which == "not")
                ts.not_wrappers.push_back(tmpl);
            else if (which == "therefore")
                ts.therefore_connectives.push_back(tmpl);
            else
                throw ParseError("unknown connective class '" + which + "'", lineno, 1);
        } else if (kind == "display") {
            auto [constant, name] = split(rest);
            ts.display_names[constant] = name;
        } else {
            throw ParseError("unknown template-file entry '" + kind + "'", lineno, 1);
        }
    }
    ts.validate();
    return ts;
}

std::string serialize_template_set(const TemplateSet& ts) {
    std::string out = "domain " + ts.domain + "\n";
    for (const auto& [pred, variants] : ts.templates)
        for (const std::string& t : variants)
            out += "template " + pred + "|" + t + "\n";
    for (const auto& [pred, variants] : ts.chain_templates)
        for (const std::string& t : variants)
            out += "chain " + pred + "|" + t + "\n";
    for (const std::string& t : ts.and_connectives)
        out += "connective and|" + t + "\n";
    for (const std::string& t : ts.or_connectives)
        out += "connective or|" + t + "\n";
    for (const std::string& t : ts.not_wrappers)
        out += "connective not|" + t + "\n";
    for (const std::string& t : ts.therefore_connectives)
        out += "connective therefore|" + t + "\n";
    for (const auto& [constant, name] : ts.display_names)
        out += "display " + constant + "|" + name + "\n";
    return out;
}

}  // namespace ilpnli
