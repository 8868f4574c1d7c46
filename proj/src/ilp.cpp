#include "ilpnli/ilp.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ilpnli/rng.hpp"

namespace ilpnli {

void DomainConfig::validate() const {
    if (domain != "kinship" && domain != "city" && domain != "ancestor")
        throw std::invalid_argument("unknown domain: " + domain);
    if (n_entities < 1)
        throw std::invalid_argument("n_entities must be >= 1");
    if (n_examples < 1)
        throw std::invalid_argument("n_examples must be >= 1");
    if (neutral_fraction < 0 || contradiction_fraction < 0 ||
        neutral_fraction + contradiction_fraction > 1.0)
        throw std::invalid_argument("label fractions must be in [0,1] and sum to <= 1");
}

FactIndex::FactIndex(const FactBase& background) {
    for (const Atom& fact : background)
        for (const Term& t : fact.args)
            by_constant_[t.name].push_back(&fact);
}

const std::vector<const Atom*>& FactIndex::facts_of(const std::string& constant) const {
    auto it = by_constant_.find(constant);
    return it == by_constant_.end() ? empty_ : it->second;
}

SupportSet premise_search(const FactBase& background, const Atom& example) {
    return premise_search(FactIndex(background), example);
}

SupportSet premise_search(const FactIndex& index, const Atom& example) {
    if (!example.ground())
        throw std::invalid_argument("premise_search requires a ground example");
    SupportSet out;
    out.example = example;
    std::vector<std::string> frontier;
    for (const Term& t : example.args)
        if (out.reached_terms.insert(t.name).second)
            frontier.push_back(t.name);

    // The single pass of the printed algorithm is order-dependent; iterating
    // it to a fixpoint makes the result the term-sharing connected component.
    // Expanding frontier constants through the index visits each component
    // fact once instead of rescanning the whole base per round.
    std::set<Atom> taken;
    while (!frontier.empty()) {
        std::set<Atom> round;
        for (const std::string& c : frontier)
            for (const Atom* fact : index.facts_of(c))
                if (!taken.count(*fact))
                    round.insert(*fact);
        frontier.clear();
        for (const Atom& fact : round) {
            if (!taken.insert(fact).second)
                continue;
            out.premises.push_back(fact);
            for (const Term& t : fact.args)
                if (out.reached_terms.insert(t.name).second)
                    frontier.push_back(t.name);
        }
    }
    return out;
}

namespace {

bool extract_body(const Metarule& meta, size_t i, const std::vector<Atom>& premises,
                  SecondOrderSubstitution& subst, std::vector<Atom>& chosen) {
    if (i == meta.body.size())
        return true;
    for (const Atom& fact : premises) {
        SecondOrderSubstitution attempt = subst;
        if (!match_pattern_atom(meta.body[i], fact, attempt))
            continue;
        chosen.push_back(fact);
        if (extract_body(meta, i + 1, premises, attempt, chosen)) {
            subst = attempt;
            return true;
        }
        chosen.pop_back();
    }
    return false;
}

}  // namespace

std::optional<HornClause> extract_rule(const Atom& example, const SupportSet& support,
                                       const Metarule& meta) {
    SecondOrderSubstitution subst;
    if (!match_pattern_atom(meta.head, example, subst))
        return std::nullopt;
    std::vector<Atom> chosen;
    if (!extract_body(meta, 0, support.premises, subst, chosen))
        return std::nullopt;
    return HornClause{example, chosen};
}

std::vector<HornClause> domain_rules(const std::string& domain) {
    if (domain == "kinship")
        return {parse_clause("grandparent(A,B) :- parent(A,C), parent(C,B).")};
    if (domain == "city")
        return {parse_clause("legalCity(A,B) :- city(A,C), city(C,B).")};
    if (domain == "ancestor")
        return {parse_clause("ancestor(A,B) :- parent(A,B)."),
                parse_clause("ancestor(A,B) :- parent(A,C), ancestor(C,B).")};
    throw std::invalid_argument("unknown domain: " + domain);
}

std::vector<IntegrityConstraint> domain_constraints(const std::string& domain) {
    std::string target = domain_target_predicate(domain);
    std::string body = domain_body_predicate(domain);
    return {{ConstraintKind::Antisymmetric, target},
            {ConstraintKind::Irreflexive, target},
            {ConstraintKind::Irreflexive, body}};
}

std::string domain_target_predicate(const std::string& domain) {
    if (domain == "kinship")
        return "grandparent";
    if (domain == "city")
        return "legalCity";
    if (domain == "ancestor")
        return "ancestor";
    throw std::invalid_argument("unknown domain: " + domain);
}

std::string domain_body_predicate(const std::string& domain) {
    return domain == "city" ? "city" : "parent";
}

std::string domain_fallback_metarule(const std::string& domain) {
    return domain == "ancestor" ? "tailrec" : "chain";
}

namespace {

std::string make_name(Rng& rng) {
    static const char consonants[] = "bdfgklmnprstvz";
    static const char vowels[] = "aeiou";
    size_t syllables = 2 + rng.below(2);
    std::string name;
    for (size_t s = 0; s < syllables; ++s) {
        name += consonants[rng.below(sizeof(consonants) - 1)];
        name += vowels[rng.below(sizeof(vowels) - 1)];
    }
    if (rng.chance(0.4))
        name += consonants[rng.below(sizeof(consonants) - 1)];
    return name;
}

std::vector<std::string> make_entities(int count, Rng& rng) {
    std::set<std::string> used;
    std::vector<std::string> out;
    out.reserve(count);
    while (static_cast<int>(out.size()) < count) {
        std::string name = make_name(rng);
        if (used.insert(name).second)
            out.push_back(name);
    }
    return out;
}

struct Graph {
    std::vector<std::string> entities;
    std::vector<int> component;                 // per entity
    std::vector<std::vector<int>> in_edges;     // edge u -> v stored at in_edges[v]
    std::vector<std::pair<int, int>> edges;     // (u, v)
};

Graph build_graph(const DomainConfig& config, Rng& rng) {
    Graph g;
    int n = std::max(config.n_entities, 3);
    int ncomp = std::max(1, n / 8);
    if (config.neutral_fraction > 0)
        ncomp = std::max(ncomp, 2);
    g.entities = make_entities(n, rng);
    g.component.resize(n);
    g.in_edges.resize(n);

    std::vector<std::vector<int>> members(ncomp);
    for (int i = 0; i < n; ++i) {
        g.component[i] = i % ncomp;
        members[i % ncomp].push_back(i);
    }

    auto add_edge = [&](int u, int v) {
        for (int w : g.in_edges[v])
            if (w == u)
                return;
        g.in_edges[v].push_back(u);
        g.edges.emplace_back(u, v);
    };

    bool city = config.domain == "city";
    for (const auto& comp : members) {
        for (size_t j = 1; j < comp.size(); ++j) {
            // Bias toward the previous node so components form deep chains.
            int u = rng.chance(0.6) ? comp[j - 1] : comp[rng.below(j)];
            add_edge(u, comp[j]);
            if (city && j >= 2 && rng.chance(0.35)) {
                int extra = comp[rng.below(j)];
                if (extra != u)
                    add_edge(extra, comp[j]);
            }
        }
    }
    return g;
}

// Target pairs derivable under the domain's rule schema, computed directly on
// the graph; each emitted example is re-verified by classify downstream.
std::set<std::pair<int, int>> entailed_pairs(const Graph& g, const std::string& domain) {
    std::set<std::pair<int, int>> out;
    int n = static_cast<int>(g.entities.size());
    if (domain == "ancestor") {
        // Multi-generation pairs only (depth >= 2).
        std::vector<std::set<int>> anc(n);
        bool changed = true;
        while (changed) {
            changed = false;
            for (int v = 0; v < n; ++v)
                for (int u : g.in_edges[v]) {
                    if (anc[v].insert(u).second)
                        changed = true;
                    for (int a : anc[u])
                        if (anc[v].insert(a).second)
                            changed = true;
                }
        }
        for (int v = 0; v < n; ++v)
            for (int a : anc[v]) {
                bool direct = std::find(g.in_edges[v].begin(), g.in_edges[v].end(), a) !=
                              g.in_edges[v].end();
                if (!direct)
                    out.emplace(a, v);
            }
    } else {
        for (int v = 0; v < n; ++v)
            for (int u : g.in_edges[v])
                for (int w : g.in_edges[u])
                    out.emplace(w, v);
    }
    return out;
}

}  // namespace

std::vector<std::string> generate_names(int count, uint64_t seed) {
    Rng rng(seed);
    return make_entities(count, rng);
}

IlpDataset generate_domain(const DomainConfig& config) {
    config.validate();
    Rng graph_rng(mix_seed(config.seed, fnv1a64("graph:" + config.domain)));
    Graph g = build_graph(config, graph_rng);

    IlpDataset dataset;
    dataset.domain = config.domain;
    std::string body_pred = domain_body_predicate(config.domain);
    std::string target = domain_target_predicate(config.domain);
    for (const auto& [u, v] : g.edges)
        dataset.background.insert(Atom{body_pred, {Term{g.entities[u]}, Term{g.entities[v]}}});
    if (config.domain == "ancestor") {
        Rng gender_rng(mix_seed(config.seed, fnv1a64("gender")));
        for (const std::string& e : g.entities)
            dataset.background.insert(
                Atom{gender_rng.chance(0.5) ? "male" : "female", {Term{e}}});
    }

    auto entailed = entailed_pairs(g, config.domain);

    int n_contra = static_cast<int>(config.n_examples * config.contradiction_fraction + 0.5);
    int n_neutral = static_cast<int>(config.n_examples * config.neutral_fraction + 0.5);
    if (n_contra + n_neutral > config.n_examples)
        n_neutral = config.n_examples - n_contra;
    int n_entail = config.n_examples - n_contra - n_neutral;

    std::vector<std::pair<int, int>> pool(entailed.begin(), entailed.end());
    if (static_cast<int>(pool.size()) < n_entail || static_cast<int>(pool.size()) < n_contra)
        throw GenerationExhausted(
            config.domain + ": entity budget supports only " + std::to_string(pool.size()) +
            " derivable examples; requested " + std::to_string(config.n_examples));

    auto rules = domain_rules(config.domain);
    auto constraints = domain_constraints(config.domain);
    FactIndex index(dataset.background);
    auto verify = [&](const Atom& atom, Label expected) {
        SupportSet support = premise_search(index, atom);
        FactBase premise(support.premises);
        if (classify(premise, rules, constraints, atom) != expected)
            throw GenerationExhausted(config.domain + ": candidate " + atom.str() +
                                      " failed label verification");
    };
    auto pair_atom = [&](const std::pair<int, int>& p) {
        return Atom{target, {Term{g.entities[p.first]}, Term{g.entities[p.second]}}};
    };

    Rng select_rng(mix_seed(config.seed, fnv1a64("select:" + config.domain)));
    std::vector<std::pair<int, int>> shuffled = pool;
    select_rng.shuffle(shuffled);
    for (int i = 0; i < n_entail; ++i) {
        Atom atom = pair_atom(shuffled[i]);
        verify(atom, Label::Entailment);
        dataset.positives.push_back(atom);
    }

    std::vector<std::pair<int, int>> reversed;
    for (const auto& [a, b] : pool)
        if (a != b && !entailed.count({b, a}))
            reversed.emplace_back(b, a);
    select_rng.shuffle(reversed);
    if (static_cast<int>(reversed.size()) < n_contra)
        throw GenerationExhausted(config.domain + ": not enough contradiction candidates");
    for (int i = 0; i < n_contra; ++i) {
        Atom atom = pair_atom(reversed[i]);
        verify(atom, Label::Contradiction);
        dataset.negatives.push_back(atom);
    }

    // Neutral candidates pair constants from distinct components (the only
    // neutral pattern the source material exhibits).
    int n = static_cast<int>(g.entities.size());
    std::set<std::pair<int, int>> seen;
    int attempts = 0;
    while (static_cast<int>(seen.size()) < n_neutral) {
        if (++attempts > 1000 * (n_neutral + 1))
            throw GenerationExhausted(config.domain + ": not enough neutral candidates");
        int a = static_cast<int>(select_rng.below(n));
        int b = static_cast<int>(select_rng.below(n));
        if (g.component[a] == g.component[b])
            continue;
        if (!seen.emplace(a, b).second)
            continue;
        Atom atom = pair_atom({a, b});
        verify(atom, Label::Neutral);
        dataset.negatives.push_back(atom);
    }

    return dataset;
}

std::string dataset_manifest(const IlpDataset& dataset, const DomainConfig& config) {
    Program bk;
    bk.facts = dataset.background;
    std::string content = serialize(bk);
    for (const Atom& a : dataset.positives)
        content += a.str() + ".\n";
    for (const Atom& a : dataset.negatives)
        content += a.str() + ".\n";

    std::ostringstream out;
    out << "domain: " << dataset.domain << "\n"
        << "seed: " << config.seed << "\n"
        << "n_entities: " << config.n_entities << "\n"
        << "n_examples: " << config.n_examples << "\n"
        << "neutral_fraction: " << config.neutral_fraction << "\n"
        << "contradiction_fraction: " << config.contradiction_fraction << "\n"
        << "background_facts: " << dataset.background.size() << "\n"
        << "positives: " << dataset.positives.size() << "\n"
        << "negatives: " << dataset.negatives.size() << "\n"
        << "digest: " << std::hex << fnv1a64(content) << "\n";
    return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string atoms_program(const std::vector<Atom>& atoms) {
    std::string out;
    for (const Atom& a : atoms)
        out += a.str() + ".\n";
    return out;
}

}  // namespace

void write_dataset(const std::string& dir, const IlpDataset& dataset,
                   const DomainConfig& config) {
    std::filesystem::path base(dir);
    std::filesystem::create_directories(base);
    Program bk;
    bk.facts = dataset.background;
    write_file(base / "bk.pl", serialize(bk));
    write_file(base / "pos.pl", atoms_program(dataset.positives));
    write_file(base / "neg.pl", atoms_program(dataset.negatives));
    write_file(base / "manifest.txt", dataset_manifest(dataset, config));
}

IlpDataset read_dataset(const std::string& dir, const std::string& domain) {
    std::filesystem::path base(dir);
    IlpDataset dataset;
    dataset.domain = domain;
    dataset.background = parse_program(read_file(base / "bk.pl")).facts;
    // K+/K- files keep generation order, which the set-backed Program parser
    // would discard.
    auto read_atoms = [&](const char* name) {
        std::vector<Atom> atoms;
        std::istringstream in(read_file(base / name));
        std::string line;
        while (std::getline(in, line)) {
            size_t pos = line.find_first_not_of(" \t");
            if (pos == std::string::npos || line[pos] == '%') continue;
            atoms.push_back(parse_clause(line).head);
        }
        return atoms;
    };
    dataset.positives = read_atoms("pos.pl");
    dataset.negatives = read_atoms("neg.pl");
    return dataset;
}

}  // namespace ilpnli
