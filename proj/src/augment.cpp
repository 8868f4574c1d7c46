#include "ilpnli/augment.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "ilpnli/rng.hpp"

namespace ilpnli {

const char* negative_mode_name(NegativeMode mode) {
    return mode == NegativeMode::PermuteBody ? "permute_body" : "permute_head";
}

NegativeMode negative_mode_from_name(const std::string& name) {
    if (name == "permute_body")
        return NegativeMode::PermuteBody;
    if (name == "permute_head")
        return NegativeMode::PermuteHead;
    throw std::invalid_argument("unknown negative mode: " + name);
}

std::string logic_premise_text(const std::vector<Atom>& atoms) {
    return atoms_str(atoms);
}

void refresh_logic_text(NliExample& example) {
    example.premise_text = logic_premise_text(example.premise_atoms);
    example.hypothesis_text = example.hypothesis_atom.str();
}

Label recompute_label(const NliExample& example) {
    FactBase premise(example.premise_atoms);
    return classify(premise, domain_rules(example.domain),
                    domain_constraints(example.domain), example.hypothesis_atom);
}

HornClause rule_of(const NliExample& example) {
    if (example.metarule_id.empty())
        throw std::invalid_argument("example " + example.id + " carries no metarule");
    SupportSet support;
    support.example = example.hypothesis_atom;
    support.premises = example.premise_atoms;
    auto rule = extract_rule(example.hypothesis_atom, support,
                             builtin_metarule(example.metarule_id));
    if (!rule)
        throw std::invalid_argument("example " + example.id +
                                    " does not instantiate metarule " + example.metarule_id);
    return *rule;
}

namespace {

std::set<std::string> example_constants(const NliExample& e) {
    std::set<std::string> out;
    for (const Atom& a : e.premise_atoms)
        for (const Term& t : a.args)
            out.insert(t.name);
    for (const Term& t : e.hypothesis_atom.args)
        out.insert(t.name);
    return out;
}

}  // namespace

double constant_overlap(const NliExample& a, const NliExample& b) {
    auto ca = example_constants(a);
    auto cb = example_constants(b);
    if (ca.empty() && cb.empty())
        return 0.0;
    size_t inter = 0;
    for (const std::string& c : ca)
        inter += cb.count(c);
    size_t uni = ca.size() + cb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

NliExample make_hard_positive(const NliExample& anchor, const DomainLexicon& target,
                              uint64_t seed) {
    if (anchor.metarule_id.empty())
        throw std::invalid_argument("hard positive requires an anchor with a metarule");
    if (target.domain == anchor.domain && target.constant_pool.empty())
        throw LexiconExhausted("identity lexicon without a constant pool");

    std::set<std::string> anchor_constants = example_constants(anchor);

    // Constants in first-appearance order so the mapping is reproducible.
    std::vector<std::string> ordered;
    auto note = [&](const Atom& a) {
        for (const Term& t : a.args)
            if (std::find(ordered.begin(), ordered.end(), t.name) == ordered.end())
                ordered.push_back(t.name);
    };
    for (const Atom& a : anchor.premise_atoms)
        note(a);
    note(anchor.hypothesis_atom);

    std::vector<std::string> pool;
    for (const std::string& c : target.constant_pool)
        if (!anchor_constants.count(c))
            pool.push_back(c);
    if (pool.size() < ordered.size())
        throw LexiconExhausted("lexicon pool for " + target.domain + " has " +
                               std::to_string(pool.size()) + " usable constants, need " +
                               std::to_string(ordered.size()));
    Rng rng(seed);
    rng.shuffle(pool);

    Substitution theta;
    std::map<std::string, std::string> constant_map;
    for (size_t i = 0; i < ordered.size(); ++i) {
        constant_map[ordered[i]] = pool[i];
        theta.bindings.emplace(ordered[i], Term{pool[i]});
    }

    auto map_atom = [&](const Atom& a) {
        auto it = target.predicate_map.find(a.predicate);
        if (it == target.predicate_map.end())
            throw AugmentError("lexicon for " + target.domain + " does not map predicate '" +
                               a.predicate + "'");
        Atom out{it->second, {}};
        for (const Term& t : a.args)
            out.args.push_back(Term{constant_map.at(t.name)});
        return out;
    };

    NliExample out;
    out.id = anchor.id + "-pos";
    out.domain = target.domain;
    out.form = "logic";
    for (const Atom& a : anchor.premise_atoms)
        out.premise_atoms.push_back(map_atom(a));
    out.hypothesis_atom = map_atom(anchor.hypothesis_atom);
    refresh_logic_text(out);
    out.metarule_id = anchor.metarule_id;
    out.seed = seed;
    out.provenance = anchor.provenance;
    out.provenance.push_back("hard_positive(theta=" + theta.str() + ")");

    out.label = recompute_label(out);
    if (out.label != anchor.label)
        throw AugmentError("hard positive for " + anchor.id + " changed label from " +
                           label_name(anchor.label) + " to " + label_name(out.label));
    return out;
}

namespace {

void permute_args(Atom& atom, Rng& rng) {
    if (atom.args.size() == 2) {
        std::swap(atom.args[0], atom.args[1]);
        return;
    }
    // Uniform non-identity permutation for higher arities.
    std::vector<Term> original = atom.args;
    do {
        rng.shuffle(atom.args);
    } while (atom.args == original);
}

}  // namespace

NliExample make_hard_negative(const NliExample& anchor, NegativeMode mode, uint64_t seed) {
    if (anchor.label != Label::Entailment)
        throw AugmentError("hard negatives are built from entailment anchors");

    Rng rng(seed);
    NliExample out = anchor;
    out.id = anchor.id + "-neg";
    out.seed = seed;

    if (mode == NegativeMode::PermuteHead) {
        if (out.hypothesis_atom.args.size() < 2)
            throw NoLabelChange("hypothesis arity < 2, nothing to permute");
        permute_args(out.hypothesis_atom, rng);
        out.label = recompute_label(out);
        if (out.label == Label::Entailment)
            throw NoLabelChange("head permutation of " + anchor.id + " stays entailed");
        refresh_logic_text(out);
        out.provenance.push_back("permute_head(" + out.hypothesis_atom.str() + ")");
        return out;
    }

    std::vector<size_t> order(anchor.premise_atoms.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (size_t idx : order) {
        if (anchor.premise_atoms[idx].args.size() < 2)
            continue;
        out.premise_atoms = anchor.premise_atoms;
        permute_args(out.premise_atoms[idx], rng);
        out.label = recompute_label(out);
        if (out.label != Label::Entailment) {
            refresh_logic_text(out);
            out.provenance.push_back("permute_body(" + out.premise_atoms[idx].str() + ")");
            return out;
        }
    }
    throw NoLabelChange("every body permutation of " + anchor.id + " stays entailed");
}

NliExample add_distractors(const NliExample& example, const FactBase& pool, int k,
                           uint64_t seed) {
    return add_distractors(example, std::vector<Atom>(pool.begin(), pool.end()), k, seed);
}

NliExample add_distractors(const NliExample& example, const std::vector<Atom>& pool,
                           int k, uint64_t seed) {
    if (k < 0)
        throw std::invalid_argument("distractor count must be >= 0");
    NliExample out = example;
    out.seed = seed;
    if (k == 0)
        return out;

    std::set<std::string> component = example_constants(example);
    auto disjoint = [&component](const Atom& fact) {
        for (const Term& t : fact.args)
            if (component.count(t.name))
                return false;
        return true;
    };

    // Rejection sampling keeps the common case O(k); big pools are mostly
    // disjoint from any one component. A full scan backs it up so exhaustion
    // on small pools is still detected exactly.
    Rng rng(seed);
    std::vector<size_t> picked;
    std::set<size_t> taken;
    size_t budget = 64 * static_cast<size_t>(k) + 64;
    for (size_t attempt = 0; attempt < budget && static_cast<int>(picked.size()) < k;
         ++attempt) {
        if (pool.empty())
            break;
        size_t i = rng.below(pool.size());
        if (taken.count(i) || !disjoint(pool[i]))
            continue;
        taken.insert(i);
        picked.push_back(i);
    }
    if (static_cast<int>(picked.size()) < k) {
        std::vector<size_t> candidates;
        for (size_t i = 0; i < pool.size(); ++i)
            if (disjoint(pool[i]))
                candidates.push_back(i);
        if (static_cast<int>(candidates.size()) < k)
            throw PoolExhausted("distractor pool has " +
                                std::to_string(candidates.size()) +
                                " disjoint facts, need " + std::to_string(k));
        Rng fallback(mix_seed(seed, fnv1a64("distractor-fallback")));
        fallback.shuffle(candidates);
        picked.assign(candidates.begin(), candidates.begin() + k);
    }
    for (size_t i : picked)
        out.premise_atoms.push_back(pool[i]);
    refresh_logic_text(out);
    out.provenance.push_back("add_distractors(" + std::to_string(k) + ")");

    Label fresh = recompute_label(out);
    if (fresh != example.label)
        throw AugmentError("distractor injection flipped label of " + example.id);
    return out;
}

NliExample permute_premise(const NliExample& example, uint64_t seed) {
    NliExample out = example;
    out.seed = seed;
    if (example.premise_atoms.size() >= 2) {
        Rng rng(seed);
        rng.shuffle(out.premise_atoms);
    }
    refresh_logic_text(out);
    out.provenance.push_back("permute_premise");
    return out;
}

std::vector<NliExample> build_corpus(const IlpDataset& dataset, const CorpusConfig& config) {
    std::vector<NliExample> corpus;
    auto rules = domain_rules(dataset.domain);
    auto constraints = domain_constraints(dataset.domain);
    const Metarule& chain = builtin_metarule("chain");

    std::vector<Atom> atoms = dataset.positives;
    atoms.insert(atoms.end(), dataset.negatives.begin(), dataset.negatives.end());
    FactIndex fact_index(dataset.background);
    std::vector<Atom> distractor_pool(dataset.background.begin(),
                                      dataset.background.end());

    for (size_t index = 0; index < atoms.size(); ++index) {
        const Atom& atom = atoms[index];
        uint64_t stream_seed = mix_seed(config.seed, index);
        Rng rng(stream_seed);

        SupportSet support = premise_search(fact_index, atom);
        FactBase own_premise(support.premises);
        Label own_label = classify(own_premise, rules, constraints, atom);

        NliExample example;
        example.id = dataset.domain + "-" + std::to_string(index);
        example.domain = dataset.domain;
        example.hypothesis_atom = atom;
        example.seed = stream_seed;

        if (own_label == Label::Neutral) {
            // Neutral pattern: a connected premise from elsewhere,
            // hypothesis over constants it never mentions.
            std::set<std::string> hypothesis_constants;
            for (const Term& t : atom.args)
                hypothesis_constants.insert(t.name);
            std::vector<size_t> donor_order(dataset.positives.size());
            std::iota(donor_order.begin(), donor_order.end(), 0);
            rng.shuffle(donor_order);
            bool placed = false;
            for (size_t d : donor_order) {
                SupportSet donor = premise_search(fact_index, dataset.positives[d]);
                bool disjoint = true;
                for (const Atom& f : donor.premises)
                    for (const Term& t : f.args)
                        disjoint = disjoint && !hypothesis_constants.count(t.name);
                if (!disjoint)
                    continue;
                example.premise_atoms = donor.premises;
                placed = true;
                break;
            }
            if (!placed)
                example.premise_atoms = support.premises;
        } else {
            example.premise_atoms = support.premises;
        }

        refresh_logic_text(example);
        example.label = recompute_label(example);

        SupportSet premise_view;
        premise_view.example = atom;
        premise_view.premises = example.premise_atoms;
        if (extract_rule(atom, premise_view, chain))
            example.metarule_id = "chain";
        else if (example.label != Label::Neutral)
            example.metarule_id = domain_fallback_metarule(dataset.domain);

        corpus.push_back(example);

        if (config.permute_rate > 0 && example.premise_atoms.size() >= 2 &&
            rng.chance(config.permute_rate)) {
            NliExample permuted = permute_premise(example, rng.next());
            permuted.id = example.id + "-perm";
            corpus.push_back(std::move(permuted));
        }
        if (config.distractor_rate > 0 && config.distractor_k > 0 &&
            rng.chance(config.distractor_rate)) {
            try {
                NliExample noisy =
                    add_distractors(example, distractor_pool, config.distractor_k,
                                    rng.next());
                noisy.id = example.id + "-dist";
                corpus.push_back(std::move(noisy));
            } catch (const PoolExhausted&) {
                // Single-component backgrounds have no disjoint facts; skip.
            }
        }
    }
    return corpus;
}

std::vector<Triplet> build_triplets(std::vector<NliExample>& corpus,
                                    const std::vector<DomainLexicon>& lexicons,
                                    const TripletConfig& config) {
    if (lexicons.empty())
        throw std::invalid_argument("build_triplets needs at least one lexicon");

    std::vector<Triplet> triplets;
    const std::vector<Metarule> metas = builtin_metarules();
    size_t base_count = corpus.size();

    for (size_t i = 0; i < base_count; ++i) {
        if (config.max_triplets >= 0 &&
            static_cast<int>(triplets.size()) >= config.max_triplets)
            break;
        const NliExample anchor = corpus[i];
        if (anchor.label != Label::Entailment || anchor.form != "logic" ||
            anchor.metarule_id.empty())
            continue;

        HornClause anchor_rule;
        try {
            anchor_rule = rule_of(anchor);
        } catch (const std::invalid_argument&) {
            continue;  // deep recursive examples have no ground metarule instance
        }

        std::vector<const DomainLexicon*> eligible;
        for (const DomainLexicon& lex : lexicons)
            if (lex.domain != anchor.domain)
                eligible.push_back(&lex);
        if (eligible.empty())
            continue;

        Rng rng(mix_seed(config.seed, fnv1a64(anchor.id)));
        const DomainLexicon& target = *eligible[rng.below(eligible.size())];

        NliExample positive;
        try {
            positive = make_hard_positive(anchor, target, rng.next());
        } catch (const AugmentError& e) {
            throw AugmentError("anchor " + anchor.id + ": " + e.what());
        }

        NegativeMode mode =
            rng.chance(0.5) ? NegativeMode::PermuteHead : NegativeMode::PermuteBody;
        NliExample negative;
        bool have_negative = false;
        for (int attempt = 0; attempt < 2 && !have_negative; ++attempt) {
            try {
                negative = make_hard_negative(anchor, mode, rng.next());
                have_negative = true;
            } catch (const NoLabelChange&) {
                mode = mode == NegativeMode::PermuteHead ? NegativeMode::PermuteBody
                                                         : NegativeMode::PermuteHead;
            }
        }
        if (!have_negative)
            continue;

        if (!isomorphic(anchor_rule, rule_of(positive), metas))
            throw AugmentError("anchor " + anchor.id + ": positive is not isomorphic");
        if (constant_overlap(anchor, positive) != 0.0)
            throw AugmentError("anchor " + anchor.id + ": positive shares constants");
        if (constant_overlap(anchor, negative) < config.overlap_threshold)
            throw AugmentError("anchor " + anchor.id + ": negative overlap below threshold");

        corpus.push_back(positive);
        corpus.push_back(negative);
        triplets.push_back(Triplet{anchor.id, positive.id, negative.id, mode});
    }
    return triplets;
}

DomainLexicon builtin_lexicon(const std::string& target_domain) {
    DomainLexicon lex;
    lex.domain = target_domain;
    if (target_domain == "city") {
        lex.predicate_map = {{"parent", "city"},       {"grandparent", "legalCity"},
                             {"ancestor", "legalCity"}, {"city", "city"},
                             {"legalCity", "legalCity"}, {"male", "hub"},
                             {"female", "terminus"},    {"hub", "hub"},
                             {"terminus", "terminus"}};
        lex.constant_pool = {"delwino", "ebadong", "borovan", "guinimanan",
                             "ersama",  "jenau",   "sangbanwol", "jalawanan"};
    } else if (target_domain == "kinship" || target_domain == "ancestor") {
        std::string target = target_domain == "kinship" ? "grandparent" : "ancestor";
        lex.predicate_map = {{"parent", "parent"},  {"grandparent", target},
                             {"ancestor", target},  {"city", "parent"},
                             {"legalCity", target}, {"male", "male"},
                             {"female", "female"},  {"hub", "male"},
                             {"terminus", "female"}};
        lex.constant_pool = {"ann", "amy", "amelia", "andy", "linda", "garin",
                             "rita", "alex", "joe", "charles"};
    } else {
        throw std::invalid_argument("unknown lexicon domain: " + target_domain);
    }
    for (const std::string& extra :
         generate_names(56, fnv1a64("lexicon:" + target_domain)))
        if (std::find(lex.constant_pool.begin(), lex.constant_pool.end(), extra) ==
            lex.constant_pool.end())
            lex.constant_pool.push_back(extra);
    return lex;
}

}  // namespace ilpnli
