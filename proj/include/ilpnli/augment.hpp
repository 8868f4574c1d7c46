#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ilpnli/ilp.hpp"
#include "ilpnli/logic.hpp"

namespace ilpnli {

class AugmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoLabelChange : public AugmentError {
public:
    using AugmentError::AugmentError;
};

class PoolExhausted : public AugmentError {
public:
    using AugmentError::AugmentError;
};

class LexiconExhausted : public AugmentError {
public:
    using AugmentError::AugmentError;
};

struct NliExample {
    std::string id;
    std::string domain;
    std::string form = "logic";  // logic | nl
    std::vector<Atom> premise_atoms;
    Atom hypothesis_atom;
    std::string premise_text;
    std::string hypothesis_text;
    Label label = Label::Neutral;
    std::string metarule_id;  // empty = none
    std::vector<std::string> provenance;
    uint64_t seed = 0;
};

enum class NegativeMode { PermuteBody, PermuteHead };

const char* negative_mode_name(NegativeMode mode);
NegativeMode negative_mode_from_name(const std::string& name);

struct Triplet {
    std::string anchor_id;
    std::string positive_id;
    std::string negative_id;
    NegativeMode negative_mode;
};

struct DomainLexicon {
    std::string domain;
    std::map<std::string, std::string> predicate_map;  // arity-preserving
    std::vector<std::string> constant_pool;            // duplicate-free
};

// Canonical logic-form text for a premise atom list: "p(a,b), p(c,d)".
std::string logic_premise_text(const std::vector<Atom>& atoms);
// Fills premise_text/hypothesis_text from the atoms (logic form).
void refresh_logic_text(NliExample& example);

// Label recomputed by the logic-core oracle under the example's domain rules
// and constraints.
Label recompute_label(const NliExample& example);

// The example's rule view: hypothesis :- premise atoms.
HornClause rule_of(const NliExample& example);

double constant_overlap(const NliExample& a, const NliExample& b);

NliExample make_hard_positive(const NliExample& anchor, const DomainLexicon& target,
                              uint64_t seed);
NliExample make_hard_negative(const NliExample& anchor, NegativeMode mode, uint64_t seed);
NliExample add_distractors(const NliExample& example, const FactBase& pool, int k,
                           uint64_t seed);
// Same contract over a pre-flattened pool; avoids re-walking a large set on
// every call when building big corpora.
NliExample add_distractors(const NliExample& example, const std::vector<Atom>& pool,
                           int k, uint64_t seed);
NliExample permute_premise(const NliExample& example, uint64_t seed);

struct CorpusConfig {
    uint64_t seed = 0;
    double permute_rate = 0.35;     // extra premise-permuted rows
    double distractor_rate = 0.35;  // extra distractor-injected rows
    int distractor_k = 2;
};

// One base example per K+/K- atom (neutral hypotheses paired with a donor
// premise from another component), plus permuted/distractor variants.
std::vector<NliExample> build_corpus(const IlpDataset& dataset, const CorpusConfig& config);

struct TripletConfig {
    uint64_t seed = 0;
    int max_triplets = -1;            // -1 = every eligible anchor
    double overlap_threshold = 0.8;   // anchor/negative constant overlap
};

// Appends generated positives/negatives to the corpus and returns the
// triplet index. Anchors are entailment examples whose ground rule
// instantiates their metarule.
std::vector<Triplet> build_triplets(std::vector<NliExample>& corpus,
                                    const std::vector<DomainLexicon>& lexicons,
                                    const TripletConfig& config);

// Cross-domain lexicon targeting `target_domain`, mapping the predicates of
// every built-in domain and carrying a fresh constant pool.
DomainLexicon builtin_lexicon(const std::string& target_domain);

}  // namespace ilpnli
