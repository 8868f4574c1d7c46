#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ilpnli/logic.hpp"
#include "ilpnli/metarule.hpp"

namespace ilpnli {

class GenerationExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IlpDataset {
    std::string domain;
    FactBase background;
    std::vector<Atom> positives;  // K+
    std::vector<Atom> negatives;  // K-
};

struct SupportSet {
    Atom example;
    std::vector<Atom> premises;            // discovery order, deterministic
    std::set<std::string> reached_terms;   // connected-component constants
};

struct DomainConfig {
    std::string domain;  // kinship | city | ancestor
    int n_entities = 24;
    int n_examples = 32;
    uint64_t seed = 0;
    double neutral_fraction = 0.2;
    double contradiction_fraction = 0.2;

    void validate() const;  // throws std::invalid_argument
};

// Constant-to-fact adjacency over one background. Repeated premise_search
// calls against a large fact base go through this instead of rescanning the
// whole base per query. Holds pointers into the FactBase; keep it alive and
// unmodified while the index is in use.
class FactIndex {
public:
    explicit FactIndex(const FactBase& background);
    const std::vector<const Atom*>& facts_of(const std::string& constant) const;

private:
    std::map<std::string, std::vector<const Atom*>> by_constant_;
    std::vector<const Atom*> empty_;
};

// All background facts reachable from the example's constants by iterated
// shared-constant connectivity (fixpoint over the term-sharing graph).
SupportSet premise_search(const FactBase& background, const Atom& example);
SupportSet premise_search(const FactIndex& index, const Atom& example);

// Ground clause `example :- b1,...,bk` where the b's instantiate the
// metarule's body pattern within the support set. Absent when no
// instantiation exists.
std::optional<HornClause> extract_rule(const Atom& example, const SupportSet& support,
                                       const Metarule& meta);

IlpDataset generate_domain(const DomainConfig& config);

// Fixed per-domain rule schemas: chain for kinship/city, transitive closure
// for ancestor.
std::vector<HornClause> domain_rules(const std::string& domain);
std::vector<IntegrityConstraint> domain_constraints(const std::string& domain);
std::string domain_target_predicate(const std::string& domain);
std::string domain_body_predicate(const std::string& domain);
// Metarule id carried by examples of the domain when rule extraction with
// the chain pattern fails (deep ancestor chains).
std::string domain_fallback_metarule(const std::string& domain);

// Deterministic pool of distinct lowercase entity names.
std::vector<std::string> generate_names(int count, uint64_t seed);

// Structured text manifest: config echo, counts, content digest.
std::string dataset_manifest(const IlpDataset& dataset, const DomainConfig& config);

void write_dataset(const std::string& dir, const IlpDataset& dataset,
                   const DomainConfig& config);
IlpDataset read_dataset(const std::string& dir, const std::string& domain);

}  // namespace ilpnli
