#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ilpnli/augment.hpp"
#include "ilpnli/logic.hpp"

namespace ilpnli {

class RenderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingTemplate : public RenderError {
public:
    explicit MissingTemplate(const std::string& predicate)
        : RenderError("no template for predicate '" + predicate + "'"), predicate(predicate) {}

    std::string predicate;
};

class MissingDisplayName : public RenderError {
public:
    explicit MissingDisplayName(const std::string& constant)
        : RenderError("no display name for constant '" + constant + "'"), constant(constant) {}

    std::string constant;
};

enum class FormulaKind { Atom, Not, And, Or, Implies };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    FormulaKind kind;
    Atom atom;                        // FormulaKind::Atom only
    std::vector<FormulaPtr> children; // ordered; surface order matters
};

FormulaPtr f_atom(Atom a);
FormulaPtr f_not(FormulaPtr child);
FormulaPtr f_and(std::vector<FormulaPtr> children);
FormulaPtr f_or(std::vector<FormulaPtr> children);
FormulaPtr f_implies(FormulaPtr lhs, FormulaPtr rhs);

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b);
std::string formula_str(const FormulaPtr& f);

// Collapses nested And-in-And / Or-in-Or (the tree simplification step).
FormulaPtr flatten(const FormulaPtr& f);

enum class RewriteRule { ImplicationElim, CommuteConjunction, DoubleNegation };

// Logically equivalent transform; identity when the rule applies nowhere.
// ImplicationElim: (b1 & ... & bn -> h)  =>  (~b1 | ... | ~bn | h), all nodes.
// CommuteConjunction: permutes the children of one seeded And node.
// DoubleNegation: cancels every ~~x.
FormulaPtr rewrite_equivalent(const FormulaPtr& f, RewriteRule rule, uint64_t seed);

struct TemplateSet {
    std::string domain;
    // Surface strings with argument slots {0},{1},...; every slot exactly once.
    std::map<std::string, std::vector<std::string>> templates;
    // Continuation sentences used when an atom chains on the previous one
    // (its first argument equals the previous atom's last argument). These
    // reference only the trailing slot.
    std::map<std::string, std::vector<std::string>> chain_templates;
    std::vector<std::string> and_connectives;
    std::vector<std::string> or_connectives;
    std::vector<std::string> not_wrappers;  // contain {0}
    std::vector<std::string> therefore_connectives;
    std::map<std::string, std::string> display_names;  // overrides

    void validate() const;  // throws std::invalid_argument
};

// Override, or the constant with its first letter capitalized.
std::string display_name(const TemplateSet& templates, const std::string& constant);

std::string linearize(const FormulaPtr& ast, const TemplateSet& templates, uint64_t seed);
std::string linearize_hypothesis(const Atom& hypothesis, const TemplateSet& templates,
                                 uint64_t seed);

// nl-form copy: rendered texts, same atoms and label, "-nl" id suffix.
NliExample render_example(const NliExample& example, const TemplateSet& templates,
                          double equivalence_rate, uint64_t seed);

// Variant triplets whose positive is the rendered "-nl" row, when the corpus
// has one. Pairing logic anchors with rendered positives is what carries the
// contrastive signal across surface forms. Existing "-nl"-positive triplets
// are dropped first, so the extension is idempotent.
std::vector<Triplet> with_rendered_positives(const std::vector<Triplet>& triplets,
                                             const std::vector<NliExample>& corpus);

TemplateSet builtin_templates(const std::string& domain);

TemplateSet parse_template_set(const std::string& text);
std::string serialize_template_set(const TemplateSet& templates);

}  // namespace ilpnli
