#pragma once

#include <set>
#include <string>
#include <vector>

#include "ilpnli/trainer.hpp"

namespace ilpnli {

class LengthMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingSplit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SplitOverlap : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double accuracy(const std::vector<Label>& predictions, const std::vector<Label>& gold);

// Average ranks with ties sharing the mean rank, 1-based.
std::vector<double> average_ranks(const std::vector<double>& xs);

// Pearson correlation of average ranks.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

enum class Split { Train, Val, Test };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

// Derived examples (-nl, -pos, -neg, -perm, -dist suffixes) hash with their
// source example so a triplet never straddles a split boundary.
std::string base_example_id(const std::string& id);
Split split_of(const std::string& id);

struct CorpusSlice {
    std::set<std::string> domains;
    std::string form;  // "logic" or "nl"

    void validate() const;
    bool contains(const NliExample& ex) const;
    std::string str() const;
};

struct ExperimentSpec {
    std::string name;
    CorpusSlice train;
    CorpusSlice test;
    std::string train_split = "train";
    std::string test_split = "test";
    TrainConfig trainer;
    bool use_triplets = true;  // false = head-only baseline

    void validate() const;
};

struct EvalCell {
    std::string name;
    std::string train_desc;
    std::string test_desc;
    std::string model;
    double accuracy = 0;
    double spearman = 0;
    bool spearman_defined = true;
    int count = 0;
};

struct EvalReport {
    std::vector<EvalCell> cells;
    uint64_t corpus_digest = 0;
    uint64_t triplet_digest = 0;
    std::string spearman_protocol =
        "cosine(premise, hypothesis) vs label ordinals (contradiction=0, neutral=1, entailment=2)";

    std::string to_json() const;
    // Train | Test | Model | Accuracy | Spearman | N
    std::string table_text() const;
};

uint64_t corpus_digest(const std::vector<NliExample>& corpus);
uint64_t triplet_digest(const std::vector<Triplet>& triplets);

EvalCell run_experiment(const ExperimentSpec& spec, const std::vector<NliExample>& corpus,
                        const std::vector<Triplet>& triplets, EncoderModel* model_out = nullptr);

EvalReport run_grid(const std::vector<ExperimentSpec>& specs,
                    const std::vector<NliExample>& corpus, const std::vector<Triplet>& triplets);

}  // namespace ilpnli
