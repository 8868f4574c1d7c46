#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ilpnli/augment.hpp"

namespace ilpnli {

class NonFinite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// logic mode: identifiers, parentheses, commas and ':-' each a token.
// nl mode: lowercased words plus punctuation tokens.
std::vector<std::string> tokenize(const std::string& text, const std::string& mode);

struct Vocabulary {
    std::map<std::string, int> index;  // dense from 0; UNK at 0
    std::string mode;                  // tokenizer mode of the training split

    static constexpr const char* kUnk = "<unk>";

    static Vocabulary build(const std::vector<std::string>& texts, const std::string& mode);

    int size() const { return static_cast<int>(index.size()); }
    int lookup(const std::string& token) const;
    std::vector<int> ids(const std::string& text, const std::string& mode) const;
};

struct EncoderParams {
    int dim = 64;
    int vocab_size = 0;
    std::vector<double> embedding;  // row-major vocab_size x dim

    const double* row(int token) const { return embedding.data() + token * dim; }
};

// Mean of token embeddings scaled to unit Euclidean norm.
std::vector<double> encode(const EncoderParams& params, const std::vector<int>& token_ids);
std::vector<double> encode(const EncoderParams& params, const Vocabulary& vocab,
                           const std::string& text, const std::string& mode);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

enum class LossVariant { PaperLiteral, InBatch };
LossVariant loss_variant_from_name(const std::string& name);

struct LossResult {
    double loss = 0;
    std::vector<std::vector<double>> grad_anchors;
    std::vector<std::vector<double>> grad_positives;
    std::vector<std::vector<double>> grad_negatives;
};

// Softmax-normalized triplet objective over cosine similarities with exact
// analytic gradients w.r.t. all three vector lists.
LossResult contrastive_loss(const std::vector<std::vector<double>>& anchors,
                            const std::vector<std::vector<double>>& positives,
                            const std::vector<std::vector<double>>& negatives, double tau,
                            LossVariant variant);

struct TrainConfig {
    double tau = 0.05;
    int batch_size = 16;
    int epochs = 20;
    double learning_rate = 0.5;
    uint64_t seed = 0;
    std::string loss_variant = "paper_literal";
    int dim = 64;
    int head_epochs = 2000;
    double head_learning_rate = 0.5;

    void validate() const;
};

// Maps [u; v; |u-v|] (3*dim) to 3 label logits.
struct ClassifierHead {
    int dim = 0;
    std::vector<double> weight;  // 3 x (3*dim)
    std::vector<double> bias;    // 3
};

struct EncoderModel {
    Vocabulary vocab;
    EncoderParams params;
    ClassifierHead head;
    TrainConfig config;
};

struct TrainStats {
    double first_batch_loss = 0;
    double last_epoch_mean_loss = 0;
    int contrastive_steps = 0;
};

// Contrastive SGD over the triplets, then a frozen-encoder softmax head fit
// on the labeled examples. Deterministic for a fixed (corpus, config).
// `augmented` rows (cross-domain or rendered positives/negatives) take part
// in the vocabulary and the contrastive stage but never in the head fit.
EncoderModel train(const std::vector<NliExample>& examples,
                   const std::vector<Triplet>& triplets, const TrainConfig& config,
                   TrainStats* stats = nullptr,
                   const std::vector<NliExample>& augmented = {});

Label predict_label(const EncoderModel& model, const std::string& premise_text,
                    const std::string& hypothesis_text, const std::string& mode);

void save_checkpoint(const std::string& path, const EncoderModel& model);
EncoderModel load_checkpoint(const std::string& path);

}  // namespace ilpnli
