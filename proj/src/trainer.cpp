#include "ilpnli/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ilpnli/rng.hpp"
#include "json.hpp"

namespace ilpnli {

namespace {

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text, const std::string& mode) {
    if (mode != "logic" && mode != "nl")
        throw std::invalid_argument("unknown tokenizer mode: " + mode);
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (ident_char(c)) {
            size_t j = i;
            while (j < text.size() && ident_char(text[j])) ++j;
            std::string tok = text.substr(i, j - i);
            if (mode == "nl")
                for (char& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            out.push_back(tok);
            i = j;
            continue;
        }
        if (mode == "logic" && c == ':' && i + 1 < text.size() && text[i + 1] == '-') {
            out.push_back(":-");
            i += 2;
            continue;
        }
        out.push_back(std::string(1, c));
        ++i;
    }
    return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, const std::string& mode) {
    Vocabulary vocab;
    vocab.mode = mode;
    vocab.index[kUnk] = 0;
    int next = 1;
    for (const auto& text : texts)
        for (const auto& tok : tokenize(text, mode))
            if (vocab.index.emplace(tok, next).second) ++next;
    return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? 0 : it->second;
}

std::vector<int> Vocabulary::ids(const std::string& text, const std::string& mode) const {
    std::vector<int> out;
    for (const auto& tok : tokenize(text, mode)) out.push_back(lookup(tok));
    return out;
}

std::vector<double> encode(const EncoderParams& params, const std::vector<int>& token_ids) {
    if (token_ids.empty()) throw EmptyInput("cannot encode an empty token sequence");
    std::vector<double> mean(params.dim, 0.0);
    for (int t : token_ids) {
        if (t < 0 || t >= params.vocab_size)
            throw std::out_of_range("token id out of range: " + std::to_string(t));
        const double* row = params.row(t);
        for (int d = 0; d < params.dim; ++d) mean[d] += row[d];
    }
    for (double& v : mean) v /= static_cast<double>(token_ids.size());
    double norm = std::sqrt(std::inner_product(mean.begin(), mean.end(), mean.begin(), 0.0));
    if (norm > 0)
        for (double& v : mean) v /= norm;
    return mean;
}

std::vector<double> encode(const EncoderParams& params, const Vocabulary& vocab,
                           const std::string& text, const std::string& mode) {
    return encode(params, vocab.ids(text, mode));
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

LossVariant loss_variant_from_name(const std::string& name) {
    if (name == "paper_literal") return LossVariant::PaperLiteral;
    if (name == "in_batch") return LossVariant::InBatch;
    throw std::invalid_argument("unknown loss variant: " + name);
}

namespace {

// d cos(x, y) / dx accumulated into gx with coefficient c.
void add_cosine_grad(const std::vector<double>& x, const std::vector<double>& y, double c,
                     std::vector<double>& gx) {
    double dot = 0, nx2 = 0, ny2 = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx2 += x[i] * x[i];
        ny2 += y[i] * y[i];
    }
    double nx = std::sqrt(nx2), ny = std::sqrt(ny2);
    if (nx == 0 || ny == 0) return;
    double a = 1.0 / (nx * ny);
    double b = dot / (nx2 * nx * ny);
    for (size_t i = 0; i < x.size(); ++i) gx[i] += c * (a * y[i] - b * x[i]);
}

}  // namespace

LossResult contrastive_loss(const std::vector<std::vector<double>>& anchors,
                            const std::vector<std::vector<double>>& positives,
                            const std::vector<std::vector<double>>& negatives, double tau,
                            LossVariant variant) {
    size_t n = anchors.size();
    if (n == 0) throw EmptyInput("contrastive_loss: empty batch");
    if (positives.size() != n || negatives.size() != n)
        throw std::invalid_argument("contrastive_loss: batch size mismatch");
    if (!(tau > 0)) throw std::invalid_argument("contrastive_loss: tau must be positive");

    LossResult result;
    size_t dim = anchors[0].size();
    result.grad_anchors.assign(n, std::vector<double>(dim, 0.0));
    result.grad_positives.assign(n, std::vector<double>(dim, 0.0));
    result.grad_negatives.assign(n, std::vector<double>(dim, 0.0));

    if (variant == LossVariant::PaperLiteral) {
        std::vector<double> sp(n), sn(n);
        double smax = -1e300;
        for (size_t i = 0; i < n; ++i) {
            sp[i] = cosine(anchors[i], positives[i]);
            sn[i] = cosine(anchors[i], negatives[i]);
            smax = std::max({smax, sp[i] / tau, sn[i] / tau});
        }
        double denom = 0;
        for (size_t i = 0; i < n; ++i)
            denom += std::exp(sp[i] / tau - smax) + std::exp(sn[i] / tau - smax);
        double mean_sp = 0;
        for (size_t i = 0; i < n; ++i) mean_sp += sp[i];
        mean_sp /= static_cast<double>(n);
        result.loss = std::log(denom) + smax - mean_sp / tau;
        for (size_t i = 0; i < n; ++i) {
            double gp = std::exp(sp[i] / tau - smax) / (tau * denom) -
                        1.0 / (static_cast<double>(n) * tau);
            double gn = std::exp(sn[i] / tau - smax) / (tau * denom);
            add_cosine_grad(anchors[i], positives[i], gp, result.grad_anchors[i]);
            add_cosine_grad(positives[i], anchors[i], gp, result.grad_positives[i]);
            add_cosine_grad(anchors[i], negatives[i], gn, result.grad_anchors[i]);
            add_cosine_grad(negatives[i], anchors[i], gn, result.grad_negatives[i]);
        }
        return result;
    }

    // In-batch: each anchor contrasts its own positive against every positive
    // and negative in the batch.
    std::vector<std::vector<double>> sp(n, std::vector<double>(n));
    std::vector<std::vector<double>> sn(n, std::vector<double>(n));
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
        double smax = -1e300;
        for (size_t j = 0; j < n; ++j) {
            sp[i][j] = cosine(anchors[i], positives[j]);
            sn[i][j] = cosine(anchors[i], negatives[j]);
            smax = std::max({smax, sp[i][j] / tau, sn[i][j] / tau});
        }
        double denom = 0;
        for (size_t j = 0; j < n; ++j)
            denom += std::exp(sp[i][j] / tau - smax) + std::exp(sn[i][j] / tau - smax);
        total += std::log(denom) + smax - sp[i][i] / tau;
        for (size_t j = 0; j < n; ++j) {
            double gp = std::exp(sp[i][j] / tau - smax) / (tau * denom);
            if (i == j) gp -= 1.0 / tau;
            double gn = std::exp(sn[i][j] / tau - smax) / (tau * denom);
            gp /= static_cast<double>(n);
            gn /= static_cast<double>(n);
            add_cosine_grad(anchors[i], positives[j], gp, result.grad_anchors[i]);
            add_cosine_grad(positives[j], anchors[i], gp, result.grad_positives[j]);
            add_cosine_grad(anchors[i], negatives[j], gn, result.grad_anchors[i]);
            add_cosine_grad(negatives[j], anchors[i], gn, result.grad_negatives[j]);
        }
    }
    result.loss = total / static_cast<double>(n);
    return result;
}

void TrainConfig::validate() const {
    if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
    if (dim < 1) throw std::invalid_argument("dim must be >= 1");
    if (head_epochs < 0) throw std::invalid_argument("head_epochs must be >= 0");
    if (!(head_learning_rate > 0)) throw std::invalid_argument("head_learning_rate must be positive");
    loss_variant_from_name(loss_variant);
}

namespace {

std::string example_text(const NliExample& ex) {
    return ex.premise_text + " " + ex.hypothesis_text;
}

struct EncodedSeq {
    std::vector<int> tokens;
    std::vector<double> mean;  // before normalization
    double norm = 0;
    std::vector<double> unit;
};

EncodedSeq encode_forward(const EncoderParams& params, const std::vector<int>& tokens) {
    EncodedSeq seq;
    seq.tokens = tokens;
    if (tokens.empty()) throw EmptyInput("cannot encode an empty token sequence");
    seq.mean.assign(params.dim, 0.0);
    for (int t : tokens) {
        const double* row = params.row(t);
        for (int d = 0; d < params.dim; ++d) seq.mean[d] += row[d];
    }
    for (double& v : seq.mean) v /= static_cast<double>(tokens.size());
    seq.norm = std::sqrt(std::inner_product(seq.mean.begin(), seq.mean.end(), seq.mean.begin(), 0.0));
    seq.unit = seq.mean;
    if (seq.norm > 0)
        for (double& v : seq.unit) v /= seq.norm;
    return seq;
}

// Backprop dL/d(unit vector) through the normalization and mean pooling into
// the embedding table gradient.
void encode_backward(const EncoderParams& params, const EncodedSeq& seq,
                     const std::vector<double>& grad_unit, std::vector<double>& grad_embedding) {
    if (seq.norm == 0) return;
    double vg = 0;
    for (int d = 0; d < params.dim; ++d) vg += seq.unit[d] * grad_unit[d];
    std::vector<double> grad_mean(params.dim);
    for (int d = 0; d < params.dim; ++d)
        grad_mean[d] = (grad_unit[d] - vg * seq.unit[d]) / seq.norm;
    double scale = 1.0 / static_cast<double>(seq.tokens.size());
    for (int t : seq.tokens)
        for (int d = 0; d < params.dim; ++d)
            grad_embedding[static_cast<size_t>(t) * params.dim + d] += grad_mean[d] * scale;
}

void check_finite(double v, int step) {
    if (!std::isfinite(v))
        throw NonFinite("non-finite value at contrastive step " + std::to_string(step));
}

std::vector<double> pair_features(const std::vector<double>& u, const std::vector<double>& v) {
    std::vector<double> f;
    f.reserve(u.size() * 3);
    f.insert(f.end(), u.begin(), u.end());
    f.insert(f.end(), v.begin(), v.end());
    for (size_t d = 0; d < u.size(); ++d) f.push_back(std::fabs(u[d] - v[d]));
    return f;
}

std::vector<double> head_logits(const ClassifierHead& head, const std::vector<double>& features) {
    std::vector<double> logits(3, 0.0);
    size_t w = features.size();
    for (int k = 0; k < 3; ++k) {
        double s = head.bias[k];
        for (size_t d = 0; d < w; ++d) s += head.weight[k * w + d] * features[d];
        logits[k] = s;
    }
    return logits;
}

}  // namespace

EncoderModel train(const std::vector<NliExample>& examples, const std::vector<Triplet>& triplets,
                   const TrainConfig& config, TrainStats* stats,
                   const std::vector<NliExample>& augmented) {
    config.validate();
    if (examples.empty()) throw EmptyInput("train: no examples");

    EncoderModel model;
    model.config = config;
    model.vocab.index[Vocabulary::kUnk] = 0;
    bool logic_seen = false, nl_seen = false;
    int next = 1;
    for (const auto* group : {&examples, &augmented})
        for (const auto& ex : *group) {
            (ex.form == "nl" ? nl_seen : logic_seen) = true;
            for (const auto& tok : tokenize(example_text(ex), ex.form))
                if (model.vocab.index.emplace(tok, next).second) ++next;
        }
    model.vocab.mode = (logic_seen && nl_seen) ? "mixed" : (nl_seen ? "nl" : "logic");

    model.params.dim = config.dim;
    model.params.vocab_size = model.vocab.size();
    model.params.embedding.resize(static_cast<size_t>(model.params.vocab_size) * config.dim);
    Rng init_rng(mix_seed(config.seed, fnv1a64("encoder-init")));
    double span = 0.5 / static_cast<double>(config.dim);
    for (double& v : model.params.embedding) v = (init_rng.next_double() * 2.0 - 1.0) * span;

    std::map<std::string, const NliExample*> by_id;
    for (const auto* group : {&examples, &augmented})
        for (const auto& ex : *group) by_id[ex.id] = &ex;
    auto find_example = [&](const std::string& id) -> const NliExample& {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw std::invalid_argument("triplet references unknown id: " + id);
        return *it->second;
    };

    std::map<std::string, std::vector<int>> token_cache;
    auto tokens_of = [&](const NliExample& ex) -> const std::vector<int>& {
        auto it = token_cache.find(ex.id);
        if (it != token_cache.end()) return it->second;
        return token_cache.emplace(ex.id, model.vocab.ids(example_text(ex), ex.form)).first->second;
    };

    LossVariant variant = loss_variant_from_name(config.loss_variant);
    Rng order_rng(mix_seed(config.seed, fnv1a64("batch-order")));
    int step = 0;
    double epoch_loss = 0;
    int epoch_batches = 0;
    if (stats) *stats = TrainStats{};

    std::vector<size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), size_t{0});
    for (int epoch = 0; epoch < config.epochs && !triplets.empty(); ++epoch) {
        order_rng.shuffle(order);
        epoch_loss = 0;
        epoch_batches = 0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<EncodedSeq> ea, ep, en;
            std::vector<std::vector<double>> ua, up, un;
            for (size_t k = start; k < end; ++k) {
                const Triplet& t = triplets[order[k]];
                ea.push_back(encode_forward(model.params, tokens_of(find_example(t.anchor_id))));
                ep.push_back(encode_forward(model.params, tokens_of(find_example(t.positive_id))));
                en.push_back(encode_forward(model.params, tokens_of(find_example(t.negative_id))));
                ua.push_back(ea.back().unit);
                up.push_back(ep.back().unit);
                un.push_back(en.back().unit);
            }
            LossResult res = contrastive_loss(ua, up, un, config.tau, variant);
            check_finite(res.loss, step);
            if (stats && step == 0) stats->first_batch_loss = res.loss;
            epoch_loss += res.loss;
            ++epoch_batches;

            std::vector<double> grad(model.params.embedding.size(), 0.0);
            for (size_t k = 0; k < ea.size(); ++k) {
                encode_backward(model.params, ea[k], res.grad_anchors[k], grad);
                encode_backward(model.params, ep[k], res.grad_positives[k], grad);
                encode_backward(model.params, en[k], res.grad_negatives[k], grad);
            }
            for (size_t i = 0; i < grad.size(); ++i) {
                check_finite(grad[i], step);
                model.params.embedding[i] -= config.learning_rate * grad[i];
            }
            ++step;
        }
    }
    if (stats) {
        stats->contrastive_steps = step;
        stats->last_epoch_mean_loss = epoch_batches ? epoch_loss / epoch_batches : 0.0;
    }

    // Classifier head on frozen encoder outputs.
    model.head.dim = config.dim;
    size_t w = static_cast<size_t>(config.dim) * 3;
    model.head.weight.assign(3 * w, 0.0);
    model.head.bias.assign(3, 0.0);

    std::vector<std::vector<double>> feats;
    std::vector<int> labels;
    feats.reserve(examples.size());
    for (const auto& ex : examples) {
        auto u = encode(model.params, model.vocab.ids(ex.premise_text, ex.form));
        auto v = encode(model.params, model.vocab.ids(ex.hypothesis_text, ex.form));
        feats.push_back(pair_features(u, v));
        labels.push_back(static_cast<int>(ex.label));
    }
    double inv_n = 1.0 / static_cast<double>(feats.size());
    for (int epoch = 0; epoch < config.head_epochs; ++epoch) {
        std::vector<double> gw(3 * w, 0.0), gb(3, 0.0);
        for (size_t i = 0; i < feats.size(); ++i) {
            auto logits = head_logits(model.head, feats[i]);
            double mx = *std::max_element(logits.begin(), logits.end());
            double z = 0;
            for (double l : logits) z += std::exp(l - mx);
            for (int k = 0; k < 3; ++k) {
                double p = std::exp(logits[k] - mx) / z;
                double delta = (p - (k == labels[i] ? 1.0 : 0.0)) * inv_n;
                gb[k] += delta;
                for (size_t d = 0; d < w; ++d) gw[k * w + d] += delta * feats[i][d];
            }
        }
        for (size_t i = 0; i < gw.size(); ++i) {
            check_finite(gw[i], step);
            model.head.weight[i] -= config.head_learning_rate * gw[i];
        }
        for (int k = 0; k < 3; ++k) model.head.bias[k] -= config.head_learning_rate * gb[k];
    }
    return model;
}

Label predict_label(const EncoderModel& model, const std::string& premise_text,
                    const std::string& hypothesis_text, const std::string& mode) {
    auto u = encode(model.params, model.vocab.ids(premise_text, mode));
    auto v = encode(model.params, model.vocab.ids(hypothesis_text, mode));
    auto logits = head_logits(model.head, pair_features(u, v));
    int best = 0;
    for (int k = 1; k < 3; ++k)
        if (logits[k] > logits[best]) best = k;
    return static_cast<Label>(best);
}

namespace {

uint64_t model_digest(const EncoderModel& model) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& [tok, idx] : model.vocab.index) os << tok << ':' << idx << ';';
    for (double v : model.params.embedding) os << v << ',';
    for (double v : model.head.weight) os << v << ',';
    for (double v : model.head.bias) os << v << ',';
    return fnv1a64(os.str());
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderModel& model) {
    nlohmann::json j;
    j["version"] = 1;
    j["config"] = {{"tau", model.config.tau},
                   {"batch_size", model.config.batch_size},
                   {"epochs", model.config.epochs},
                   {"learning_rate", model.config.learning_rate},
                   {"seed", model.config.seed},
                   {"loss_variant", model.config.loss_variant},
                   {"dim", model.config.dim},
                   {"head_epochs", model.config.head_epochs},
                   {"head_learning_rate", model.config.head_learning_rate}};
    j["vocab"] = {{"mode", model.vocab.mode}, {"index", model.vocab.index}};
    j["encoder"] = {{"dim", model.params.dim},
                    {"vocab_size", model.params.vocab_size},
                    {"embedding", model.params.embedding}};
    j["head"] = {{"dim", model.head.dim},
                 {"weight", model.head.weight},
                 {"bias", model.head.bias}};
    j["digest"] = model_digest(model);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out << j.dump(2) << '\n';
}

EncoderModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("version").get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint version");
    EncoderModel model;
    const auto& c = j.at("config");
    model.config.tau = c.at("tau").get<double>();
    model.config.batch_size = c.at("batch_size").get<int>();
    model.config.epochs = c.at("epochs").get<int>();
    model.config.learning_rate = c.at("learning_rate").get<double>();
    model.config.seed = c.at("seed").get<uint64_t>();
    model.config.loss_variant = c.at("loss_variant").get<std::string>();
    model.config.dim = c.at("dim").get<int>();
    model.config.head_epochs = c.at("head_epochs").get<int>();
    model.config.head_learning_rate = c.at("head_learning_rate").get<double>();
    model.vocab.mode = j.at("vocab").at("mode").get<std::string>();
    model.vocab.index = j.at("vocab").at("index").get<std::map<std::string, int>>();
    model.params.dim = j.at("encoder").at("dim").get<int>();
    model.params.vocab_size = j.at("encoder").at("vocab_size").get<int>();
    model.params.embedding = j.at("encoder").at("embedding").get<std::vector<double>>();
    model.head.dim = j.at("head").at("dim").get<int>();
    model.head.weight = j.at("head").at("weight").get<std::vector<double>>();
    model.head.bias = j.at("head").at("bias").get<std::vector<double>>();
    if (j.at("digest").get<uint64_t>() != model_digest(model))
        throw std::runtime_error("checkpoint digest mismatch: " + path);
    if (model.params.embedding.size() !=
        static_cast<size_t>(model.params.vocab_size) * model.params.dim)
        throw std::runtime_error("checkpoint embedding shape mismatch: " + path);
    return model;
}

}  // namespace ilpnli
