#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "ilpnli/rng.hpp"
#include "ilpnli/trainer.hpp"

using namespace ilpnli;

namespace {

std::vector<std::vector<double>> random_vectors(Rng& rng, size_t n, size_t dim) {
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (auto& v : out)
        for (auto& x : v) x = rng.next_double() * 2.0 - 1.0;
    return out;
}

double loss_only(std::vector<std::vector<double>> a, std::vector<std::vector<double>> p,
                 std::vector<std::vector<double>> n, double tau, LossVariant variant) {
    return contrastive_loss(a, p, n, tau, variant).loss;
}

NliExample tiny_example(const std::string& id, const std::string& premise,
                        const std::string& hypothesis, Label label) {
    NliExample ex;
    ex.id = id;
    ex.domain = "kinship";
    ex.premise_atoms = {parse_atom(premise)};
    ex.hypothesis_atom = parse_atom(hypothesis);
    ex.premise_text = premise;
    ex.hypothesis_text = hypothesis;
    ex.label = label;
    return ex;
}

std::vector<NliExample> tiny_corpus() {
    return {
        tiny_example("a1", "parent(ann,amy)", "grandparent(ann,rita)", Label::Entailment),
        tiny_example("a2", "parent(ann,amy)", "grandparent(rita,ann)", Label::Contradiction),
        tiny_example("a3", "parent(bob,joe)", "grandparent(linda,garin)", Label::Neutral),
        tiny_example("a4", "parent(joe,sue)", "grandparent(joe,ann)", Label::Entailment),
    };
}

}  // namespace

TEST_CASE("tokenizers split logic and nl text as documented") {
    auto logic = tokenize("gp(ann,rita) :- p(ann,amy).", "logic");
    std::vector<std::string> want = {"gp", "(", "ann", ",", "rita", ")", ":-",
                                     "p",  "(", "ann", ",", "amy",  ")", "."};
    CHECK(logic == want);
    auto nl = tokenize("From Delwino, one can take a train to Ebadong.", "nl");
    std::vector<std::string> want_nl = {"from", "delwino", ",", "one",   "can", "take",
                                        "a",    "train",   "to", "ebadong", "."};
    CHECK(nl == want_nl);
    CHECK_THROWS_AS(tokenize("x", "morse"), std::invalid_argument);
}

TEST_CASE("vocabulary is dense with UNK at zero and frozen lookups") {
    Vocabulary v = Vocabulary::build({"p(a,b)", "q(a,c)"}, "logic");
    CHECK(v.index.at(Vocabulary::kUnk) == 0);
    std::set<int> ids;
    for (const auto& [tok, id] : v.index) ids.insert(id);
    CHECK(static_cast<int>(ids.size()) == v.size());
    CHECK(*ids.begin() == 0);
    CHECK(*ids.rbegin() == v.size() - 1);
    CHECK(v.lookup("zebra") == 0);
    CHECK(v.lookup("p") != 0);
}

TEST_CASE("encode mean-pools to the unit sphere and ignores order") {
    EncoderParams params;
    params.dim = 4;
    params.vocab_size = 5;
    Rng rng(410);
    params.embedding.resize(20);
    for (auto& x : params.embedding) x = rng.next_double() - 0.5;
    auto e1 = encode(params, {1, 2, 3});
    auto e2 = encode(params, {3, 1, 2});
    double norm = 0;
    for (double x : e1) norm += x * x;
    CHECK(std::abs(norm - 1.0) < 1e-12);
    CHECK(e1 == e2);
    CHECK_THROWS_AS(encode(params, {}), EmptyInput);
    CHECK_THROWS_AS(encode(params, {7}), std::out_of_range);
}

TEST_CASE("uniform similarities give loss ln(2N)") {
    for (size_t n : {1u, 4u, 16u}) {
        std::vector<std::vector<double>> same(n, {0.6, 0.8});
        for (LossVariant v : {LossVariant::PaperLiteral, LossVariant::InBatch}) {
            double l = loss_only(same, same, same, 0.05, v);
            CHECK(std::abs(l - std::log(2.0 * n)) < 1e-9);
        }
    }
}

TEST_CASE("hand-computed single-pair case") {
    // cos(a,p) = 1, cos(a,n) = -1, tau = 1: loss = ln(1 + e^{-2}).
    std::vector<std::vector<double>> a = {{1.0, 0.0}};
    std::vector<std::vector<double>> p = {{2.0, 0.0}};
    std::vector<std::vector<double>> n = {{-3.0, 0.0}};
    double want = std::log(1.0 + std::exp(-2.0));
    CHECK(std::abs(loss_only(a, p, n, 1.0, LossVariant::PaperLiteral) - want) < 1e-9);
    CHECK(std::abs(loss_only(a, p, n, 1.0, LossVariant::InBatch) - want) < 1e-9);
}

TEST_CASE("loss rejects bad batches") {
    std::vector<std::vector<double>> a = {{1.0, 0.0}};
    CHECK_THROWS_AS(contrastive_loss({}, {}, {}, 1.0, LossVariant::PaperLiteral), EmptyInput);
    CHECK_THROWS_AS(contrastive_loss(a, {}, a, 1.0, LossVariant::PaperLiteral),
                    std::invalid_argument);
    CHECK_THROWS_AS(contrastive_loss(a, a, a, 0.0, LossVariant::PaperLiteral),
                    std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(411);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        size_t n = 1 + rng.below(4);
        size_t dim = 3 + rng.below(4);
        double tau = 0.2 + rng.next_double();
        LossVariant variant = rng.chance(0.5) ? LossVariant::PaperLiteral : LossVariant::InBatch;
        auto a = random_vectors(rng, n, dim);
        auto p = random_vectors(rng, n, dim);
        auto g = random_vectors(rng, n, dim);
        LossResult res = contrastive_loss(a, p, g, tau, variant);

        auto check_block = [&](std::vector<std::vector<double>>& block,
                               const std::vector<std::vector<double>>& grads) {
            size_t i = rng.below(n);
            size_t d = rng.below(dim);
            double keep = block[i][d];
            block[i][d] = keep + h;
            double up = loss_only(a, p, g, tau, variant);
            block[i][d] = keep - h;
            double down = loss_only(a, p, g, tau, variant);
            block[i][d] = keep;
            double fd = (up - down) / (2 * h);
            double scale = std::max({1.0, std::abs(fd), std::abs(grads[i][d])});
            REQUIRE(std::abs(fd - grads[i][d]) / scale < 1e-4);
        };
        check_block(a, res.grad_anchors);
        check_block(p, res.grad_positives);
        check_block(g, res.grad_negatives);
    }
}

TEST_CASE("training is deterministic and lowers the contrastive loss") {
    auto corpus = tiny_corpus();
    std::vector<Triplet> triplets = {{"a1", "a4", "a2", NegativeMode::PermuteHead}};
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 30;
    cfg.seed = 2;
    TrainStats s1, s2;
    EncoderModel m1 = train(corpus, triplets, cfg, &s1);
    EncoderModel m2 = train(corpus, triplets, cfg, &s2);
    CHECK(m1.params.embedding == m2.params.embedding);
    CHECK(m1.head.weight == m2.head.weight);
    CHECK(s1.last_epoch_mean_loss < s1.first_batch_loss);

    cfg.seed = 3;
    EncoderModel m3 = train(corpus, triplets, cfg);
    CHECK(m1.params.embedding != m3.params.embedding);
}

TEST_CASE("augmented rows reach the contrastive stage but not the head fit") {
    auto corpus = tiny_corpus();
    NliExample aug = tiny_example("aug1", "city(delwino,ebadong)", "legalCity(delwino,borovan)",
                                  Label::Entailment);
    std::vector<Triplet> triplets = {{"a1", "aug1", "a2", NegativeMode::PermuteHead}};
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 10;
    cfg.seed = 4;

    // Without the augmented row the triplet's positive id is unknown.
    CHECK_THROWS_AS(train(corpus, triplets, cfg), std::invalid_argument);

    EncoderModel with_aug = train(corpus, triplets, cfg, nullptr, {aug});
    CHECK(with_aug.vocab.lookup("delwino") != 0);

    // The augmented vocabulary entries exist but only triplet training moved
    // the embedding: a no-triplet run with the same rows stays at init.
    EncoderModel frozen = train(corpus, {}, cfg, nullptr, {aug});
    CHECK(frozen.vocab.index == with_aug.vocab.index);
    CHECK(frozen.params.embedding != with_aug.params.embedding);
}

TEST_CASE("training config is validated before work starts") {
    TrainConfig cfg;
    cfg.tau = 0;
    CHECK_THROWS_AS(train(tiny_corpus(), {}, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.loss_variant = "focal";
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    CHECK_THROWS_AS(train({}, {}, cfg), EmptyInput);
}

TEST_CASE("untrained head predicts entailment on ties") {
    auto corpus = tiny_corpus();
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 0;
    cfg.head_epochs = 0;  // head stays all-zero, every logit ties at 0
    EncoderModel m = train(corpus, {}, cfg);
    CHECK(predict_label(m, "parent(ann,amy)", "grandparent(ann,rita)", "logic") ==
          Label::Entailment);
}

TEST_CASE("the trained head fits the toy corpus") {
    auto corpus = tiny_corpus();
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 0;
    cfg.head_epochs = 400;
    EncoderModel m = train(corpus, {}, cfg);
    int hits = 0;
    for (const auto& ex : corpus)
        hits += predict_label(m, ex.premise_text, ex.hypothesis_text, ex.form) == ex.label;
    CHECK(hits >= 3);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    auto corpus = tiny_corpus();
    std::vector<Triplet> triplets = {{"a1", "a4", "a2", NegativeMode::PermuteBody}};
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 5;
    EncoderModel m = train(corpus, triplets, cfg);
    auto path = std::filesystem::temp_directory_path() / "ilpnli-test-checkpoint.json";
    save_checkpoint(path.string(), m);
    EncoderModel back = load_checkpoint(path.string());
    CHECK(back.params.embedding == m.params.embedding);
    CHECK(back.head.weight == m.head.weight);
    CHECK(back.head.bias == m.head.bias);
    CHECK(back.vocab.index == m.vocab.index);
    CHECK(back.config.tau == m.config.tau);

    // Tampering breaks the digest.
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto spot = text.find("\"embedding\"");
    REQUIRE(spot != std::string::npos);
    spot = text.find(',', spot);
    REQUIRE(spot != std::string::npos);
    text[spot - 1] = text[spot - 1] == '7' ? '8' : '7';
    std::ofstream(path) << text;
    CHECK_THROWS(load_checkpoint(path.string()));
    std::filesystem::remove(path);
}
