#include "ilpnli/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "ilpnli/rng.hpp"
#include "json.hpp"

namespace ilpnli {

double accuracy(const std::vector<Label>& predictions, const std::vector<Label>& gold) {
    if (predictions.size() != gold.size() || predictions.empty())
        throw LengthMismatch("accuracy: need equal non-empty prediction/gold lists");
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == gold[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::vector<double> average_ranks(const std::vector<double>& xs) {
    size_t n = xs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw LengthMismatch("spearman: need equal lists of length >= 2");
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(xs) || constant(ys))
        throw DegenerateInput("spearman: all-constant input series");
    auto rx = average_ranks(xs);
    auto ry = average_ranks(ys);
    double n = static_cast<double>(xs.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    return sxy / std::sqrt(sxx * syy);
}

const char* split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw std::invalid_argument("unknown split: " + name);
}

std::string base_example_id(const std::string& id) {
    static const char* suffixes[] = {"-nl", "-pos", "-neg", "-perm", "-dist"};
    std::string base = id;
    bool stripped = true;
    while (stripped) {
        stripped = false;
        for (const char* s : suffixes) {
            size_t len = std::strlen(s);
            if (base.size() > len && base.compare(base.size() - len, len, s) == 0) {
                base.resize(base.size() - len);
                stripped = true;
            }
        }
    }
    return base;
}

Split split_of(const std::string& id) {
    uint64_t bucket = fnv1a64(base_example_id(id)) % 10;
    if (bucket < 8) return Split::Train;
    return bucket == 8 ? Split::Val : Split::Test;
}

void CorpusSlice::validate() const {
    if (domains.empty()) throw std::invalid_argument("experiment slice needs at least one domain");
    if (form != "logic" && form != "nl")
        throw std::invalid_argument("experiment slice form must be logic or nl: " + form);
}

bool CorpusSlice::contains(const NliExample& ex) const {
    return ex.form == form && domains.count(ex.domain) > 0;
}

std::string CorpusSlice::str() const {
    std::string s;
    for (const auto& d : domains) {
        if (!s.empty()) s += "+";
        s += d;
    }
    return s + "/" + form;
}

void ExperimentSpec::validate() const {
    train.validate();
    test.validate();
    trainer.validate();
    split_from_name(train_split);
    if (train_split == test_split)
        throw SplitOverlap("experiment '" + name + "' trains and tests on split '" + train_split + "'");
    split_from_name(test_split);
}

uint64_t corpus_digest(const std::vector<NliExample>& corpus) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& ex : corpus) {
        h = fnv1a64(ex.id, h);
        h = fnv1a64(ex.premise_text, h);
        h = fnv1a64(ex.hypothesis_text, h);
        h = fnv1a64(label_name(ex.label), h);
    }
    return h;
}

uint64_t triplet_digest(const std::vector<Triplet>& triplets) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : triplets) {
        h = fnv1a64(t.anchor_id, h);
        h = fnv1a64(t.positive_id, h);
        h = fnv1a64(t.negative_id, h);
        h = fnv1a64(negative_mode_name(t.negative_mode), h);
    }
    return h;
}

EvalCell run_experiment(const ExperimentSpec& spec, const std::vector<NliExample>& corpus,
                        const std::vector<Triplet>& triplets, EncoderModel* model_out) {
    spec.validate();
    Split train_split = split_from_name(spec.train_split);
    Split test_split = split_from_name(spec.test_split);

    std::vector<NliExample> train_examples;
    std::vector<const NliExample*> test_examples;
    std::set<std::string> train_ids;
    for (const auto& ex : corpus) {
        Split s = split_of(ex.id);
        if (s == train_split && spec.train.contains(ex)) {
            train_examples.push_back(ex);
            train_ids.insert(ex.id);
        }
        if (s == test_split && spec.test.contains(ex)) test_examples.push_back(&ex);
    }
    if (train_examples.empty())
        throw MissingSplit("experiment '" + spec.name + "': no examples in " + spec.train.str() +
                           " split " + spec.train_split);
    if (test_examples.empty())
        throw MissingSplit("experiment '" + spec.name + "': no examples in " + spec.test.str() +
                           " split " + spec.test_split);

    std::vector<Triplet> train_triplets;
    std::vector<NliExample> augmented;
    if (spec.use_triplets) {
        std::map<std::string, const NliExample*> by_id;
        for (const auto& ex : corpus) by_id[ex.id] = &ex;
        std::set<std::string> aug_ids;
        for (const auto& t : triplets) {
            if (!train_ids.count(t.anchor_id)) continue;
            auto p = by_id.find(t.positive_id);
            auto n = by_id.find(t.negative_id);
            if (p == by_id.end() || n == by_id.end()) continue;
            // Positives and negatives share the anchor's base id, so they sit
            // in the anchor's split; the test_split check is belt and braces.
            if (split_of(t.positive_id) == test_split || split_of(t.negative_id) == test_split)
                continue;
            train_triplets.push_back(t);
            // Out-of-slice rows (cross-domain or rendered positives) feed the
            // contrastive stage only, never the head fit.
            for (const NliExample* ex : {p->second, n->second})
                if (!train_ids.count(ex->id) && aug_ids.insert(ex->id).second)
                    augmented.push_back(*ex);
        }
    }

    EncoderModel model = train(train_examples, train_triplets, spec.trainer, nullptr, augmented);

    EvalCell cell;
    cell.name = spec.name;
    cell.train_desc = spec.train.str();
    cell.test_desc = spec.test.str();
    cell.model = spec.use_triplets ? "contrastive+head" : "head-only";
    cell.count = static_cast<int>(test_examples.size());

    std::vector<Label> preds, gold;
    std::vector<double> sims, ordinals;
    for (const NliExample* ex : test_examples) {
        preds.push_back(predict_label(model, ex->premise_text, ex->hypothesis_text, ex->form));
        gold.push_back(ex->label);
        auto u = encode(model.params, model.vocab.ids(ex->premise_text, ex->form));
        auto v = encode(model.params, model.vocab.ids(ex->hypothesis_text, ex->form));
        sims.push_back(cosine(u, v));
        ordinals.push_back(static_cast<double>(label_ordinal(ex->label)));
    }
    cell.accuracy = accuracy(preds, gold);
    try {
        cell.spearman = spearman(sims, ordinals);
    } catch (const DegenerateInput&) {
        cell.spearman = 0;
        cell.spearman_defined = false;
    }
    if (model_out) *model_out = std::move(model);
    return cell;
}

EvalReport run_grid(const std::vector<ExperimentSpec>& specs,
                    const std::vector<NliExample>& corpus, const std::vector<Triplet>& triplets) {
    EvalReport report;
    report.corpus_digest = corpus_digest(corpus);
    report.triplet_digest = triplet_digest(triplets);
    for (const auto& spec : specs)
        report.cells.push_back(run_experiment(spec, corpus, triplets));
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["corpus_digest"] = corpus_digest;
    j["triplet_digest"] = triplet_digest;
    j["spearman_protocol"] = spearman_protocol;
    j["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json cj;
        cj["name"] = c.name;
        cj["train"] = c.train_desc;
        cj["test"] = c.test_desc;
        cj["model"] = c.model;
        cj["accuracy"] = c.accuracy;
        cj["spearman"] = c.spearman;
        cj["spearman_defined"] = c.spearman_defined;
        cj["count"] = c.count;
        j["cells"].push_back(cj);
    }
    return j.dump(2) + "\n";
}

std::string EvalReport::table_text() const {
    size_t wt = 5, we = 4, wm = 5;
    for (const auto& c : cells) {
        wt = std::max(wt, c.train_desc.size());
        we = std::max(we, c.test_desc.size());
        wm = std::max(wm, c.model.size());
    }
    std::ostringstream os;
    auto pad = [&](const std::string& s, size_t w) {
        os << s;
        for (size_t i = s.size(); i < w; ++i) os << ' ';
        os << " | ";
    };
    pad("Train", wt);
    pad("Test", we);
    pad("Model", wm);
    os << "Accuracy | Spearman | N\n";
    os << std::string(wt, '-') << "-|-" << std::string(we, '-') << "-|-" << std::string(wm, '-')
       << "-|----------|----------|---\n";
    os.precision(4);
    os << std::fixed;
    for (const auto& c : cells) {
        pad(c.train_desc, wt);
        pad(c.test_desc, we);
        pad(c.model, wm);
        os << "  " << c.accuracy << " | ";
        if (c.spearman_defined)
            os << (c.spearman < 0 ? " " : "  ") << c.spearman;
        else
            os << "     n/a";
        os << " | " << c.count << "\n";
    }
    return os.str();
}

}  // namespace ilpnli
