#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ilpnli/augment.hpp"
#include "ilpnli/eval.hpp"
#include "ilpnli/ilp.hpp"
#include "ilpnli/jsonl.hpp"
#include "ilpnli/render.hpp"
#include "ilpnli/rng.hpp"
#include "ilpnli/trainer.hpp"

namespace fs = std::filesystem;
using namespace ilpnli;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::optional<uint64_t> seed_override;
    std::optional<std::string> out_override;
    bool quiet = false;
};

struct Pipeline {
    uint64_t seed = 0;
    std::string out = "out";
    std::vector<DomainConfig> domains;
    CorpusConfig corpus;
    TripletConfig triplets;
    std::vector<std::string> render_domains;
    double equivalence_rate = 0.5;
    TrainConfig trainer;
    CorpusSlice train_slice;
    std::vector<ExperimentSpec> experiments;
    uint64_t config_digest = 0;
};

uint64_t file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64(buf.str());
}

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

CorpusSlice parse_slice(const nlohmann::json& j) {
    CorpusSlice slice;
    for (const auto& d : j.at("domains")) slice.domains.insert(d.get<std::string>());
    slice.form = field_or<std::string>(j, "form", "logic");
    slice.validate();
    return slice;
}

Pipeline load_pipeline(const Options& opts) {
    std::ifstream in(opts.config_path);
    if (!in) throw ConfigError("cannot open config: " + opts.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(opts.config_path + ": " + e.what());
    }

    Pipeline p;
    p.config_digest = fnv1a64(buf.str());
    try {
        p.seed = field_or<uint64_t>(j, "seed", 0);
        p.out = field_or<std::string>(j, "out", "out");
        if (opts.seed_override) p.seed = *opts.seed_override;
        if (opts.out_override) p.out = *opts.out_override;

        for (const auto& dj : j.at("domains")) {
            DomainConfig dc;
            dc.domain = dj.at("domain").get<std::string>();
            dc.n_entities = field_or<int>(dj, "n_entities", dc.n_entities);
            dc.n_examples = field_or<int>(dj, "n_examples", dc.n_examples);
            dc.neutral_fraction = field_or<double>(dj, "neutral_fraction", dc.neutral_fraction);
            dc.contradiction_fraction =
                field_or<double>(dj, "contradiction_fraction", dc.contradiction_fraction);
            dc.seed = dj.contains("seed") ? dj.at("seed").get<uint64_t>()
                                          : mix_seed(p.seed, fnv1a64(dc.domain));
            dc.validate();
            p.domains.push_back(dc);
        }
        if (p.domains.empty()) throw ConfigError("config lists no domains");

        if (j.contains("corpus")) {
            const auto& c = j.at("corpus");
            p.corpus.permute_rate = field_or<double>(c, "permute_rate", p.corpus.permute_rate);
            p.corpus.distractor_rate =
                field_or<double>(c, "distractor_rate", p.corpus.distractor_rate);
            p.corpus.distractor_k = field_or<int>(c, "distractor_k", p.corpus.distractor_k);
        }
        p.corpus.seed = mix_seed(p.seed, fnv1a64("corpus"));

        if (j.contains("triplets")) {
            const auto& t = j.at("triplets");
            p.triplets.max_triplets = field_or<int>(t, "max_triplets", p.triplets.max_triplets);
            p.triplets.overlap_threshold =
                field_or<double>(t, "overlap_threshold", p.triplets.overlap_threshold);
        }
        p.triplets.seed = mix_seed(p.seed, fnv1a64("triplets"));

        if (j.contains("render")) {
            const auto& r = j.at("render");
            p.equivalence_rate = field_or<double>(r, "equivalence_rate", p.equivalence_rate);
            if (r.contains("domains"))
                for (const auto& d : r.at("domains"))
                    p.render_domains.push_back(d.get<std::string>());
        }
        if (p.render_domains.empty())
            for (const auto& dc : p.domains) p.render_domains.push_back(dc.domain);

        if (j.contains("trainer")) {
            const auto& t = j.at("trainer");
            p.trainer.tau = field_or<double>(t, "tau", p.trainer.tau);
            p.trainer.batch_size = field_or<int>(t, "batch_size", p.trainer.batch_size);
            p.trainer.epochs = field_or<int>(t, "epochs", p.trainer.epochs);
            p.trainer.learning_rate = field_or<double>(t, "learning_rate", p.trainer.learning_rate);
            p.trainer.loss_variant =
                field_or<std::string>(t, "loss_variant", p.trainer.loss_variant);
            p.trainer.dim = field_or<int>(t, "dim", p.trainer.dim);
            p.trainer.head_epochs = field_or<int>(t, "head_epochs", p.trainer.head_epochs);
            p.trainer.head_learning_rate =
                field_or<double>(t, "head_learning_rate", p.trainer.head_learning_rate);
            if (t.contains("train")) p.train_slice = parse_slice(t.at("train"));
        }
        p.trainer.seed = mix_seed(p.seed, fnv1a64("trainer"));
        p.trainer.validate();
        if (p.train_slice.domains.empty()) {
            for (const auto& dc : p.domains) p.train_slice.domains.insert(dc.domain);
            p.train_slice.form = "logic";
        }

        if (j.contains("eval"))
            for (const auto& ej : j.at("eval").at("experiments")) {
                ExperimentSpec spec;
                spec.name = ej.at("name").get<std::string>();
                spec.train = parse_slice(ej.at("train"));
                spec.test = parse_slice(ej.at("test"));
                spec.train_split = field_or<std::string>(ej, "train_split", spec.train_split);
                spec.test_split = field_or<std::string>(ej, "test_split", spec.test_split);
                spec.use_triplets = field_or<bool>(ej, "use_triplets", true);
                spec.trainer = p.trainer;
                spec.trainer.seed = mix_seed(p.trainer.seed, fnv1a64(spec.name));
                spec.validate();
                p.experiments.push_back(spec);
            }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(opts.config_path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(opts.config_path + ": " + e.what());
    }
    return p;
}

void write_manifest(const Pipeline& p, const std::string& command,
                    const std::vector<fs::path>& outputs) {
    fs::path path = fs::path(p.out) / ("manifest-" + command + ".txt");
    std::ofstream out(path);
    out << "command " << command << "\n";
    out << "seed " << p.seed << "\n";
    out << "config_digest " << p.config_digest << "\n";
    for (const auto& o : outputs)
        out << "output " << o.filename().string() << " " << file_digest(o) << "\n";
}

void log(const Options& opts, const std::string& msg) {
    if (!opts.quiet) std::cout << msg << "\n";
}

std::vector<NliExample> load_full_corpus(const Pipeline& p) {
    auto corpus = read_corpus_jsonl((fs::path(p.out) / "corpus.jsonl").string());
    fs::path nl = fs::path(p.out) / "corpus_nl.jsonl";
    if (fs::exists(nl))
        for (auto& ex : read_corpus_jsonl(nl.string())) corpus.push_back(std::move(ex));
    return corpus;
}

int cmd_gen(const Options& opts, const Pipeline& p) {
    fs::create_directories(fs::path(p.out) / "datasets");
    std::vector<fs::path> outputs;
    for (const auto& dc : p.domains) {
        IlpDataset ds = generate_domain(dc);
        fs::path dir = fs::path(p.out) / "datasets" / dc.domain;
        write_dataset(dir.string(), ds, dc);
        log(opts, "gen " + dc.domain + ": " + std::to_string(ds.positives.size()) + " K+ / " +
                      std::to_string(ds.negatives.size()) + " K-");
        for (const char* f : {"bk.pl", "pos.pl", "neg.pl", "manifest.txt"})
            outputs.push_back(dir / f);
    }
    write_manifest(p, "gen", outputs);
    return 0;
}

int cmd_augment(const Options& opts, const Pipeline& p) {
    std::vector<NliExample> corpus;
    for (const auto& dc : p.domains) {
        IlpDataset ds = read_dataset((fs::path(p.out) / "datasets" / dc.domain).string(), dc.domain);
        CorpusConfig cc = p.corpus;
        cc.seed = mix_seed(p.corpus.seed, fnv1a64(dc.domain));
        for (auto& ex : build_corpus(ds, cc)) corpus.push_back(std::move(ex));
    }
    std::vector<DomainLexicon> lexicons;
    for (const auto& dc : p.domains) lexicons.push_back(builtin_lexicon(dc.domain));
    auto triplets = build_triplets(corpus, lexicons, p.triplets);

    fs::path corpus_path = fs::path(p.out) / "corpus.jsonl";
    fs::path triplet_path = fs::path(p.out) / "triplets.jsonl";
    write_corpus_jsonl(corpus_path.string(), corpus);
    write_triplets_jsonl(triplet_path.string(), triplets);
    log(opts, "augment: " + std::to_string(corpus.size()) + " examples, " +
                  std::to_string(triplets.size()) + " triplets");
    write_manifest(p, "augment", {corpus_path, triplet_path});
    return 0;
}

int cmd_render(const Options& opts, const Pipeline& p) {
    auto corpus = read_corpus_jsonl((fs::path(p.out) / "corpus.jsonl").string());
    std::map<std::string, TemplateSet> templates;
    for (const auto& d : p.render_domains) templates.emplace(d, builtin_templates(d));
    std::vector<NliExample> rendered;
    uint64_t render_seed = mix_seed(p.seed, fnv1a64("render"));
    for (const auto& ex : corpus) {
        auto it = templates.find(ex.domain);
        if (it == templates.end() || ex.form != "logic") continue;
        rendered.push_back(render_example(ex, it->second, p.equivalence_rate,
                                          mix_seed(render_seed, fnv1a64(ex.id))));
    }
    fs::path path = fs::path(p.out) / "corpus_nl.jsonl";
    write_corpus_jsonl(path.string(), rendered);

    // Rendered positives join the triplet index so the contrastive stage can
    // pair logic anchors with nl positives.
    fs::path triplet_path = fs::path(p.out) / "triplets.jsonl";
    auto triplets = read_triplets_jsonl(triplet_path.string());
    triplets = with_rendered_positives(triplets, rendered);
    write_triplets_jsonl(triplet_path.string(), triplets);

    log(opts, "render: " + std::to_string(rendered.size()) + " nl examples, " +
                  std::to_string(triplets.size()) + " triplets");
    write_manifest(p, "render", {path, triplet_path});
    return 0;
}

int cmd_train(const Options& opts, const Pipeline& p) {
    auto corpus = load_full_corpus(p);
    auto triplets = read_triplets_jsonl((fs::path(p.out) / "triplets.jsonl").string());

    std::vector<NliExample> train_examples;
    std::set<std::string> train_ids;
    for (const auto& ex : corpus)
        if (split_of(ex.id) == Split::Train && p.train_slice.contains(ex)) {
            train_examples.push_back(ex);
            train_ids.insert(ex.id);
        }
    if (train_examples.empty()) throw MissingSplit("no training examples for configured slice");
    std::map<std::string, const NliExample*> by_id;
    for (const auto& ex : corpus) by_id[ex.id] = &ex;
    std::vector<Triplet> train_triplets;
    std::vector<NliExample> augmented;
    std::set<std::string> aug_ids;
    for (const auto& t : triplets) {
        if (!train_ids.count(t.anchor_id)) continue;
        auto pos = by_id.find(t.positive_id);
        auto neg = by_id.find(t.negative_id);
        if (pos == by_id.end() || neg == by_id.end()) continue;
        if (split_of(t.positive_id) != Split::Train || split_of(t.negative_id) != Split::Train)
            continue;
        train_triplets.push_back(t);
        for (const NliExample* ex : {pos->second, neg->second})
            if (!train_ids.count(ex->id) && aug_ids.insert(ex->id).second)
                augmented.push_back(*ex);
    }

    TrainStats stats;
    EncoderModel model = train(train_examples, train_triplets, p.trainer, &stats, augmented);
    fs::path path = fs::path(p.out) / "checkpoint.json";
    save_checkpoint(path.string(), model);
    std::ostringstream msg;
    msg.precision(6);
    msg << "train: " << train_examples.size() << " examples, " << train_triplets.size()
        << " triplets, first loss " << stats.first_batch_loss << ", last epoch mean "
        << stats.last_epoch_mean_loss;
    log(opts, msg.str());
    write_manifest(p, "train", {path});
    return 0;
}

int cmd_eval(const Options& opts, const Pipeline& p) {
    if (p.experiments.empty()) throw ConfigError("eval requested but config has no experiments");
    auto corpus = load_full_corpus(p);
    auto triplets = read_triplets_jsonl((fs::path(p.out) / "triplets.jsonl").string());
    EvalReport report = run_grid(p.experiments, corpus, triplets);
    fs::path json_path = fs::path(p.out) / "report.json";
    fs::path text_path = fs::path(p.out) / "report.txt";
    std::ofstream(json_path) << report.to_json();
    std::ofstream(text_path) << report.table_text();
    log(opts, report.table_text());
    write_manifest(p, "eval", {json_path, text_path});
    return 0;
}

int cmd_inspect(const Options& opts, const std::string& path) {
    (void)opts;
    auto corpus = read_corpus_jsonl(path);
    std::map<std::string, int> by_domain, by_label, by_form;
    for (const auto& ex : corpus) {
        ++by_domain[ex.domain];
        ++by_label[label_name(ex.label)];
        ++by_form[ex.form];
    }
    std::cout << path << ": " << corpus.size() << " examples\n";
    for (const auto& [k, v] : by_domain) std::cout << "  domain " << k << ": " << v << "\n";
    for (const auto& [k, v] : by_form) std::cout << "  form " << k << ": " << v << "\n";
    for (const auto& [k, v] : by_label) std::cout << "  label " << k << ": " << v << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ILP-to-NLI corpus toolkit"};
    app.require_subcommand(1);

    Options opts;
    uint64_t seed_flag = 0;
    std::string out_flag;
    app.add_option("--config", opts.config_path, "pipeline config (JSON)");
    auto* seed_opt = app.add_option("--seed", seed_flag, "override config seed");
    auto* out_opt = app.add_option("--out", out_flag, "override output directory");
    app.add_flag("--quiet", opts.quiet, "suppress progress output");

    auto* gen = app.add_subcommand("gen", "generate ILP datasets");
    auto* augment = app.add_subcommand("augment", "build contrastive corpus and triplets");
    auto* render = app.add_subcommand("render", "render logic examples to natural language");
    auto* train_cmd = app.add_subcommand("train", "train the toy encoder");
    auto* eval_cmd = app.add_subcommand("eval", "run the evaluation grid");
    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "summarize a corpus file");
    inspect->add_option("path", inspect_path, "corpus JSONL path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    if (*seed_opt) opts.seed_override = seed_flag;
    if (*out_opt) opts.out_override = out_flag;

    try {
        if (inspect->parsed()) return cmd_inspect(opts, inspect_path);
        if (opts.config_path.empty()) throw ConfigError("--config is required");
        Pipeline p = load_pipeline(opts);
        fs::create_directories(p.out);
        if (gen->parsed()) return cmd_gen(opts, p);
        if (augment->parsed()) return cmd_augment(opts, p);
        if (render->parsed()) return cmd_render(opts, p);
        if (train_cmd->parsed()) return cmd_train(opts, p);
        if (eval_cmd->parsed()) return cmd_eval(opts, p);
        throw ConfigError("no command given");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NonFinite& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}
