#include "ilpnli/jsonl.hpp"

#include <fstream>

#include "json.hpp"

namespace ilpnli {

std::string example_to_json_line(const NliExample& ex) {
    nlohmann::json j;
    j["id"] = ex.id;
    j["domain"] = ex.domain;
    j["form"] = ex.form;
    j["premise"] = ex.premise_text;
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : ex.premise_atoms) atoms.push_back(a.str());
    j["premise_atoms"] = atoms;
    j["hypothesis"] = ex.hypothesis_text;
    j["hypothesis_atom"] = ex.hypothesis_atom.str();
    j["label"] = label_name(ex.label);
    j["metarule_id"] = ex.metarule_id;
    j["provenance"] = ex.provenance;
    j["seed"] = ex.seed;
    return j.dump();
}

NliExample example_from_json_line(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw JsonlError(std::string("bad corpus line: ") + e.what());
    }
    try {
        NliExample ex;
        ex.id = j.at("id").get<std::string>();
        ex.domain = j.at("domain").get<std::string>();
        ex.form = j.at("form").get<std::string>();
        ex.premise_text = j.at("premise").get<std::string>();
        for (const auto& a : j.at("premise_atoms"))
            ex.premise_atoms.push_back(parse_atom(a.get<std::string>()));
        ex.hypothesis_text = j.at("hypothesis").get<std::string>();
        ex.hypothesis_atom = parse_atom(j.at("hypothesis_atom").get<std::string>());
        ex.label = label_from_name(j.at("label").get<std::string>());
        ex.metarule_id = j.at("metarule_id").get<std::string>();
        ex.provenance = j.at("provenance").get<std::vector<std::string>>();
        ex.seed = j.at("seed").get<uint64_t>();
        return ex;
    } catch (const nlohmann::json::exception& e) {
        throw JsonlError(std::string("corpus line missing field: ") + e.what());
    } catch (const ParseError& e) {
        throw JsonlError(std::string("corpus line has unparsable atom: ") + e.what());
    }
}

std::string triplet_to_json_line(const Triplet& t) {
    nlohmann::json j;
    j["anchor_id"] = t.anchor_id;
    j["positive_id"] = t.positive_id;
    j["negative_id"] = t.negative_id;
    j["negative_mode"] = negative_mode_name(t.negative_mode);
    return j.dump();
}

Triplet triplet_from_json_line(const std::string& line) {
    try {
        nlohmann::json j = nlohmann::json::parse(line);
        Triplet t;
        t.anchor_id = j.at("anchor_id").get<std::string>();
        t.positive_id = j.at("positive_id").get<std::string>();
        t.negative_id = j.at("negative_id").get<std::string>();
        t.negative_mode = negative_mode_from_name(j.at("negative_mode").get<std::string>());
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw JsonlError(std::string("bad triplet line: ") + e.what());
    }
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw JsonlError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

}  // namespace

void write_corpus_jsonl(const std::string& path, const std::vector<NliExample>& corpus) {
    std::ofstream out(path);
    if (!out) throw JsonlError("cannot open " + path + " for writing");
    for (const auto& ex : corpus) out << example_to_json_line(ex) << '\n';
}

std::vector<NliExample> read_corpus_jsonl(const std::string& path) {
    std::vector<NliExample> corpus;
    for (const auto& line : read_lines(path)) corpus.push_back(example_from_json_line(line));
    return corpus;
}

void write_triplets_jsonl(const std::string& path, const std::vector<Triplet>& triplets) {
    std::ofstream out(path);
    if (!out) throw JsonlError("cannot open " + path + " for writing");
    for (const auto& t : triplets) out << triplet_to_json_line(t) << '\n';
}

std::vector<Triplet> read_triplets_jsonl(const std::string& path) {
    std::vector<Triplet> triplets;
    for (const auto& line : read_lines(path)) triplets.push_back(triplet_from_json_line(line));
    return triplets;
}

}  // namespace ilpnli
