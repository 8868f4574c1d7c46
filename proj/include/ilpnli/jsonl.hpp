#pragma once

#include <string>
#include <vector>

#include "ilpnli/augment.hpp"

namespace ilpnli {

class JsonlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string example_to_json_line(const NliExample& ex);
NliExample example_from_json_line(const std::string& line);

std::string triplet_to_json_line(const Triplet& t);
Triplet triplet_from_json_line(const std::string& line);

void write_corpus_jsonl(const std::string& path, const std::vector<NliExample>& corpus);
std::vector<NliExample> read_corpus_jsonl(const std::string& path);

void write_triplets_jsonl(const std::string& path, const std::vector<Triplet>& triplets);
std::vector<Triplet> read_triplets_jsonl(const std::string& path);

}  // namespace ilpnli
