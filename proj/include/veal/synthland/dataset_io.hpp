#pragma once

#include <filesystem>

#include "veal/synthland/types.hpp"

namespace veal::synthland {

inline constexpr std::uint32_t kEmbeddingsVersion = 1;

// Writes records.jsonl, embeddings.bin and vocab.json into `dir` (created if
// missing). Each file is written to a temporary name and renamed into place.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Loads all three files. Throws IntegrityError on bad magic or size/count
// mismatch, FormatError on an unsupported version. Nothing is returned on
// failure.
Dataset read_dataset(const std::filesystem::path& dir);

// Serialized forms, exposed for hashing and tests.
std::string records_jsonl(const std::vector<LandmarkRecord>& records);
std::string embeddings_bin(const EmbeddingStore& store);
std::string vocab_json(const Vocab& vocab);

std::vector<LandmarkRecord> parse_records_jsonl(const std::string& text);
EmbeddingStore parse_embeddings_bin(const std::string& bytes);
Vocab parse_vocab_json(const std::string& text);

}  // namespace veal::synthland
