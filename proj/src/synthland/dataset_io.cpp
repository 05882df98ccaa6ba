#include "veal/synthland/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "veal/errors.hpp"

namespace veal::synthland {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary formats are written with native little-endian layout");

namespace {

constexpr char kMagic[4] = {'V', 'E', 'A', 'L'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

json record_to_json(const LandmarkRecord& r) {
  return json{{"image_id", r.image_id},
              {"landmark_id", r.landmark_id},
              {"name_tokens", r.name_tokens},
              {"question_tokens", r.question_tokens},
              {"answer_tokens", r.answer_tokens},
              {"hierarchical_label", r.hierarchical_label},
              {"entity_ids", r.entity_ids},
              {"alignment_alpha", r.alignment_alpha}};
}

LandmarkRecord record_from_json(const json& j) {
  LandmarkRecord r;
  j.at("image_id").get_to(r.image_id);
  j.at("landmark_id").get_to(r.landmark_id);
  j.at("name_tokens").get_to(r.name_tokens);
  j.at("question_tokens").get_to(r.question_tokens);
  j.at("answer_tokens").get_to(r.answer_tokens);
  j.at("hierarchical_label").get_to(r.hierarchical_label);
  j.at("entity_ids").get_to(r.entity_ids);
  j.at("alignment_alpha").get_to(r.alignment_alpha);
  return r;
}

}  // namespace

std::string records_jsonl(const std::vector<LandmarkRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<LandmarkRecord> parse_records_jsonl(const std::string& text) {
  std::vector<LandmarkRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError("records.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

// Layout: "VEAL" | u32 version | u32 d_v | u32 images, landmarks, entities,
// categories, P_L, P_H | f32 sections lr, hr, text, entity, category |
// u64 total f32 count.
std::string embeddings_bin(const EmbeddingStore& s) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kEmbeddingsVersion);
  for (std::size_t v : {s.dim, s.num_images, s.num_landmarks, s.num_entities, s.num_categories,
                        s.lr_patches, s.hr_patches}) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  }
  std::uint64_t total = 0;
  for (const auto* section : {&s.lr, &s.hr, &s.text, &s.entity, &s.category}) {
    for (double x : *section) put<float>(out, static_cast<float>(x));
    total += section->size();
  }
  put<std::uint64_t>(out, total);
  return out;
}

EmbeddingStore parse_embeddings_bin(const std::string& bytes) {
  constexpr std::size_t header = 4 + 4 * 8;
  if (bytes.size() < header + 8) throw IntegrityError("embeddings.bin is truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IntegrityError("embeddings.bin: bad magic");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kEmbeddingsVersion) {
    throw FormatError("embeddings.bin: unsupported version " + std::to_string(version));
  }
  EmbeddingStore s;
  s.dim = get<std::uint32_t>(bytes, pos);
  s.num_images = get<std::uint32_t>(bytes, pos);
  s.num_landmarks = get<std::uint32_t>(bytes, pos);
  s.num_entities = get<std::uint32_t>(bytes, pos);
  s.num_categories = get<std::uint32_t>(bytes, pos);
  s.lr_patches = get<std::uint32_t>(bytes, pos);
  s.hr_patches = get<std::uint32_t>(bytes, pos);
  const std::uint64_t sizes[5] = {
      std::uint64_t{s.num_images} * s.lr_patches * s.dim,
      std::uint64_t{s.num_images} * s.hr_patches * s.dim,
      std::uint64_t{s.num_landmarks} * s.dim,
      std::uint64_t{s.num_entities} * s.dim,
      std::uint64_t{s.num_categories} * s.dim,
  };
  std::uint64_t total = 0;
  for (auto n : sizes) total += n;
  if (bytes.size() != header + total * 4 + 8) {
    throw IntegrityError("embeddings.bin: expected " + std::to_string(header + total * 4 + 8) +
                         " bytes, found " + std::to_string(bytes.size()));
  }
  std::vector<double>* sections[5] = {&s.lr, &s.hr, &s.text, &s.entity, &s.category};
  for (std::size_t k = 0; k < 5; ++k) {
    sections[k]->resize(sizes[k]);
    for (auto& x : *sections[k]) x = static_cast<double>(get<float>(bytes, pos));
  }
  if (get<std::uint64_t>(bytes, pos) != total) {
    throw IntegrityError("embeddings.bin: trailing count does not match header");
  }
  return s;
}

std::string vocab_json(const Vocab& vocab) {
  json j = json::object();
  for (std::size_t id = 0; id < vocab.size(); ++id) j[std::to_string(id)] = vocab.tokens()[id];
  return j.dump(1) + "\n";
}

Vocab parse_vocab_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("vocab.json: ") + e.what());
  }
  std::vector<std::string> tokens(j.size());
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::size_t id = 0;
    try {
      id = std::stoul(it.key());
    } catch (const std::exception&) {
      throw FormatError("vocab.json: key '" + it.key() + "' is not an id");
    }
    if (id >= tokens.size()) throw FormatError("vocab.json: ids are not contiguous");
    tokens[id] = it.value().get<std::string>();
  }
  return Vocab::from_tokens(std::move(tokens));
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  if (dataset.records.size() != dataset.store.num_images) {
    throw IntegrityError("dataset has " + std::to_string(dataset.records.size()) +
                         " records but " + std::to_string(dataset.store.num_images) + " images");
  }
  fs::create_directories(dir);
  write_file_atomic(dir / "records.jsonl", records_jsonl(dataset.records));
  write_file_atomic(dir / "embeddings.bin", embeddings_bin(dataset.store));
  write_file_atomic(dir / "vocab.json", vocab_json(dataset.vocab));
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  ds.records = parse_records_jsonl(read_file(dir / "records.jsonl"));
  ds.store = parse_embeddings_bin(read_file(dir / "embeddings.bin"));
  ds.vocab = parse_vocab_json(read_file(dir / "vocab.json"));
  if (ds.records.size() != ds.store.num_images) {
    throw IntegrityError("records.jsonl has " + std::to_string(ds.records.size()) +
                         " records but embeddings.bin has " +
                         std::to_string(ds.store.num_images) + " images");
  }
  return ds;
}

}  // namespace veal::synthland
