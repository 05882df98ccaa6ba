#include "veal/dualbranch/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "veal/errors.hpp"

namespace veal::dualbranch {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little);

namespace {

constexpr char kMagic[8] = {'V', 'E', 'A', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IntegrityError("checkpoint is truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint64_t> config_fields(const DualBranchConfig& c) {
  return {c.input_dim,      c.model_dim,     c.low_res_tokens, c.high_res_patches,
          c.num_queries,    c.lm_layers,     c.lm_heads,       c.ffn_dim,
          c.vocab_size,     c.max_seq_len,   c.max_answer_len, c.num_entities,
          c.num_categories, c.use_positional, c.high_res_branch, c.seed};
}

DualBranchConfig config_from(const std::vector<std::uint64_t>& f) {
  DualBranchConfig c;
  c.input_dim = f[0];
  c.model_dim = f[1];
  c.low_res_tokens = f[2];
  c.high_res_patches = f[3];
  c.num_queries = f[4];
  c.lm_layers = f[5];
  c.lm_heads = f[6];
  c.ffn_dim = f[7];
  c.vocab_size = f[8];
  c.max_seq_len = f[9];
  c.max_answer_len = f[10];
  c.num_entities = f[11];
  c.num_categories = f[12];
  c.use_positional = f[13] != 0;
  c.high_res_branch = f[14] != 0;
  c.seed = f[15];
  return c;
}

}  // namespace

std::string checkpoint_bytes(const DualBranchConfig& config, const DualBranchParams& params) {
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto fields = config_fields(config);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(fields.size()));
  for (auto f : fields) put<std::uint64_t>(out, f);

  const auto named = params.named();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(named.size()));
  std::uint64_t total = 0;
  for (const auto& p : named) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto dim : p.tensor.shape()) put<std::uint64_t>(out, dim);
    put<std::uint64_t>(out, p.tensor.size());
    for (double x : p.tensor.data()) put<float>(out, static_cast<float>(x));
    total += p.tensor.size();
  }
  put<std::uint64_t>(out, total);
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw IntegrityError("not a checkpoint: bad magic");
  }
  Reader in(bytes);
  in.str(sizeof kMagic);
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto n_config = in.get<std::uint32_t>();
  if (n_config != config_fields(DualBranchConfig{}).size()) {
    throw FormatError("checkpoint config block has " + std::to_string(n_config) + " fields");
  }
  std::vector<std::uint64_t> fields(n_config);
  for (auto& f : fields) f = in.get<std::uint64_t>();

  Checkpoint ck;
  ck.config = config_from(fields);
  ck.config.validate();
  // Build the expected layout, then fill it section by section.
  ck.params = init_params(ck.config);
  auto named = ck.params.named();
  const auto n_sections = in.get<std::uint32_t>();
  if (n_sections != named.size()) {
    throw FormatError("checkpoint has " + std::to_string(n_sections) + " sections, expected " +
                      std::to_string(named.size()));
  }
  std::uint64_t total = 0;
  for (auto& p : named) {
    const auto name = in.str(in.get<std::uint32_t>());
    if (name != p.name) throw FormatError("unexpected section '" + name + "', wanted '" + p.name + "'");
    const auto rank = in.get<std::uint32_t>();
    numkit::Shape shape(rank);
    for (auto& dim : shape) dim = in.get<std::uint64_t>();
    if (shape != p.tensor.shape()) {
      throw FormatError("section '" + name + "' has shape " + numkit::shape_string(shape) +
                        ", expected " + numkit::shape_string(p.tensor.shape()));
    }
    const auto count = in.get<std::uint64_t>();
    if (count != p.tensor.size()) throw IntegrityError("section '" + name + "' count mismatch");
    auto dst = p.tensor.mutable_data();
    for (auto& x : dst) x = static_cast<double>(in.get<float>());
    total += count;
  }
  if (in.get<std::uint64_t>() != total || !in.done()) {
    throw IntegrityError("checkpoint trailer does not match its contents");
  }
  return ck;
}

void save_checkpoint(const fs::path& path, const DualBranchConfig& config,
                     const DualBranchParams& params) {
  const std::string bytes = checkpoint_bytes(config, params);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace veal::dualbranch
