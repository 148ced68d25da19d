#include "egcn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace egcn {

namespace {

constexpr char kMagic[8] = {'E', 'G', 'C', 'N', 'C', 'K', 'P', 'T'};
static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
    const std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ModelParams& params) {
  nlohmann::json meta = nlohmann::json::parse(config_to_json(params.config));
  meta["seed"] = std::to_string(params.seed);
  meta["rng_state"] = params.rng_state;
  const std::string config = meta.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(config.size()));
  out += config;
  for (const Parameter* p : params.parameters()) {
    const Tensor& v = p->value();
    put_u32(out, static_cast<std::uint32_t>(p->name().size()));
    out += p->name();
    put_u32(out, static_cast<std::uint32_t>(v.rows()));
    put_u32(out, static_cast<std::uint32_t>(v.cols()));
    for (double x : v.values()) {
      const float f = static_cast<float>(x);
      out.append(reinterpret_cast<const char*>(&f), 4);
    }
  }
  return out;
}

ModelParams parse_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(8) != std::string_view(kMagic, 8)) throw CheckpointError("not a checkpoint (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::string_view config_text = in.take(in.u32());
  ModelConfig config;
  std::uint64_t seed = 0;
  std::string rng_state;
  try {
    config = config_from_json(config_text);
    const nlohmann::json meta = nlohmann::json::parse(config_text);
    seed = std::stoull(meta.at("seed").get<std::string>());
    rng_state = meta.at("rng_state").get<std::string>();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  ModelParams params(config);
  params.seed = seed;
  params.rng_state = std::move(rng_state);
  for (Parameter* p : params.parameters()) {
    const std::string_view name = in.take(in.u32());
    if (name != p->name()) {
      throw CheckpointError("checkpoint block '" + std::string(name) + "' where '" + p->name() + "' was expected");
    }
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    Tensor& v = p->value();
    if (rows != v.rows() || cols != v.cols()) {
      throw CheckpointError("checkpoint block " + p->name() + " has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", config implies " + shape_string(v));
    }
    const std::string_view raw = in.take(static_cast<std::size_t>(rows) * cols * 4);
    for (std::size_t i = 0; i < v.size(); ++i) {
      float f;
      std::memcpy(&f, raw.data() + 4 * i, 4);
      v[i] = static_cast<double>(f);
    }
    if (!v.all_finite()) throw CheckpointError("checkpoint block " + p->name() + " holds non-finite values");
  }
  if (!in.done()) throw CheckpointError("checkpoint has trailing bytes");
  return params;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(params);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace egcn
