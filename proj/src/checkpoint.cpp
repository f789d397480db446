#include "afford/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace afford {

namespace {

constexpr char kMagic[8] = {'A', 'F', 'C', 'K', 'P', 'T', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    check(pos_ + n <= bytes_.size(), "[load_checkpoint] truncated file: " + path_);
  }
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::size_t get_size(const std::map<std::string, std::string>& config, const std::string& key) {
  auto it = config.find(key);
  check(it != config.end(), "[checkpoint] config snapshot is missing key: " + key);
  return static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace

Checkpoint snapshot_params(const ModelParams& params, std::int64_t iteration,
                           double best_val_kld,
                           const std::map<std::string, std::string>& config,
                           const LabelSpace& labels) {
  Checkpoint ckpt;
  ckpt.iteration = iteration;
  ckpt.best_val_kld = best_val_kld;
  ckpt.config = config;
  ckpt.affordance_names = labels.affordance_names;
  ckpt.object_names = labels.object_names;
  visit_params(params, [&ckpt](const std::string& name, const Tensor& t) {
    NamedArray a;
    a.name = name;
    for (std::size_t d : t.shape()) a.shape.push_back(static_cast<std::uint32_t>(d));
    a.data.reserve(t.numel());
    for (double v : t.data()) a.data.push_back(static_cast<float>(v));
    ckpt.arrays.push_back(std::move(a));
  });
  return ckpt;
}

ModelDims dims_from_config(const std::map<std::string, std::string>& config) {
  ModelDims dims;
  dims.d_e = get_size(config, "d_e");
  dims.d_v = get_size(config, "d_v");
  dims.d_t = get_size(config, "d_t");
  dims.encoder_layers = get_size(config, "encoder_layers");
  dims.prompt_length = get_size(config, "prompt_length");
  dims.decoder_layers = get_size(config, "decoder_layers");
  dims.decoder_heads = get_size(config, "decoder_heads");
  return dims;
}

ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams params = init_model(0, dims_from_config(ckpt.config));
  std::size_t next = 0;
  visit_params(params, [&](const std::string& name, Tensor& t) {
    check(next < ckpt.arrays.size(),
          "[params_from_checkpoint] checkpoint is missing array: " + name);
    const NamedArray& a = ckpt.arrays[next++];
    check(a.name == name, "[params_from_checkpoint] array order mismatch: expected '" + name +
                              "', found '" + a.name + "'");
    check(a.shape.size() == t.ndim(), "[params_from_checkpoint] rank mismatch for " + name);
    for (std::size_t i = 0; i < t.ndim(); ++i)
      check(a.shape[i] == t.shape()[i],
            "[params_from_checkpoint] shape mismatch for " + name);
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(a.data[i]);
  });
  check(next == ckpt.arrays.size(), "[params_from_checkpoint] unexpected extra arrays");
  return params;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json meta;
  meta["iteration"] = ckpt.iteration;
  meta["best_val_kld"] = ckpt.best_val_kld;
  meta["config"] = ckpt.config;
  meta["affordance_names"] = ckpt.affordance_names;
  meta["object_names"] = ckpt.object_names;
  const std::string meta_str = meta.dump();

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(meta_str.size()));
  out += meta_str;
  put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const NamedArray& a : ckpt.arrays) {
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_u32(out, static_cast<std::uint32_t>(a.shape.size()));
    std::size_t numel = 1;
    for (std::uint32_t d : a.shape) {
      put_u32(out, d);
      numel *= d;
    }
    check(numel == a.data.size(), "[save_checkpoint] shape does not match data: " + a.name);
    for (float f : a.data) put_f32(out, f);
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  check(file.good(), "[save_checkpoint] cannot open for writing: " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  check(file.good(), "[save_checkpoint] write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  check(file.good(), "[load_checkpoint] cannot open: " + path);
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  Reader r(bytes, path);
  check(r.str(sizeof(kMagic)) == std::string(kMagic, sizeof(kMagic)),
        "[load_checkpoint] bad magic header (not a checkpoint or unsupported version): " +
            path);
  Checkpoint ckpt;
  const std::uint32_t meta_len = r.u32();
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(r.str(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error("[load_checkpoint] corrupt metadata block: " + std::string(e.what()));
  }
  ckpt.iteration = meta.at("iteration").get<std::int64_t>();
  ckpt.best_val_kld = meta.at("best_val_kld").get<double>();
  ckpt.config = meta.at("config").get<std::map<std::string, std::string>>();
  ckpt.affordance_names = meta.at("affordance_names").get<std::vector<std::string>>();
  ckpt.object_names = meta.at("object_names").get<std::vector<std::string>>();

  const std::uint32_t n_arrays = r.u32();
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    NamedArray a;
    a.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    std::size_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      a.shape.push_back(r.u32());
      numel *= a.shape.back();
    }
    a.data.reserve(numel);
    for (std::size_t k = 0; k < numel; ++k) a.data.push_back(r.f32());
    ckpt.arrays.push_back(std::move(a));
  }
  check(r.exhausted(), "[load_checkpoint] trailing bytes after arrays: " + path);
  return ckpt;
}

}  // namespace afford
