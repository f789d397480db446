#include "afford/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace afford {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  check(ec == std::errc() && p == v.data() + v.size(),
        "[config] bad numeric value for " + key + ": " + v);
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    check(pos == v.size(), "[config] bad integer for " + key + ": " + v);
    return out;
  } catch (const std::exception&) {
    throw Error("[config] bad integer for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("[config] bad boolean for " + key + ": " + v);
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    check(eq != std::string::npos,
          "[config] line " + std::to_string(line_no) + " is not 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    check(!key.empty(), "[config] empty key on line " + std::to_string(line_no));
    check(!kv.count(key), "[config] duplicate key: " + key);
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "[config] cannot open: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_config(TrainConfig& config, const std::map<std::string, std::string>& kv) {
  static const std::set<std::string> synth_keys = {"synth_objects", "synth_affordances",
                                                   "synth_image_size", "synth_test_variants"};
  for (const auto& [key, v] : kv) {
    if (key == "seed") config.hp.seed = static_cast<std::uint64_t>(std::stoull(v));
    else if (key == "tau1") config.hp.tau1 = to_double(key, v);
    else if (key == "tau2") config.hp.tau2 = to_double(key, v);
    else if (key == "lambda1") config.hp.lambda1 = to_double(key, v);
    else if (key == "lambda2") config.hp.lambda2 = to_double(key, v);
    else if (key == "lr") config.hp.lr = to_double(key, v);
    else if (key == "momentum") config.hp.momentum = to_double(key, v);
    else if (key == "iterations") config.hp.iterations = static_cast<int>(to_long(key, v));
    else if (key == "patch_size") config.hp.patch_size = static_cast<std::size_t>(to_long(key, v));
    else if (key == "d_e") config.dims.d_e = static_cast<std::size_t>(to_long(key, v));
    else if (key == "d_v") config.dims.d_v = static_cast<std::size_t>(to_long(key, v));
    else if (key == "d_t") config.dims.d_t = static_cast<std::size_t>(to_long(key, v));
    else if (key == "encoder_layers")
      config.dims.encoder_layers = static_cast<std::size_t>(to_long(key, v));
    else if (key == "prompt_length")
      config.dims.prompt_length = static_cast<std::size_t>(to_long(key, v));
    else if (key == "decoder_layers")
      config.dims.decoder_layers = static_cast<std::size_t>(to_long(key, v));
    else if (key == "decoder_heads")
      config.dims.decoder_heads = static_cast<std::size_t>(to_long(key, v));
    else if (key == "enable_ami") config.toggles.enable_ami = to_bool(key, v);
    else if (key == "enable_omi") config.toggles.enable_omi = to_bool(key, v);
    else if (key == "ami_target") {
      check(v == "decoder" || v == "encoder", "[config] ami_target must be decoder or encoder");
      config.toggles.ami_on_encoder_features = v == "encoder";
    } else if (key == "object_prompt_context")
      config.toggles.object_prompt_context = to_bool(key, v);
    else if (key == "shared_text_encoder") config.shared_text_encoder = to_bool(key, v);
    else if (key == "fusion_strategy") config.fusion_strategy = v;
    else if (key == "eval_interval") config.eval_interval = static_cast<int>(to_long(key, v));
    else if (key == "val_fraction") config.val_fraction = to_double(key, v);
    else if (key == "accumulate_steps")
      config.accumulate_steps = static_cast<int>(to_long(key, v));
    else if (key == "root") config.root = v;
    else if (key == "split") config.split = v;
    else if (key == "checkpoint") config.checkpoint_path = v;
    else if (key == "out_dir") config.out_dir = v;
    else if (synth_keys.count(key)) continue;  // consumed by the synthetic spec
    else throw Error("[config] unknown key: " + key);
  }
}

void apply_config(SyntheticSpec& spec, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, v] : kv) {
    if (key == "synth_objects") spec.n_objects = static_cast<std::size_t>(to_long(key, v));
    else if (key == "synth_affordances")
      spec.n_affordances = static_cast<std::size_t>(to_long(key, v));
    else if (key == "synth_image_size")
      spec.image_size = static_cast<std::size_t>(to_long(key, v));
    else if (key == "synth_test_variants")
      spec.test_variants = static_cast<std::size_t>(to_long(key, v));
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(std::stoull(v));
    // other keys belong to the training config
  }
}

}  // namespace afford
