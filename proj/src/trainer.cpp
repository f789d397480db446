#include "afford/trainer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "afford/rng.hpp"

namespace afford {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  check(ec == std::errc(), "[fmt_double] conversion failed");
  return std::string(buf, end);
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  check(it != kv.end(), "[TrainConfig] missing key: " + key);
  double v = 0.0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  check(ec == std::errc() && p == it->second.data() + it->second.size(),
        "[TrainConfig] bad numeric value for " + key + ": " + it->second);
  return v;
}

long parse_long(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  check(it != kv.end(), "[TrainConfig] missing key: " + key);
  return std::stol(it->second);
}

bool parse_bool(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  check(it != kv.end(), "[TrainConfig] missing key: " + key);
  check(it->second == "true" || it->second == "false",
        "[TrainConfig] bad boolean for " + key + ": " + it->second);
  return it->second == "true";
}

// Mean KLD of the current parameters over held-out (image, class) pairs.
double validation_kld(const ModelParams& params, const std::vector<Sample>& samples,
                      const std::vector<PatchFeatureMap>& vision_feats,
                      const std::vector<std::size_t>& idx, const LabelSpace& labels,
                      const TextEncoder& text_enc) {
  std::vector<Tensor> preds, gts;
  for (std::size_t i : idx) {
    const Sample& s = samples[i];
    auto maps = predict_sample(params, vision_feats[i], s.image.height, s.image.width, labels,
                               text_enc);
    for (const AffordanceMask& m : s.masks) {
      preds.push_back(maps[m.class_id]);
      gts.push_back(m.values);
    }
  }
  return evaluate_set(preds, gts).kld;
}

double train_set_bce(const ModelParams& params, const std::vector<Sample>& samples,
                     const std::vector<PatchFeatureMap>& vision_feats,
                     const std::vector<SampleTargets>& targets, const LabelSpace& labels,
                     const TextEncoder& text_enc) {
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    auto maps = predict_sample(params, vision_feats[i], s.image.height, s.image.width, labels,
                               text_enc);
    acc += bce_loss(maps, targets[i].scaled);
  }
  return acc / static_cast<double>(samples.size());
}

}  // namespace

void TrainConfig::validate() const {
  hp.validate();
  check(eval_interval >= 1, "[TrainConfig] eval interval must be positive");
  check(eval_interval <= hp.iterations && hp.iterations % eval_interval == 0,
        "[TrainConfig] eval interval must divide the iteration count");
  check(val_fraction >= 0.0 && val_fraction < 1.0, "[TrainConfig] bad validation fraction");
  check(accumulate_steps >= 1, "[TrainConfig] accumulation steps must be positive");
  check(dims.d_t % dims.decoder_heads == 0,
        "[TrainConfig] d_t must be divisible by the decoder head count");
  check(fusion_strategy == "softmax_linear",
        "[TrainConfig] unknown fusion strategy: " + fusion_strategy);
}

std::map<std::string, std::string> TrainConfig::to_flat() const {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(hp.seed);
  kv["tau1"] = fmt_double(hp.tau1);
  kv["tau2"] = fmt_double(hp.tau2);
  kv["lambda1"] = fmt_double(hp.lambda1);
  kv["lambda2"] = fmt_double(hp.lambda2);
  kv["lr"] = fmt_double(hp.lr);
  kv["momentum"] = fmt_double(hp.momentum);
  kv["iterations"] = std::to_string(hp.iterations);
  kv["patch_size"] = std::to_string(hp.patch_size);
  kv["d_e"] = std::to_string(dims.d_e);
  kv["d_v"] = std::to_string(dims.d_v);
  kv["d_t"] = std::to_string(dims.d_t);
  kv["encoder_layers"] = std::to_string(dims.encoder_layers);
  kv["prompt_length"] = std::to_string(dims.prompt_length);
  kv["decoder_layers"] = std::to_string(dims.decoder_layers);
  kv["decoder_heads"] = std::to_string(dims.decoder_heads);
  kv["enable_ami"] = toggles.enable_ami ? "true" : "false";
  kv["enable_omi"] = toggles.enable_omi ? "true" : "false";
  kv["ami_target"] = toggles.ami_on_encoder_features ? "encoder" : "decoder";
  kv["object_prompt_context"] = toggles.object_prompt_context ? "true" : "false";
  kv["shared_text_encoder"] = shared_text_encoder ? "true" : "false";
  kv["fusion_strategy"] = fusion_strategy;
  kv["eval_interval"] = std::to_string(eval_interval);
  kv["val_fraction"] = fmt_double(val_fraction);
  kv["accumulate_steps"] = std::to_string(accumulate_steps);
  return kv;
}

TrainConfig TrainConfig::from_flat(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  c.hp.seed = static_cast<std::uint64_t>(std::stoull(kv.at("seed")));
  c.hp.tau1 = parse_double(kv, "tau1");
  c.hp.tau2 = parse_double(kv, "tau2");
  c.hp.lambda1 = parse_double(kv, "lambda1");
  c.hp.lambda2 = parse_double(kv, "lambda2");
  c.hp.lr = parse_double(kv, "lr");
  c.hp.momentum = parse_double(kv, "momentum");
  c.hp.iterations = static_cast<int>(parse_long(kv, "iterations"));
  c.hp.patch_size = static_cast<std::size_t>(parse_long(kv, "patch_size"));
  c.dims = dims_from_config(kv);
  c.toggles.enable_ami = parse_bool(kv, "enable_ami");
  c.toggles.enable_omi = parse_bool(kv, "enable_omi");
  const std::string ami_target = kv.at("ami_target");
  check(ami_target == "decoder" || ami_target == "encoder",
        "[TrainConfig] ami_target must be decoder or encoder");
  c.toggles.ami_on_encoder_features = ami_target == "encoder";
  c.toggles.object_prompt_context = parse_bool(kv, "object_prompt_context");
  c.shared_text_encoder = parse_bool(kv, "shared_text_encoder");
  c.fusion_strategy = kv.at("fusion_strategy");
  c.eval_interval = static_cast<int>(parse_long(kv, "eval_interval"));
  c.val_fraction = parse_double(kv, "val_fraction");
  c.accumulate_steps = static_cast<int>(parse_long(kv, "accumulate_steps"));
  return c;
}

Encoders StubEncoders::view() const {
  Encoders e;
  e.text = text.get();
  e.object_text = object_text ? object_text.get() : text.get();
  e.vision = vision.get();
  return e;
}

StubEncoders make_stub_encoders(const TrainConfig& config) {
  StubEncoders e;
  e.text = stub_text_encoder(derive_seed(config.hp.seed, "text-encoder"), config.dims.d_e,
                             config.dims.d_t);
  if (!config.shared_text_encoder)
    e.object_text = stub_text_encoder(derive_seed(config.hp.seed, "object-text-encoder"),
                                      config.dims.d_e, config.dims.d_t);
  e.vision = stub_image_encoder(derive_seed(config.hp.seed, "image-encoder"),
                                config.hp.patch_size, config.dims.d_v,
                                config.dims.encoder_layers);
  return e;
}

namespace {

void check_encoders(const TrainConfig& config, const Encoders& enc) {
  check(enc.text && enc.object_text && enc.vision, "[train] missing encoder");
  check(enc.text->feature_dim() == config.dims.d_t &&
            enc.object_text->feature_dim() == config.dims.d_t,
        "[train] text encoder feature dimension does not match d_t");
  check(enc.text->embed_dim() == config.dims.d_e,
        "[train] text encoder embedding dimension does not match d_e");
  check(enc.vision->feature_dim() == config.dims.d_v,
        "[train] image encoder feature dimension does not match d_v");
  check(enc.vision->num_layers() == config.dims.encoder_layers,
        "[train] image encoder layer count does not match encoder_layers");
  check(enc.vision->patch_size() == config.hp.patch_size,
        "[train] image encoder patch size does not match the configured patch size");
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainData& data, const Encoders& encoders) {
  config.validate();
  data.labels.validate();
  check(!data.samples.empty(), "[train] empty dataset");
  check_encoders(config, encoders);

  const LabelSpace& labels = data.labels;
  const std::size_t n = data.samples.size();
  for (const Sample& s : data.samples)
    validate(s, labels.num_affordances(), labels.num_objects(), config.hp.patch_size);

  // Frozen-encoder outputs and per-sample targets never change; compute once.
  std::vector<PatchFeatureMap> vision_feats;
  std::vector<SampleTargets> targets;
  vision_feats.reserve(n);
  targets.reserve(n);
  for (const Sample& s : data.samples) {
    vision_feats.push_back(encode_image(s.image, *encoders.vision));
    targets.push_back(prepare_targets(s, labels.num_affordances(), config.hp.patch_size));
  }
  const Tensor object_text = object_text_features(labels, *encoders.object_text);

  // Validation split: a held-out seeded slice when requested, otherwise the
  // whole training set.
  std::vector<std::size_t> train_idx(n), val_idx;
  for (std::size_t i = 0; i < n; ++i) train_idx[i] = i;
  if (config.val_fraction > 0.0 && n > 1) {
    std::vector<std::size_t> pool = train_idx;
    Rng split_rng(derive_seed(config.hp.seed, "validation-split"));
    split_rng.shuffle(pool);
    std::size_t n_val = static_cast<std::size_t>(
        std::ceil(config.val_fraction * static_cast<double>(n)));
    n_val = std::min(n_val, n - 1);
    val_idx.assign(pool.begin(), pool.begin() + n_val);
    std::sort(val_idx.begin(), val_idx.end());
    train_idx.clear();
    for (std::size_t i = n_val; i < pool.size(); ++i) train_idx.push_back(pool[i]);
    std::sort(train_idx.begin(), train_idx.end());
  } else {
    val_idx = train_idx;
  }

  std::vector<std::size_t> order = train_idx;
  Rng order_rng(derive_seed(config.hp.seed, "sample-order"));
  order_rng.shuffle(order);

  ModelParams params = init_model(config.hp.seed, config.dims);

  std::vector<Tensor> velocity;
  if (config.hp.momentum > 0.0)
    visit_params(params, [&velocity](const std::string&, const Tensor& t) {
      velocity.push_back(Tensor(t.shape()));
    });

  TrainResult result;
  result.best_val_kld = std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::size_t cursor = 0;
  const auto flat = config.to_flat();

  for (int iter = 1; iter <= config.hp.iterations; ++iter) {
    std::vector<Tensor> grad_accum;
    LossReport report;
    for (int a = 0; a < config.accumulate_steps; ++a) {
      const std::size_t si = order[cursor % order.size()];
      ++cursor;
      auto fwd = model_forward(params, data.samples[si], targets[si], vision_feats[si],
                               object_text, labels, *encoders.text, *encoders.object_text,
                               config.hp, config.toggles);
      report = fwd.report;
      if (!std::isfinite(fwd.report.bce))
        throw Error("[train] non-finite pixel BCE at iteration " + std::to_string(iter));
      if (!std::isfinite(fwd.report.ami))
        throw Error("[train] non-finite affordance alignment loss at iteration " +
                    std::to_string(iter));
      if (!std::isfinite(fwd.report.omi))
        throw Error("[train] non-finite object alignment loss at iteration " +
                    std::to_string(iter));
      ad::backward(fwd.total);
      // A leaf that never reaches the loss (e.g. the object projection with
      // the term disabled) keeps an empty grad; treat it as zero.
      auto leaf_grad = [](const ad::NodePtr& leaf) {
        return leaf->grad.numel() == leaf->value.numel() ? leaf->grad
                                                         : Tensor(leaf->value.shape());
      };
      if (grad_accum.empty()) {
        for (const auto& leaf : fwd.leaves) grad_accum.push_back(leaf_grad(leaf));
      } else {
        for (std::size_t p = 0; p < fwd.leaves.size(); ++p) {
          const Tensor g = leaf_grad(fwd.leaves[p]);
          for (std::size_t i = 0; i < grad_accum[p].numel(); ++i) grad_accum[p][i] += g[i];
        }
      }
    }
    if (config.accumulate_steps > 1) {
      const double inv = 1.0 / static_cast<double>(config.accumulate_steps);
      for (Tensor& g : grad_accum)
        for (double& v : g.data()) v *= inv;
    }

    std::size_t p = 0;
    visit_params(params, [&](const std::string&, Tensor& t) {
      Tensor& g = grad_accum[p];
      if (config.hp.momentum > 0.0) {
        Tensor& v = velocity[p];
        for (std::size_t i = 0; i < t.numel(); ++i) {
          v[i] = config.hp.momentum * v[i] + g[i];
          t[i] -= config.hp.lr * v[i];
        }
      } else {
        for (std::size_t i = 0; i < t.numel(); ++i) t[i] -= config.hp.lr * g[i];
      }
      ++p;
    });
    result.last_loss = report;

    if (iter % config.eval_interval == 0) {
      const double val_kld =
          validation_kld(params, data.samples, vision_feats, val_idx, labels, *encoders.text);
      result.history.push_back({iter, val_kld});
      if (!have_best || val_kld < result.best_val_kld) {
        result.best_val_kld = val_kld;
        result.best = snapshot_params(params, iter, val_kld, flat, labels);
        have_best = true;
      }
    }
  }

  if (!have_best) {
    result.best_val_kld =
        validation_kld(params, data.samples, vision_feats, val_idx, labels, *encoders.text);
    result.best = snapshot_params(params, config.hp.iterations, result.best_val_kld, flat,
                                  labels);
  }

  result.final_train_bce = train_set_bce(params, data.samples, vision_feats, targets, labels,
                                         *encoders.text);
  return result;
}

MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<Sample>& test,
                                 const Encoders& encoders) {
  check(!test.empty(), "[evaluate_checkpoint] empty test set");
  const TrainConfig config = TrainConfig::from_flat(ckpt.config);
  check_encoders(config, encoders);
  const ModelParams params = params_from_checkpoint(ckpt);

  LabelSpace labels;
  labels.affordance_names = ckpt.affordance_names;
  labels.object_names = ckpt.object_names;

  std::vector<Tensor> preds, gts;
  for (const Sample& s : test) {
    validate(s, labels.num_affordances(), labels.num_objects(), config.hp.patch_size);
    const PatchFeatureMap vision = encode_image(s.image, *encoders.vision);
    auto maps = predict_sample(params, vision, s.image.height, s.image.width, labels,
                               *encoders.text);
    for (const AffordanceMask& m : s.masks) {
      preds.push_back(maps[m.class_id]);
      gts.push_back(m.values);
    }
  }
  return evaluate_set(preds, gts);
}

std::vector<AblationRow> run_ablation(const TrainConfig& config, const TrainData& data,
                                      const std::vector<Sample>& test,
                                      const Encoders& encoders) {
  const std::array<std::pair<const char*, std::pair<bool, bool>>, 4> rows = {{
      {"bce", {false, false}},
      {"bce+ami", {true, false}},
      {"bce+omi", {false, true}},
      {"bce+ami+omi", {true, true}},
  }};
  std::vector<AblationRow> out;
  out.reserve(rows.size());
  for (const auto& [name, flags] : rows) {
    TrainConfig row_config = config;
    row_config.toggles.enable_ami = flags.first;
    row_config.toggles.enable_omi = flags.second;
    TrainResult result = train(row_config, data, encoders);
    out.push_back({name, evaluate_checkpoint(result.best, test, encoders)});
  }
  return out;
}

SweepResult grid_sweep(const TrainConfig& config, SweepAxis axis,
                       const std::vector<double>& values1, const std::vector<double>& values2,
                       const TrainData& data, const std::vector<Sample>& test,
                       const Encoders& encoders) {
  check(!values1.empty() && !values2.empty(), "[grid_sweep] empty grid");
  SweepResult result;
  result.axis = axis;
  result.values1 = values1;
  result.values2 = values2;
  for (double v1 : values1) {
    std::vector<MetricReport> row;
    for (double v2 : values2) {
      TrainConfig cell = config;
      if (axis == SweepAxis::kTemperature) {
        cell.hp.tau1 = v1;
        cell.hp.tau2 = v2;
      } else {
        cell.hp.lambda1 = v1;
        cell.hp.lambda2 = v2;
      }
      TrainResult r = train(cell, data, encoders);
      row.push_back(evaluate_checkpoint(r.best, test, encoders));
    }
    result.cells.push_back(std::move(row));
  }
  return result;
}

Checkpoint initial_checkpoint(const TrainConfig& config, const LabelSpace& labels) {
  config.validate();
  const ModelParams params = init_model(config.hp.seed, config.dims);
  // best_val_kld -1: not evaluated.
  return snapshot_params(params, 0, -1.0, config.to_flat(), labels);
}

}  // namespace afford
