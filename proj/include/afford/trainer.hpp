#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "afford/checkpoint.hpp"
#include "afford/core_types.hpp"
#include "afford/metrics.hpp"
#include "afford/model.hpp"

namespace afford {

struct TrainConfig {
  Hyperparams hp;
  ModelDims dims;
  LossToggles toggles;
  int eval_interval = 50;
  double val_fraction = 0.0;   // 0: select the best checkpoint on the training set
  int accumulate_steps = 1;
  bool shared_text_encoder = true;
  std::string fusion_strategy = "softmax_linear";
  std::string root;            // dataset root; consumed by the CLI layer
  std::string split = "Seen";
  std::string checkpoint_path;
  std::string out_dir = ".";

  void validate() const;
  std::map<std::string, std::string> to_flat() const;
  static TrainConfig from_flat(const std::map<std::string, std::string>& kv);
};

struct Encoders {
  const TextEncoder* text = nullptr;         // affordance branch
  const TextEncoder* object_text = nullptr;  // object branch; may alias text
  const ImageEncoder* vision = nullptr;
};

// Owns the deterministic stub encoders for a config. Seeds derive from the
// master seed, so a checkpoint's config snapshot is enough to rebuild them.
struct StubEncoders {
  std::unique_ptr<TextEncoder> text;
  std::unique_ptr<TextEncoder> object_text;  // null when shared
  std::unique_ptr<ImageEncoder> vision;
  Encoders view() const;
};

StubEncoders make_stub_encoders(const TrainConfig& config);

struct TrainData {
  std::vector<Sample> samples;
  LabelSpace labels;
};

struct EvalPoint {
  int iteration;
  double val_kld;
};

struct TrainResult {
  Checkpoint best;
  double best_val_kld = 0.0;
  double final_train_bce = 0.0;  // Eq-level BCE of the final parameters on the train set
  std::vector<EvalPoint> history;
  LossReport last_loss;
};

// One-shot loop: cycles the samples in a seeded-shuffled order, applies plain
// SGD (optional momentum) to the trainable parameters only, tracks the best
// checkpoint by validation KLD and returns it. Aborts with a diagnostic
// naming the offending term on a non-finite loss.
TrainResult train(const TrainConfig& config, const TrainData& data, const Encoders& encoders);

// Deterministic forward evaluation of a saved checkpoint on aligned
// (image, class) pairs.
MetricReport evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<Sample>& test,
                                 const Encoders& encoders);

struct AblationRow {
  std::string name;
  MetricReport report;
};

// Four seeded runs toggling the alignment terms: base, +affordance, +object,
// +both; rows come back in that order.
std::vector<AblationRow> run_ablation(const TrainConfig& config, const TrainData& data,
                                      const std::vector<Sample>& test,
                                      const Encoders& encoders);

enum class SweepAxis { kTemperature, kLossWeight };

struct SweepResult {
  SweepAxis axis;
  std::vector<double> values1;  // tau1 or lambda1
  std::vector<double> values2;  // tau2 or lambda2
  std::vector<std::vector<MetricReport>> cells;  // [i][j] over values1 x values2
};

SweepResult grid_sweep(const TrainConfig& config, SweepAxis axis,
                       const std::vector<double>& values1, const std::vector<double>& values2,
                       const TrainData& data, const std::vector<Sample>& test,
                       const Encoders& encoders);

// Checkpoint of the freshly initialized model; best_val_kld is recorded as -1
// (not evaluated).
Checkpoint initial_checkpoint(const TrainConfig& config, const LabelSpace& labels);

}  // namespace afford
