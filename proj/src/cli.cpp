#include "afford/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "afford/config.hpp"
#include "afford/dataset.hpp"
#include "afford/heatmap.hpp"
#include "afford/metrics.hpp"
#include "afford/trainer.hpp"

namespace fs = std::filesystem;

namespace afford {

namespace {

struct CommonOpts {
  std::string config_path;
  std::string split = "seen";
  bool one_shot = false;
  // Raw override values; "counted" flags below tell us which were passed.
  std::uint64_t seed = 0;
  double tau1 = 0, tau2 = 0, lambda1 = 0, lambda2 = 0, lr = 0;
  int iters = 0;
  std::string root;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool config_required) {
  auto* cfg = cmd->add_option("--config", o.config_path, "flat key-value config file");
  if (config_required) cfg->required();
  cmd->add_option("--seed", o.seed, "master seed override");
  cmd->add_option("--split", o.split, "dataset split")
      ->check(CLI::IsMember({"seen", "unseen"}));
  cmd->add_flag("--one-shot", o.one_shot, "use the one-shot (trainset) manifest");
  cmd->add_option("--tau1", o.tau1, "affordance InfoNCE temperature");
  cmd->add_option("--tau2", o.tau2, "object InfoNCE temperature");
  cmd->add_option("--lambda1", o.lambda1, "affordance alignment weight");
  cmd->add_option("--lambda2", o.lambda2, "object alignment weight");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--iters", o.iters, "iteration count");
  cmd->add_option("--root", o.root, "dataset root override");
}

TrainConfig build_config(const CLI::App* cmd, const CommonOpts& o) {
  TrainConfig c;
  if (cmd->count("--config")) apply_config(c, read_config_file(o.config_path));
  if (cmd->count("--seed")) c.hp.seed = o.seed;
  if (cmd->count("--tau1")) c.hp.tau1 = o.tau1;
  if (cmd->count("--tau2")) c.hp.tau2 = o.tau2;
  if (cmd->count("--lambda1")) c.hp.lambda1 = o.lambda1;
  if (cmd->count("--lambda2")) c.hp.lambda2 = o.lambda2;
  if (cmd->count("--lr")) c.hp.lr = o.lr;
  if (cmd->count("--iters")) c.hp.iterations = o.iters;
  if (cmd->count("--root")) c.root = o.root;
  if (cmd->count("--split")) c.split = o.split == "seen" ? "Seen" : "Unseen";
  check(!c.root.empty(), "[cli] no dataset root (set 'root' in the config or pass --root)");
  return c;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  check(out.good(), "[cli] cannot write: " + path);
  out << text;
}

TrainData load_train_data(const TrainConfig& c) {
  const DatasetManifest manifest = load_manifest(c.root, c.split, /*one_shot=*/true);
  TrainData data;
  data.labels = manifest.labels;
  data.samples = load_samples(manifest);
  return data;
}

std::vector<Sample> load_eval_samples(const TrainConfig& c, bool one_shot,
                                      const LabelSpace* expected) {
  const DatasetManifest manifest = load_manifest(c.root, c.split, one_shot, expected);
  return load_samples(manifest);
}

std::string checkpoint_target(const TrainConfig& c) {
  if (!c.checkpoint_path.empty()) return c.checkpoint_path;
  return (fs::path(c.out_dir) / "model.ckpt").string();
}

int cmd_train(const CLI::App* cmd, const CommonOpts& o) {
  TrainConfig config = build_config(cmd, o);
  const TrainData data = load_train_data(config);
  const StubEncoders encoders = make_stub_encoders(config);

  std::cout << "training on " << data.samples.size() << " samples ("
            << data.labels.num_affordances() << " affordances, "
            << data.labels.num_objects() << " objects)\n";
  const TrainResult result = train(config, data, encoders.view());
  for (const EvalPoint& p : result.history)
    std::printf("iter %6d  val_kld %.6f\n", p.iteration, p.val_kld);
  std::printf("final_train_bce %.6f\n", result.final_train_bce);
  std::printf("best_val_kld %.6f (iteration %lld)\n", result.best_val_kld,
              static_cast<long long>(result.best.iteration));

  fs::create_directories(config.out_dir);
  const std::string target = checkpoint_target(config);
  save_checkpoint(result.best, target);
  std::cout << "checkpoint written: " << target << "\n";
  return 0;
}

int cmd_eval(const CLI::App* cmd, const CommonOpts& o, const std::string& ckpt_override) {
  TrainConfig cli_config = build_config(cmd, o);
  const std::string ckpt_path =
      !ckpt_override.empty() ? ckpt_override : checkpoint_target(cli_config);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);

  // The model must be evaluated with the encoders it was trained against.
  TrainConfig model_config = TrainConfig::from_flat(ckpt.config);
  const StubEncoders encoders = make_stub_encoders(model_config);

  LabelSpace expected;
  expected.affordance_names = ckpt.affordance_names;
  expected.object_names = ckpt.object_names;
  const auto samples = load_eval_samples(cli_config, o.one_shot, &expected);

  const MetricReport report = evaluate_checkpoint(ckpt, samples, encoders.view());
  std::cout << report_to_text(report);
  fs::create_directories(cli_config.out_dir);
  write_file((fs::path(cli_config.out_dir) / "report.txt").string(), report_to_text(report));
  write_file((fs::path(cli_config.out_dir) / "report.json").string(), report_to_json(report));
  return 0;
}

int cmd_ablate(const CLI::App* cmd, const CommonOpts& o) {
  TrainConfig config = build_config(cmd, o);
  const TrainData data = load_train_data(config);
  const auto test = load_eval_samples(config, /*one_shot=*/false, &data.labels);
  const StubEncoders encoders = make_stub_encoders(config);

  const auto rows = run_ablation(config, data, test, encoders.view());
  std::ostringstream table;
  table << "config        kld       sim       nss\n";
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s  %.6f  %.6f  %.6f\n", row.name.c_str(),
                  row.report.kld, row.report.sim, row.report.nss);
    table << line;
    j.push_back({{"name", row.name},
                 {"kld", row.report.kld},
                 {"sim", row.report.sim},
                 {"nss", row.report.nss},
                 {"n_samples", row.report.n_samples}});
  }
  std::cout << table.str();
  fs::create_directories(config.out_dir);
  write_file((fs::path(config.out_dir) / "ablation.txt").string(), table.str());
  write_file((fs::path(config.out_dir) / "ablation.json").string(), j.dump(2) + "\n");
  return 0;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    check(!tok.empty(), "[cli] empty grid value in: " + csv);
    out.push_back(std::stod(tok));
  }
  check(!out.empty(), "[cli] empty grid: " + csv);
  return out;
}

int cmd_sweep(const CLI::App* cmd, const CommonOpts& o, const std::string& axis,
              const std::string& grid_csv, const std::string& grid2_csv) {
  TrainConfig config = build_config(cmd, o);
  const TrainData data = load_train_data(config);
  const auto test = load_eval_samples(config, /*one_shot=*/false, &data.labels);
  const StubEncoders encoders = make_stub_encoders(config);

  const SweepAxis sweep_axis =
      axis == "tau" ? SweepAxis::kTemperature : SweepAxis::kLossWeight;
  std::vector<double> grid1;
  if (!grid_csv.empty()) grid1 = parse_grid(grid_csv);
  else if (sweep_axis == SweepAxis::kTemperature) grid1 = {0.01, 0.05, 0.1};
  else grid1 = {0.01, 0.05, 0.1, 0.5, 1.0};
  const std::vector<double> grid2 = grid2_csv.empty() ? grid1 : parse_grid(grid2_csv);

  const SweepResult result =
      grid_sweep(config, sweep_axis, grid1, grid2, data, test, encoders.view());

  const char* n1 = sweep_axis == SweepAxis::kTemperature ? "tau1" : "lambda1";
  const char* n2 = sweep_axis == SweepAxis::kTemperature ? "tau2" : "lambda2";
  std::ostringstream table;
  nlohmann::json j;
  j["axis"] = axis;
  j[n1] = grid1;
  j[n2] = grid2;
  for (const char* metric : {"kld", "sim", "nss"}) {
    table << metric << " (" << n1 << " rows x " << n2 << " cols)\n";
    nlohmann::json m = nlohmann::json::array();
    for (std::size_t i = 0; i < grid1.size(); ++i) {
      nlohmann::json mrow = nlohmann::json::array();
      for (std::size_t k = 0; k < grid2.size(); ++k) {
        const MetricReport& r = result.cells[i][k];
        const double v = metric == std::string("kld")   ? r.kld
                         : metric == std::string("sim") ? r.sim
                                                        : r.nss;
        char cell[32];
        std::snprintf(cell, sizeof(cell), " %9.6f", v);
        table << cell;
        mrow.push_back(v);
      }
      table << "\n";
      m.push_back(mrow);
    }
    table << "\n";
    j[metric] = m;
  }
  std::cout << table.str();
  fs::create_directories(config.out_dir);
  write_file((fs::path(config.out_dir) / "sweep.txt").string(), table.str());
  write_file((fs::path(config.out_dir) / "sweep.json").string(), j.dump(2) + "\n");
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& image_path,
                const std::string& out_dir) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  TrainConfig model_config = TrainConfig::from_flat(ckpt.config);
  const StubEncoders encoders = make_stub_encoders(model_config);
  const ModelParams params = params_from_checkpoint(ckpt);

  LabelSpace labels;
  labels.affordance_names = ckpt.affordance_names;
  labels.object_names = ckpt.object_names;

  const ImageTensor image = load_image(image_path);
  const PatchFeatureMap vision = encode_image(image, *encoders.view().vision);
  const auto maps = predict_sample(params, vision, image.height, image.width, labels,
                                   *encoders.view().text);

  fs::create_directories(out_dir);
  for (std::size_t c = 0; c < maps.size(); ++c) {
    const std::string stem = (fs::path(out_dir) / labels.affordance_names[c]).string();
    export_heatmap(maps[c], image, stem);
    std::cout << "wrote " << stem << ".pgm and " << stem << "_overlay.ppm\n";
  }
  return 0;
}

int cmd_gen_synthetic(const CLI::App* cmd, const CommonOpts& o, SyntheticSpec spec,
                      const std::string& out_root) {
  if (cmd->count("--config")) apply_config(spec, read_config_file(o.config_path));
  if (cmd->count("--seed")) spec.seed = o.seed;
  generate_synthetic(spec, out_root);
  std::cout << "synthetic dataset written under " << out_root << "/Seen ("
            << spec.n_objects << " objects x " << spec.n_affordances << " affordances, "
            << spec.n_objects << " train / " << spec.n_objects * spec.test_variants
            << " test images)\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"one-shot text-guided affordance grounding"};
  app.require_subcommand(1);

  CommonOpts train_o, eval_o, ablate_o, sweep_o, gen_o;
  std::string eval_ckpt, predict_ckpt, predict_image, predict_out = ".";
  std::string sweep_axis, sweep_grid, sweep_grid2;
  SyntheticSpec gen_spec;
  std::string gen_root = "synthetic-data";

  auto* train_cmd = app.add_subcommand("train", "train on the one-shot split");
  add_common(train_cmd, train_o, /*config_required=*/true);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval_cmd, eval_o, /*config_required=*/true);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file override");

  auto* ablate_cmd = app.add_subcommand("ablate", "run the four loss-term configurations");
  add_common(ablate_cmd, ablate_o, /*config_required=*/true);

  auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep over temperatures or weights");
  add_common(sweep_cmd, sweep_o, /*config_required=*/true);
  sweep_cmd->add_option("--axis", sweep_axis, "tau or lambda")
      ->required()
      ->check(CLI::IsMember({"tau", "lambda"}));
  sweep_cmd->add_option("--grid", sweep_grid, "comma-separated first-axis values");
  sweep_cmd->add_option("--grid2", sweep_grid2, "comma-separated second-axis values");

  auto* predict_cmd = app.add_subcommand("predict", "export heatmaps for one image");
  predict_cmd->add_option("--checkpoint", predict_ckpt, "checkpoint file")->required();
  predict_cmd->add_option("--image", predict_image, "input image (PPM)")->required();
  predict_cmd->add_option("--out", predict_out, "output directory");

  auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic one-shot dataset");
  add_common(gen_cmd, gen_o, /*config_required=*/false);
  gen_cmd->add_option("--out", gen_root, "dataset root to create");
  gen_cmd->add_option("--objects", gen_spec.n_objects, "object count");
  gen_cmd->add_option("--affordances", gen_spec.n_affordances, "affordance count");
  gen_cmd->add_option("--size", gen_spec.image_size, "image side length");
  gen_cmd->add_option("--variants", gen_spec.test_variants, "test variants per object");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // 0: --help and friends
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_cmd, train_o);
    if (eval_cmd->parsed()) return cmd_eval(eval_cmd, eval_o, eval_ckpt);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_cmd, ablate_o);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_cmd, sweep_o, sweep_axis, sweep_grid, sweep_grid2);
    if (predict_cmd->parsed()) return cmd_predict(predict_ckpt, predict_image, predict_out);
    if (gen_cmd->parsed()) return cmd_gen_synthetic(gen_cmd, gen_o, gen_spec, gen_root);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace afford
