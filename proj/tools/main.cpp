// im2im: paired image-to-image translation with conditional adversarial nets.
// Subcommands: prepare, synth, train, infer, eval, arch.

#include <CLI11.hpp>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "im2im/checkpoint.hpp"
#include "im2im/config.hpp"
#include "im2im/data.hpp"
#include "im2im/metrics.hpp"
#include "im2im/synthetic.hpp"
#include "im2im/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace im2im;

namespace {

std::string default_out_root() {
  const char* env = std::getenv("IM2IM_OUT_ROOT");
  return env && *env ? env : "runs";
}

Tensor<float> reshape_to_batch(const Tensor<float>& chw) {
  if (chw.ndim() == 4) return chw;
  return Tensor<float>::from_values({1, chw.dim(0), chw.dim(1), chw.dim(2)}, chw.values());
}

std::vector<TrainPair<float>> load_pairs(const DatasetManifest& m) {
  std::vector<TrainPair<float>> out;
  for (const auto& e : m.entries) {
    auto s = load_paired<float>(m, e);
    out.push_back({s.x, s.y, s.id});
  }
  if (out.empty()) throw Error("config", "manifest has no entries");
  return out;
}

void check_training_extent(const RunConfig& cfg, int64_t extent) {
  const int64_t div = int64_t(1) << cfg.depth;
  if (extent % div != 0 || extent < div)
    throw Error("size", "training extent " + std::to_string(extent) +
                            " must be a positive multiple of 2^depth = " + std::to_string(div) +
                            " (reduce --depth or change --crop-size)");
}

ImageU8 triptych(const Tensor<float>& x, const Tensor<float>& y, const Tensor<float>& out) {
  return hconcat_images({tensor_to_image(x), tensor_to_image(y), tensor_to_image(out)});
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareArgs {
  std::string root;
  std::string layout = "side_by_side";
  double split_frac = 0.8;
  uint64_t seed = 1;
};

void run_prepare(const PrepareArgs& a) {
  auto [train, test] = prepare_split(a.root, parse_layout(a.layout), a.split_frac, a.seed);
  save_manifest(train, (fs::path(a.root) / "train.txt").string());
  save_manifest(test, (fs::path(a.root) / "test.txt").string());
  std::printf("prepared %s: %zu train, %zu test (seed %" PRIu64 ")\n", a.root.c_str(),
              train.entries.size(), test.entries.size(), a.seed);
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  std::string task = "shapes";
  int count = 64;
  int64_t size = 64;
  uint64_t seed = 1;
};

void run_synth(const SynthArgs& a) {
  fs::create_directories(a.out);
  RngState rng(a.seed);
  for (int i = 0; i < a.count; ++i) {
    PairedSample<float> p;
    if (a.task == "shapes") {
      p = synth_shapes_pair<float>(a.size, rng);
    } else if (a.task == "bimodal") {
      p = synth_bimodal_pair<float>(a.size, rng, kBimodalColorA, kBimodalColorB);
    } else {
      throw Error("config", "unknown synth task '" + a.task + "' (shapes|bimodal)");
    }
    char name[32];
    std::snprintf(name, sizeof name, "p%04d.png", i);
    png_write_file((fs::path(a.out) / name).string(), pair_to_side_by_side(p));
  }
  std::printf("wrote %d %s pairs (%" PRId64 "x%" PRId64 ") to %s\n", a.count, a.task.c_str(),
              a.size, a.size, a.out.c_str());
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config_path;
  std::string resume_path;
  std::string manifest;
  RunConfig cfg;
  // presence flags filled from CLI11 counts
  std::map<std::string, bool> given;
};

void emit_checkpoint_and_sample(Trainer<float>& trainer, const RunConfig& cfg,
                                const std::vector<TrainPair<float>>& data,
                                const std::string& out_dir, uint64_t step) {
  char name[64];
  std::snprintf(name, sizeof name, "ckpt_%07" PRIu64 ".bin", step);
  save_checkpoint(make_checkpoint(trainer, cfg.serialize()), (fs::path(out_dir) / name).string());

  const auto& first = data.front();
  const int64_t div = int64_t(1) << cfg.depth;
  if (first.x.dim(1) % div == 0 && first.x.dim(2) % div == 0) {
    auto out = trainer.translate(reshape_to_batch(first.x), cfg.seed);
    std::snprintf(name, sizeof name, "sample_%07" PRIu64 ".png", step);
    png_write_file((fs::path(out_dir) / name).string(), triptych(first.x, first.y, out));
  }
}

void run_train(TrainArgs& a) {
  RunConfig cfg = a.cfg;  // file/resume values with flag overrides already applied
  Checkpoint resume_ckpt;
  const bool resuming = !a.resume_path.empty();
  if (resuming) resume_ckpt = load_checkpoint(a.resume_path);

  if (cfg.data_root.empty()) throw Error("config", "--root (or data_root in config) is required");
  if (cfg.out_dir.empty())
    cfg.out_dir = (fs::path(default_out_root()) / cfg.task).string();
  cfg.to_train_config().validate();

  const std::string manifest_path =
      !a.manifest.empty() ? a.manifest : (fs::path(cfg.data_root) / "train.txt").string();
  auto manifest = load_manifest(manifest_path, cfg.data_root);
  auto data = load_pairs(manifest);

  const bool augmenting = cfg.jitter || cfg.mirror;
  check_training_extent(cfg, cfg.jitter ? cfg.crop_size : data.front().x.dim(1));

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream f((fs::path(cfg.out_dir) / "config.txt").string());
    f << cfg.serialize();
    std::ofstream v((fs::path(cfg.out_dir) / "VERSION").string());
    v << version_string() << " " << version_hash() << "\n";
  }

  Trainer<float> trainer(cfg.to_train_config());
  if (resuming) restore_trainer(trainer, resume_ckpt);
  if (augmenting) {
    AugmentConfig aug = cfg.to_augment_config();
    trainer.set_sample_transform([aug](const TrainPair<float>& p, RngState& rng) {
      PairedSample<float> s{p.x, p.y, p.id};
      auto out = jitter_and_mirror(s, aug, rng);
      return TrainPair<float>{out.x, out.y, out.id};
    });
  }

  const std::string csv_path = (fs::path(cfg.out_dir) / "metrics.csv").string();
  std::ofstream csv(csv_path, resuming ? std::ios::app : std::ios::trunc);
  if (!csv) throw Error("io", "cannot open '" + csv_path + "'");
  if (!resuming) csv << "iter,loss_d,loss_g_adv,loss_g_l1,wall_ms\n";

  trainer.run(data, [&](const MetricRow& row) {
    char line[256];
    std::snprintf(line, sizeof line, "%" PRIu64 ",%.9g,%.9g,%.9g,%.3f\n", row.iter, row.loss_d,
                  row.loss_g_adv, row.loss_g_l1, row.wall_ms);
    csv << line;
    csv.flush();
    if (cfg.checkpoint_every > 0 && row.iter % uint64_t(cfg.checkpoint_every) == 0)
      emit_checkpoint_and_sample(trainer, cfg, data, cfg.out_dir, row.iter);
  });
  emit_checkpoint_and_sample(trainer, cfg, data, cfg.out_dir, trainer.step());
  char final_name[64];
  std::snprintf(final_name, sizeof final_name, "ckpt_%07" PRIu64 ".bin", trainer.step());
  std::printf("trained %" PRIu64 " iterations; run directory: %s (latest checkpoint %s)\n",
              trainer.step(), cfg.out_dir.c_str(), final_name);
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
  int64_t size = 0;
  int64_t seed = -1;
};

void run_infer(const InferArgs& a) {
  auto ckpt = load_checkpoint(a.checkpoint);
  RunConfig cfg = RunConfig::parse(ckpt.config_text);
  TrainConfig tc = cfg.to_train_config();
  tc.iterations = 0;
  Trainer<float> trainer(tc);
  restore_trainer(trainer, ckpt);

  auto x = image_to_tensor<float>(png_read_file(a.input));
  if (a.size > 0) x = bilinear_resize(x, a.size, a.size);
  const int64_t div = int64_t(1) << cfg.depth;
  if (x.dim(1) % div != 0 || x.dim(2) % div != 0 || x.dim(1) < div || x.dim(2) < div)
    throw Error("size", "input extent " + std::to_string(x.dim(1)) + "x" +
                            std::to_string(x.dim(2)) + " must be a positive multiple of 2^depth = " +
                            std::to_string(div) + "; pass --size to resize");

  const uint64_t seed = a.seed >= 0 ? uint64_t(a.seed) : cfg.seed;
  auto out = trainer.translate(reshape_to_batch(x), seed);
  png_write_file(a.output, tensor_to_image(out));
  std::printf("translated %s (%" PRId64 "x%" PRId64 ") -> %s (seed %" PRIu64 ")\n",
              a.input.c_str(), x.dim(2), x.dim(1), a.output.c_str(), seed);
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string checkpoint;
  std::string manifest;
  std::string root;
  std::string metrics = "l1";
  std::string palette_path;
  std::string out_dir = "eval_out";
};

void run_eval(const EvalArgs& a) {
  auto ckpt = load_checkpoint(a.checkpoint);
  RunConfig cfg = RunConfig::parse(ckpt.config_text);
  TrainConfig tc = cfg.to_train_config();
  tc.iterations = 0;
  Trainer<float> trainer(tc);
  restore_trainer(trainer, ckpt);

  const std::string root = a.root.empty() ? cfg.data_root : a.root;
  auto manifest = load_manifest(a.manifest, root);
  auto pairs = load_pairs(manifest);

  std::vector<bool> want(3, false);  // l1, hist, seg
  {
    std::stringstream ss(a.metrics);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok == "l1") want[0] = true;
      else if (tok == "hist") want[1] = true;
      else if (tok == "seg") want[2] = true;
      else throw Error("config", "unknown metric '" + tok + "' (l1|hist|seg)");
    }
  }
  if (want[2] && a.palette_path.empty())
    throw Error("config", "--palette is required when seg metrics are requested");

  fs::create_directories(a.out_dir);
  json out;
  std::vector<Tensor<float>> outputs, targets;
  std::vector<double> l1s;
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto y_hat = trainer.translate(reshape_to_batch(pairs[i].x),
                                   RngState::derive(cfg.seed, 5000 + i).seed());
    Tensor<float> flat = Tensor<float>::from_values(
        {y_hat.dim(1), y_hat.dim(2), y_hat.dim(3)}, y_hat.values());
    outputs.push_back(flat);
    targets.push_back(pairs[i].y);
    l1s.push_back(l1_error(flat, pairs[i].y));
  }

  std::ofstream table((fs::path(a.out_dir) / "metrics.txt").string());
  if (want[0]) {
    double mean = 0;
    for (double v : l1s) mean += v;
    mean /= double(l1s.size());
    out["l1"]["mean"] = mean;
    out["l1"]["per_image"] = l1s;
    table << "l1_mean " << mean << "\n";
    std::printf("l1_mean %.6f\n", mean);
  }
  if (want[1]) {
    const char* names[3] = {"L", "a", "b"};
    for (int ch = 0; ch < 3; ++ch) {
      auto h_out = lab_marginal_hist(outputs, ch);
      auto h_gt = lab_marginal_hist(targets, ch);
      const double inter = hist_intersection(h_out, h_gt);
      out["hist"][names[ch]]["intersection"] = inter;
      json pts_out = json::array(), pts_gt = json::array();
      for (auto [c, lp] : hist_log_plot(h_out)) pts_out.push_back({c, lp});
      for (auto [c, lp] : hist_log_plot(h_gt)) pts_gt.push_back({c, lp});
      out["hist"][names[ch]]["output_log_prob"] = pts_out;
      out["hist"][names[ch]]["gt_log_prob"] = pts_gt;
      table << "hist_intersection_" << names[ch] << " " << inter << "\n";
      std::printf("hist_intersection_%s %.6f\n", names[ch], inter);
    }
  }
  if (want[2]) {
    auto palette = load_palette(a.palette_path);
    // global aggregation: concatenate all label maps into one tall map
    LabelMap pred_all, gt_all;
    pred_all.w = gt_all.w = 1;
    for (size_t i = 0; i < outputs.size(); ++i) {
      auto pm = quantize_to_labels(outputs[i], palette);
      auto gm = quantize_to_labels(targets[i], palette);
      pred_all.labels.insert(pred_all.labels.end(), pm.labels.begin(), pm.labels.end());
      gt_all.labels.insert(gt_all.labels.end(), gm.labels.begin(), gm.labels.end());
    }
    pred_all.h = int64_t(pred_all.labels.size());
    gt_all.h = int64_t(gt_all.labels.size());
    int n_classes = 0;
    for (const auto& e : palette.entries) n_classes = std::max(n_classes, e.id + 1);
    auto m = seg_metrics(pred_all, gt_all, n_classes);
    out["seg"]["per_pixel_acc"] = m.per_pixel_acc;
    out["seg"]["per_class_acc"] = m.per_class_acc;
    out["seg"]["class_iou"] = m.class_iou;
    for (const auto& pc : m.per_class)
      out["seg"]["per_class"].push_back(
          {{"id", pc.id}, {"gt_pixels", pc.gt_pixels}, {"recall", pc.recall}, {"iou", pc.iou}});
    table << "seg_per_pixel_acc " << m.per_pixel_acc << "\n"
          << "seg_per_class_acc " << m.per_class_acc << "\n"
          << "seg_class_iou " << m.class_iou << "\n";
    std::printf("seg %.4f %.4f %.4f\n", m.per_pixel_acc, m.per_class_acc, m.class_iou);
  }

  std::ofstream jf((fs::path(a.out_dir) / "eval.json").string());
  jf << out.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// arch

struct ArchArgs {
  std::string preset;
  std::string spec;
  int64_t input_size = 256;
  int64_t in_channels = 6;
  bool as_json = false;
};

void run_arch(const ArchArgs& a) {
  if ((a.preset.empty()) == (a.spec.empty()))
    throw Error("config", "pass exactly one of --preset or --spec");

  json j;
  if (!a.preset.empty() && a.preset[0] == 'g') {
    GeneratorConfig cfg;
    if (a.preset == "g-unet") cfg.variant = GeneratorVariant::unet;
    else if (a.preset == "g-encdec") cfg.variant = GeneratorVariant::encoder_decoder;
    else throw Error("config", "unknown preset '" + a.preset + "'");
    auto rows = generator_layer_table(cfg, a.input_size);
    j["preset"] = a.preset;
    j["encoder"] = generator_encoder_string(cfg);
    j["decoder"] = generator_decoder_string(cfg);
    j["params"] = generator_param_count(cfg);
    if (!a.as_json) {
      std::printf("%s @ %" PRId64 "x%" PRId64 "\n", a.preset.c_str(), a.input_size, a.input_size);
      std::printf("encoder: %s\n", generator_encoder_string(cfg).c_str());
      std::printf("decoder: %s\n", generator_decoder_string(cfg).c_str());
      std::printf("%-6s %5s -> %-5s %9s %8s\n", "layer", "in", "out", "extent", "params");
    }
    for (const auto& r : rows) {
      j["layers"].push_back({{"name", r.name},
                             {"in", r.in_channels},
                             {"out", r.out_channels},
                             {"extent", r.out_extent},
                             {"params", r.params},
                             {"dropout", r.dropout}});
      if (!a.as_json)
        std::printf("%-6s %5" PRId64 " -> %-5" PRId64 " %6" PRId64 "px %8" PRId64 "%s\n",
                    r.name.c_str(), r.in_channels, r.out_channels, r.out_extent, r.params,
                    r.dropout ? "  dropout" : "");
    }
    if (!a.as_json)
      std::printf("total params %" PRId64 "\n", generator_param_count(cfg));
  } else {
    ArchSpec spec;
    std::string label;
    if (!a.spec.empty()) {
      spec = parse_arch(a.spec);
      label = a.spec;
    } else {
      DiscriminatorConfig dc;
      if (a.preset == "d1") dc.patch = 1;
      else if (a.preset == "d16") dc.patch = 16;
      else if (a.preset == "d70") dc.patch = 70;
      else if (a.preset == "d286") dc.patch = 286;
      else throw Error("config", "unknown preset '" + a.preset + "'");
      spec = discriminator_spec(dc);
      label = a.preset;
    }
    const ReceptiveField rf = receptive_field(spec);
    const bool padded = a.input_size < rf.size;
    const int64_t eff = padded ? rf.size : a.input_size;
    auto shapes = output_shapes(spec, {1, a.in_channels, eff, eff});
    j["arch"] = print_arch(spec);
    j["receptive_field"] = rf.size;
    j["jump"] = rf.jump;
    j["params"] = param_count(spec, a.in_channels);
    j["input_padded_to"] = padded ? rf.size : a.input_size;
    if (!a.as_json) {
      std::printf("%s: %s  (in_channels %" PRId64 ")\n", label.c_str(),
                  print_arch(spec).c_str(), a.in_channels);
      std::printf("receptive field %" PRId64 "  jump %" PRId64 "  params %" PRId64 "\n", rf.size,
                  rf.jump, param_count(spec, a.in_channels));
      if (padded)
        std::printf("note: input %" PRId64 " < receptive field %" PRId64
                    ", zero-padded to %" PRId64 "\n",
                    a.input_size, rf.size, rf.size);
      std::printf("%-6s %-22s %8s\n", "layer", "output", "params");
    }
    int64_t prev = a.in_channels;
    for (size_t i = 0; i <= spec.layers.size(); ++i) {
      const bool head = i == spec.layers.size();
      const int64_t f = head ? spec.head.filters : spec.layers[i].filters;
      const int64_t k = head ? spec.head.kernel : spec.layers[i].kernel;
      int64_t params = prev * f * k * k + f;
      if (!head && spec.layers[i].batchnorm) params += 2 * f;
      const Shape& s = shapes[i];
      const std::string name = head ? "head" : "conv" + std::to_string(i);
      j["layers"].push_back({{"name", name}, {"shape", s}, {"params", params}});
      if (!a.as_json)
        std::printf("%-6s [%" PRId64 ",%" PRId64 ",%" PRId64 ",%" PRId64 "] %14" PRId64 "\n",
                    name.c_str(), s[0], s[1], s[2], s[3], params);
      prev = f;
    }
  }
  if (a.as_json) std::printf("%s\n", j.dump(2).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paired image-to-image translation with conditional adversarial networks"};
  app.require_subcommand(1);

  PrepareArgs pa;
  auto* prepare = app.add_subcommand("prepare", "scan a dataset folder and write train/test manifests");
  prepare->add_option("--root", pa.root, "dataset directory")->required();
  prepare->add_option("--layout", pa.layout, "side_by_side|two_folders");
  prepare->add_option("--split-frac", pa.split_frac, "train fraction (default 0.8)");
  prepare->add_option("--seed", pa.seed, "split shuffle seed");
  prepare->callback([&] { run_prepare(pa); });

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic paired dataset");
  synth->add_option("--out", sa.out, "output directory")->required();
  synth->add_option("--task", sa.task, "shapes|bimodal");
  synth->add_option("--count", sa.count, "number of pairs");
  synth->add_option("--size", sa.size, "image extent");
  synth->add_option("--seed", sa.seed, "generation seed");
  synth->callback([&] { run_synth(sa); });

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a translation model");
  train->add_option("--config", ta.config_path, "key=value config file");
  train->add_option("--resume", ta.resume_path, "checkpoint to resume from");
  train->add_option("--manifest", ta.manifest, "training manifest (default <root>/train.txt)");
  auto* o_task = train->add_option("--task", ta.cfg.task, "run name");
  auto* o_root = train->add_option("--root", ta.cfg.data_root, "dataset root");
  std::string layout_s, variant_s, objective_s;
  auto* o_layout = train->add_option("--layout", layout_s, "side_by_side|two_folders");
  auto* o_variant = train->add_option("--variant", variant_s, "unet|encoder_decoder");
  auto* o_depth = train->add_option("--depth", ta.cfg.depth, "generator depth");
  auto* o_base = train->add_option("--base-filters", ta.cfg.base_filters, "generator width");
  auto* o_inch = train->add_option("--in-channels", ta.cfg.in_channels, "");
  auto* o_outch = train->add_option("--out-channels", ta.cfg.out_channels, "");
  auto* o_patch = train->add_option("--patch", ta.cfg.patch, "discriminator patch: 1|16|70|286");
  auto* o_dfilt = train->add_option("--d-filters", ta.cfg.d_filters, "discriminator width");
  auto* o_obj = train->add_option("--objective", objective_s, "l1|gan|cgan|l1+gan|l1+cgan");
  auto* o_lambda = train->add_option("--lambda", ta.cfg.lambda, "L1 weight (default 100)");
  auto* o_batch = train->add_option("--batch", ta.cfg.batch_size, "batch size 1..10");
  auto* o_iters = train->add_option("--iters", ta.cfg.iterations, "optimizer iterations");
  auto* o_seed = train->add_option("--seed", ta.cfg.seed, "run seed");
  auto* o_lr = train->add_option("--lr", ta.cfg.lr, "Adam learning rate");
  auto* o_jit = train->add_option("--jitter", ta.cfg.jitter, "resize+crop jitter (true|false)");
  auto* o_mir = train->add_option("--mirror", ta.cfg.mirror, "horizontal mirroring (true|false)");
  auto* o_load = train->add_option("--load-size", ta.cfg.load_size, "jitter resize target");
  auto* o_crop = train->add_option("--crop-size", ta.cfg.crop_size, "training extent");
  auto* o_out = train->add_option("--out", ta.cfg.out_dir, "run directory");
  auto* o_ck = train->add_option("--ckpt-every", ta.cfg.checkpoint_every, "checkpoint cadence");
  train->callback([&] {
    RunConfig base;
    Checkpoint ck;
    if (!ta.resume_path.empty()) {
      ck = load_checkpoint(ta.resume_path);
      base = RunConfig::parse(ck.config_text);
    } else if (!ta.config_path.empty()) {
      base = RunConfig::load_file(ta.config_path);
    }
    if (o_task->count()) base.task = ta.cfg.task;
    if (o_root->count()) base.data_root = ta.cfg.data_root;
    if (o_layout->count()) base.layout = parse_layout(layout_s);
    if (o_variant->count()) base.variant = RunConfig::parse_variant(variant_s);
    if (o_depth->count()) base.depth = ta.cfg.depth;
    if (o_base->count()) base.base_filters = ta.cfg.base_filters;
    if (o_inch->count()) base.in_channels = ta.cfg.in_channels;
    if (o_outch->count()) base.out_channels = ta.cfg.out_channels;
    if (o_patch->count()) base.patch = ta.cfg.patch;
    if (o_dfilt->count()) base.d_filters = ta.cfg.d_filters;
    if (o_obj->count()) base.objective = parse_objective(objective_s);
    if (o_lambda->count()) base.lambda = ta.cfg.lambda;
    if (o_batch->count()) base.batch_size = ta.cfg.batch_size;
    if (o_iters->count()) base.iterations = ta.cfg.iterations;
    if (o_seed->count()) base.seed = ta.cfg.seed;
    if (o_lr->count()) base.lr = ta.cfg.lr;
    if (o_jit->count()) base.jitter = ta.cfg.jitter;
    if (o_mir->count()) base.mirror = ta.cfg.mirror;
    if (o_load->count()) base.load_size = ta.cfg.load_size;
    if (o_crop->count()) base.crop_size = ta.cfg.crop_size;
    if (o_out->count()) base.out_dir = ta.cfg.out_dir;
    if (o_ck->count()) base.checkpoint_every = ta.cfg.checkpoint_every;
    TrainArgs run = ta;
    run.cfg = base;
    run_train(run);
  });

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "translate one image with a trained generator");
  infer->add_option("--checkpoint", ia.checkpoint, "checkpoint file")->required();
  infer->add_option("--input", ia.input, "input PNG")->required();
  infer->add_option("--output", ia.output, "output PNG")->required();
  infer->add_option("--size", ia.size, "resize input to this extent first");
  infer->add_option("--seed", ia.seed, "dropout stream seed (default: run seed)");
  infer->callback([&] { run_infer(ia); });

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint against a manifest");
  eval->add_option("--checkpoint", ea.checkpoint, "checkpoint file")->required();
  eval->add_option("--manifest", ea.manifest, "evaluation manifest")->required();
  eval->add_option("--root", ea.root, "dataset root (default: from checkpoint config)");
  eval->add_option("--metrics", ea.metrics, "comma list: l1,hist,seg");
  eval->add_option("--palette", ea.palette_path, "class palette file (id R G B per line)");
  eval->add_option("--out", ea.out_dir, "output directory");
  eval->callback([&] { run_eval(ea); });

  ArchArgs aa;
  auto* arch = app.add_subcommand("arch", "inspect architectures: shapes, params, receptive field");
  arch->add_option("--preset", aa.preset, "g-unet|g-encdec|d1|d16|d70|d286");
  arch->add_option("--spec", aa.spec, "notation string, e.g. C64-C128");
  arch->add_option("--input-size", aa.input_size, "input extent (default 256)");
  arch->add_option("--in-channels", aa.in_channels, "input channels (default 6: conditional pair)");
  arch->add_flag("--json", aa.as_json, "machine-readable output");
  arch->callback([&] { run_arch(aa); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", e.kind().c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}
