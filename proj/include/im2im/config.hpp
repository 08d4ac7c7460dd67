#ifndef IM2IM_CONFIG_HPP
#define IM2IM_CONFIG_HPP

// Run configuration: every knob of a training/eval run, serializable to a
// flat key=value text file with '#' comments. A run directory's persisted
// snapshot plus the seed reproduces the run.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "im2im/data.hpp"
#include "im2im/train.hpp"

namespace im2im {

struct RunConfig {
  std::string task = "run";
  std::string data_root;
  PairLayout layout = PairLayout::side_by_side;

  GeneratorVariant variant = GeneratorVariant::unet;
  int depth = 8;
  int64_t base_filters = 64;
  int64_t in_channels = 3;
  int64_t out_channels = 3;
  int patch = 70;
  int64_t d_filters = 64;

  ObjectiveMode objective = ObjectiveMode::l1_plus_cgan;
  double lambda = 100.0;

  int batch_size = 1;
  int64_t iterations = 200;
  uint64_t seed = 1;
  double lr = 0.0002;

  bool jitter = true;
  bool mirror = true;
  int64_t load_size = 286;
  int64_t crop_size = 256;

  std::string out_dir;
  int64_t checkpoint_every = 100;
  int64_t sample_every = 100;

  std::string serialize() const {
    std::ostringstream os;
    os << "# im2im run configuration\n";
    os << "task=" << task << "\n";
    os << "data_root=" << data_root << "\n";
    os << "layout=" << layout_name(layout) << "\n";
    os << "variant=" << (variant == GeneratorVariant::unet ? "unet" : "encoder_decoder") << "\n";
    os << "depth=" << depth << "\n";
    os << "base_filters=" << base_filters << "\n";
    os << "in_channels=" << in_channels << "\n";
    os << "out_channels=" << out_channels << "\n";
    os << "patch=" << patch << "\n";
    os << "d_filters=" << d_filters << "\n";
    os << "objective=" << objective_name(objective) << "\n";
    os << "lambda=" << fmt_double(lambda) << "\n";
    os << "batch_size=" << batch_size << "\n";
    os << "iterations=" << iterations << "\n";
    os << "seed=" << seed << "\n";
    os << "lr=" << fmt_double(lr) << "\n";
    os << "jitter=" << (jitter ? "true" : "false") << "\n";
    os << "mirror=" << (mirror ? "true" : "false") << "\n";
    os << "load_size=" << load_size << "\n";
    os << "crop_size=" << crop_size << "\n";
    os << "out_dir=" << out_dir << "\n";
    os << "checkpoint_every=" << checkpoint_every << "\n";
    os << "sample_every=" << sample_every << "\n";
    return os.str();
  }

  static RunConfig parse(const std::string& text) {
    RunConfig c;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw Error("config", "line " + std::to_string(line_no) + ": expected key=value");
      c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return c;
  }

  static RunConfig load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("io", "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      return parse(ss.str());
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (config '" + path + "')");
    }
  }

  void set(const std::string& key, const std::string& value) {
    if (key == "task") task = value;
    else if (key == "data_root") data_root = value;
    else if (key == "layout") layout = parse_layout(value);
    else if (key == "variant") variant = parse_variant(value);
    else if (key == "depth") depth = int(to_i64(key, value));
    else if (key == "base_filters") base_filters = to_i64(key, value);
    else if (key == "in_channels") in_channels = to_i64(key, value);
    else if (key == "out_channels") out_channels = to_i64(key, value);
    else if (key == "patch") patch = int(to_i64(key, value));
    else if (key == "d_filters") d_filters = to_i64(key, value);
    else if (key == "objective") objective = parse_objective(value);
    else if (key == "lambda") lambda = to_f64(key, value);
    else if (key == "batch_size") batch_size = int(to_i64(key, value));
    else if (key == "iterations") iterations = to_i64(key, value);
    else if (key == "seed") seed = uint64_t(to_i64(key, value));
    else if (key == "lr") lr = to_f64(key, value);
    else if (key == "jitter") jitter = to_bool(key, value);
    else if (key == "mirror") mirror = to_bool(key, value);
    else if (key == "load_size") load_size = to_i64(key, value);
    else if (key == "crop_size") crop_size = to_i64(key, value);
    else if (key == "out_dir") out_dir = value;
    else if (key == "checkpoint_every") checkpoint_every = to_i64(key, value);
    else if (key == "sample_every") sample_every = to_i64(key, value);
    else throw Error("config", "unknown config key '" + key + "'");
  }

  static GeneratorVariant parse_variant(const std::string& s) {
    if (s == "unet") return GeneratorVariant::unet;
    if (s == "encoder_decoder" || s == "encdec") return GeneratorVariant::encoder_decoder;
    throw Error("config", "unknown variant '" + s + "' (expected unet|encoder_decoder)");
  }

  TrainConfig to_train_config() const {
    TrainConfig t;
    t.batch_size = batch_size;
    t.iterations = iterations;
    t.seed = seed;
    t.objective.mode = objective;
    t.objective.lambda = lambda;
    t.gen.variant = variant;
    t.gen.depth = depth;
    t.gen.base_filters = base_filters;
    t.gen.in_channels = in_channels;
    t.gen.out_channels = out_channels;
    t.disc.patch = patch;
    t.disc.base_filters = d_filters;
    t.adam.lr = lr;
    return t;
  }

  AugmentConfig to_augment_config() const {
    AugmentConfig a;
    a.jitter = jitter;
    a.mirror = mirror;
    a.load_size = load_size;
    a.crop_size = crop_size;
    return a;
  }

 private:
  static std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  static int64_t to_i64(const std::string& key, const std::string& v) {
    try {
      size_t used = 0;
      int64_t r = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (...) {
      throw Error("config", "key '" + key + "': '" + v + "' is not an integer");
    }
  }
  static double to_f64(const std::string& key, const std::string& v) {
    try {
      size_t used = 0;
      double r = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (...) {
      throw Error("config", "key '" + key + "': '" + v + "' is not a number");
    }
  }
  static bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("config", "key '" + key + "': '" + v + "' is not a boolean");
  }
  static std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
};

// Content stamp of the code version, recorded in every run directory.
inline const char* version_string() { return "im2im 0.1.0"; }

inline std::string version_hash() {
  uint64_t h = 1469598103934665603ULL;
  for (const char* p = version_string(); *p; ++p) {
    h ^= uint64_t(uint8_t(*p));
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace im2im

#endif  // IM2IM_CONFIG_HPP
