#ifndef IM2IM_TRAIN_HPP
#define IM2IM_TRAIN_HPP

// Objective family (L1 / GAN / cGAN / L1+GAN / L1+cGAN), the halved
// discriminator loss, the non-saturating generator loss, Adam, and the
// alternating one-D-step-then-one-G-step training loop.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "im2im/nets.hpp"
#include "im2im/ops.hpp"
#include "im2im/tape.hpp"

namespace im2im {

enum class ObjectiveMode { l1_only, gan, cgan, l1_plus_gan, l1_plus_cgan };

inline std::string objective_name(ObjectiveMode m) {
  switch (m) {
    case ObjectiveMode::l1_only: return "l1";
    case ObjectiveMode::gan: return "gan";
    case ObjectiveMode::cgan: return "cgan";
    case ObjectiveMode::l1_plus_gan: return "l1+gan";
    case ObjectiveMode::l1_plus_cgan: return "l1+cgan";
  }
  return "?";
}

inline ObjectiveMode parse_objective(const std::string& s) {
  if (s == "l1") return ObjectiveMode::l1_only;
  if (s == "gan") return ObjectiveMode::gan;
  if (s == "cgan") return ObjectiveMode::cgan;
  if (s == "l1+gan") return ObjectiveMode::l1_plus_gan;
  if (s == "l1+cgan") return ObjectiveMode::l1_plus_cgan;
  throw Error("config", "unknown objective '" + s + "' (expected l1|gan|cgan|l1+gan|l1+cgan)");
}

struct ObjectiveConfig {
  ObjectiveMode mode = ObjectiveMode::l1_plus_cgan;
  double lambda = 100.0;

  bool has_adversarial() const { return mode != ObjectiveMode::l1_only; }
  bool has_l1() const {
    return mode == ObjectiveMode::l1_only || mode == ObjectiveMode::l1_plus_gan ||
           mode == ObjectiveMode::l1_plus_cgan;
  }
  // Whether the discriminator observes x (Eq. 1) or y alone (Eq. 2).
  bool conditional() const {
    return mode == ObjectiveMode::cgan || mode == ObjectiveMode::l1_plus_cgan;
  }
  void validate() const {
    if (lambda < 0.0) throw Error("config", "lambda must be >= 0");
  }
};

namespace detail {
// Sigmoid outputs are clamped away from {0,1} before the log.
template <typename T>
Tensor<T> safe_log(const Tensor<T>& prob) {
  return im2im::log(clamp(prob, T(1e-7), T(1.0 - 1e-7)));
}
template <typename T>
Tensor<T> one_minus(const Tensor<T>& t) {
  return scalar_add(neg(t), T(1));
}
}  // namespace detail

// Discriminator loss, halved as in the training protocol:
//   -(1/2) [ mean log D(real) + mean log(1 - D(fake)) ]
// The spatial mean realizes "averaging all responses" of the patch map.
template <typename T>
Tensor<T> loss_d(const Tensor<T>& d_real_map, const Tensor<T>& d_fake_map) {
  auto lr = reduce_mean(detail::safe_log(d_real_map));
  auto lf = reduce_mean(detail::safe_log(detail::one_minus(d_fake_map)));
  return scalar_mul(add(lr, lf), T(-0.5));
}

template <typename T>
struct GeneratorLoss {
  Tensor<T> total;         // descent objective
  double adversarial = 0;  // -mean log D(fake), non-saturating form
  double l1 = 0;           // unscaled mean |target - fake|
};

// Generator loss: non-saturating adversarial term plus lambda * L1 when the
// mode carries an L1 term. d_fake_map may be null in L1-only mode.
template <typename T>
GeneratorLoss<T> loss_g(const Tensor<T>* d_fake_map, const Tensor<T>& fake,
                        const Tensor<T>& target, const ObjectiveConfig& cfg) {
  cfg.validate();
  GeneratorLoss<T> out;
  Tensor<T> total;
  if (cfg.has_adversarial()) {
    if (!d_fake_map) throw Error("config", "adversarial mode requires a discriminator map");
    auto adv = neg(reduce_mean(detail::safe_log(*d_fake_map)));
    out.adversarial = double(adv.item());
    total = adv;
  }
  if (cfg.has_l1()) {
    check_same_shape(fake, target, "loss_g l1");
    auto l1 = reduce_mean(im2im::abs(sub(target, fake)));
    out.l1 = double(l1.item());
    auto scaled = scalar_mul(l1, T(cfg.lambda));
    total = total.defined() ? add(total, scaled) : scaled;
  }
  if (!total.defined()) throw Error("config", "objective has neither adversarial nor L1 term");
  out.total = total;
  return out;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double lr = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(NamedTensors<T> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    for (auto& [name, p] : params_) {
      m_.push_back(Tensor<T>::zeros(p.shape()));
      v_.push_back(Tensor<T>::zeros(p.shape()));
    }
  }

  // Bias-corrected update, in place; gradients are zeroed afterwards so the
  // D-then-G alternation never sees stale accumulation.
  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& [name, p] = params_[i];
      auto& g = p.grad();
      T* mv = m_[i].data();
      T* vv = v_[i].data();
      T* pv = p.data();
      for (int64_t j = 0; j < p.size(); ++j) {
        const double gj = double(g[size_t(j)]);
        if (!std::isfinite(gj))
          throw Error("numeric", "non-finite gradient in parameter '" + name + "' at element " +
                                     std::to_string(j));
        const double m = cfg_.beta1 * double(mv[j]) + (1.0 - cfg_.beta1) * gj;
        const double v = cfg_.beta2 * double(vv[j]) + (1.0 - cfg_.beta2) * gj * gj;
        mv[j] = T(m);
        vv[j] = T(v);
        pv[j] -= T(cfg_.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps));
      }
      p.zero_grad();
    }
  }

  uint64_t t() const { return t_; }
  void set_t(uint64_t t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }
  NamedTensors<T>& params() { return params_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }

 private:
  NamedTensors<T> params_;
  std::vector<Tensor<T>> m_, v_;
  uint64_t t_ = 0;
  AdamConfig cfg_;
};

// ---------------------------------------------------------------------------
// Training step and loop

template <typename T>
struct TrainPair {
  Tensor<T> x, y;  // [C,H,W], values in [-1,1]
  std::string id;
};

struct StepStats {
  double loss_d = 0;
  double loss_g_adv = 0;
  double loss_g_l1 = 0;
};

// One D update (skipped entirely in L1-only mode) then one G update. The
// discriminator's fake batch is detached from G; both generator forwards in
// an iteration replay the same dropout masks so the D step judges exactly
// the image the G step optimizes.
template <typename T>
StepStats train_step(Generator<T>& gen, Discriminator<T>* disc, Adam<T>& opt_g, Adam<T>* opt_d,
                     const Tensor<T>& x, const Tensor<T>& y, const ObjectiveConfig& obj,
                     RngState& rng) {
  obj.validate();
  StepStats stats;
  if (!obj.has_adversarial()) {
    Tape<T> tape;
    auto fake = gen.forward(x, rng);
    auto parts = loss_g<T>(nullptr, fake, y, obj);
    if (!parts.total.all_finite()) throw Error("numeric", "non-finite generator loss");
    stats.loss_g_l1 = parts.l1;
    tape.backward(parts.total);
    opt_g.step();
    return stats;
  }

  if (!disc || !opt_d) throw Error("config", "adversarial objective requires a discriminator");
  const RngState fwd_rng = rng;  // both generator forwards replay this stream

  {
    Tensor<T> fake_detached;
    {
      NoGrad ng;
      RngState r = fwd_rng;
      fake_detached = gen.forward(x, r);
    }
    Tape<T> tape;
    auto d_real = disc->forward(obj.conditional() ? concat_channels(x, y) : y);
    auto d_fake = disc->forward(obj.conditional() ? concat_channels(x, fake_detached)
                                                  : fake_detached);
    auto ld = loss_d(d_real, d_fake);
    if (!ld.all_finite()) throw Error("numeric", "non-finite discriminator loss");
    stats.loss_d = double(ld.item());
    tape.backward(ld);
    opt_d->step();
  }

  {
    auto d_params = disc->named_parameters();
    set_requires_grad(d_params, false);
    Tape<T> tape;
    RngState r = fwd_rng;
    auto fake = gen.forward(x, r);
    auto d_map = disc->forward(obj.conditional() ? concat_channels(x, fake) : fake);
    auto parts = loss_g<T>(&d_map, fake, y, obj);
    if (!parts.total.all_finite()) throw Error("numeric", "non-finite generator loss");
    stats.loss_g_adv = parts.adversarial;
    stats.loss_g_l1 = parts.l1;
    tape.backward(parts.total);
    opt_g.step();
    set_requires_grad(d_params, true);
    rng = r;
  }
  return stats;
}

struct TrainConfig {
  int batch_size = 1;  // the experiments use batch sizes between 1 and 10
  int64_t iterations = 0;
  uint64_t seed = 1;
  ObjectiveConfig objective;
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  AdamConfig adam;

  void validate() const {
    if (batch_size < 1 || batch_size > 10)
      throw Error("config", "batch_size must be between 1 and 10");
    if (iterations < 0) throw Error("config", "iterations must be >= 0");
    objective.validate();
    gen.validate();
    if (objective.has_adversarial()) disc.validate();
  }
};

struct MetricRow {
  uint64_t iter = 0;
  double loss_d = 0;
  double loss_g_adv = 0;
  double loss_g_l1 = 0;
  double wall_ms = 0;

  bool numerically_equal(const MetricRow& o) const {
    return iter == o.iter && loss_d == o.loss_d && loss_g_adv == o.loss_g_adv &&
           loss_g_l1 == o.loss_g_l1;  // wall clock excluded, inherently non-deterministic
  }
};

template <typename T>
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    RngState init_rng = RngState::derive(cfg_.seed, 1);
    gen_ = std::make_unique<Generator<T>>(align_disc_channels().gen, init_rng);
    auto g_params = gen_->named_parameters();
    set_requires_grad(g_params, true);
    opt_g_ = std::make_unique<Adam<T>>(g_params, cfg_.adam);
    if (cfg_.objective.has_adversarial()) {
      disc_ = std::make_unique<Discriminator<T>>(cfg_.disc, init_rng);
      auto d_params = disc_->named_parameters();
      set_requires_grad(d_params, true);
      opt_d_ = std::make_unique<Adam<T>>(d_params, cfg_.adam);
    }
    train_rng_ = RngState::derive(cfg_.seed, 2);
  }

  using StepHook = std::function<void(const MetricRow&)>;

  // Runs until cfg.iterations; per-epoch order is a seeded shuffle and the
  // partial final batch of an epoch is dropped.
  std::vector<MetricRow> run(const std::vector<TrainPair<T>>& data, const StepHook& hook = {}) {
    if (data.empty()) throw Error("config", "dataset is empty");
    const int64_t spe = int64_t(data.size()) / cfg_.batch_size;
    if (spe == 0)
      throw Error("config", "batch_size " + std::to_string(cfg_.batch_size) +
                                " exceeds dataset size " + std::to_string(data.size()));
    std::vector<MetricRow> log;
    while (step_ < uint64_t(cfg_.iterations)) {
      const uint64_t epoch = step_ / uint64_t(spe);
      const uint64_t pos = step_ % uint64_t(spe);
      if (pos == 0 || perm_.empty()) reshuffle(data.size(), epoch);

      const auto t0 = std::chrono::steady_clock::now();
      auto [x, y] = make_batch(data, pos);
      StepStats s = train_step<T>(*gen_, disc_.get(), *opt_g_, opt_d_.get(), x, y,
                                  cfg_.objective, train_rng_);
      ++step_;
      const auto t1 = std::chrono::steady_clock::now();

      MetricRow row;
      row.iter = step_;
      row.loss_d = s.loss_d;
      row.loss_g_adv = s.loss_g_adv;
      row.loss_g_l1 = s.loss_g_l1;
      row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      log.push_back(row);
      if (hook) hook(row);
    }
    return log;
  }

  // Inference with the training protocol: dropout active, batch statistics
  // of the tensor being translated. A fixed sample_seed replays the same
  // dropout stream, so a sample rendered here is reproducible standalone.
  Tensor<T> translate(const Tensor<T>& x, uint64_t sample_seed) {
    NoGrad ng;
    RngState r(sample_seed);
    return gen_->forward(x, r);
  }

  // Per-draw sample transform (augmentation); draws from the trainer rng so
  // a checkpoint captures the full stochastic state.
  using SampleTransform = std::function<TrainPair<T>(const TrainPair<T>&, RngState&)>;
  void set_sample_transform(SampleTransform t) { transform_ = std::move(t); }

  const TrainConfig& config() const { return cfg_; }
  Generator<T>& generator() { return *gen_; }
  Discriminator<T>* discriminator() { return disc_.get(); }
  Adam<T>& opt_g() { return *opt_g_; }
  Adam<T>* opt_d() { return opt_d_.get(); }
  uint64_t step() const { return step_; }
  void set_step(uint64_t s) { step_ = s; }
  RngState& train_rng() { return train_rng_; }

 private:
  // In conditional modes D consumes (x,y) channel pairs; otherwise y alone.
  TrainConfig& align_disc_channels() {
    cfg_.disc.conditional = cfg_.objective.conditional();
    cfg_.disc.x_channels = cfg_.gen.in_channels;
    cfg_.disc.y_channels = cfg_.gen.out_channels;
    return cfg_;
  }

  void reshuffle(size_t n, uint64_t epoch) {
    perm_.resize(n);
    for (size_t i = 0; i < n; ++i) perm_[i] = i;
    RngState r = RngState::derive(cfg_.seed ^ 0xE60C4ULL, epoch);
    for (size_t i = n; i > 1; --i) {
      const size_t j = size_t(r.uniform() * double(i));
      std::swap(perm_[i - 1], perm_[j]);
    }
  }

  std::pair<Tensor<T>, Tensor<T>> make_batch(const std::vector<TrainPair<T>>& data,
                                             uint64_t pos) {
    const int B = cfg_.batch_size;
    Tensor<T> x, y;
    for (int b = 0; b < B; ++b) {
      TrainPair<T> s = data[perm_[size_t(pos) * B + b]];
      if (transform_) s = transform_(s, train_rng_);
      if (b == 0) {
        const Shape& xs = s.x.shape();
        const Shape& ys = s.y.shape();
        x = Tensor<T>::zeros({B, xs[0], xs[1], xs[2]});
        y = Tensor<T>::zeros({B, ys[0], ys[1], ys[2]});
      }
      if (s.x.shape() != Shape{x.dim(1), x.dim(2), x.dim(3)} ||
          s.y.shape() != Shape{y.dim(1), y.dim(2), y.dim(3)})
        throw Error("shape", "dataset samples have mixed shapes");
      std::copy_n(s.x.data(), s.x.size(), x.data() + int64_t(b) * s.x.size());
      std::copy_n(s.y.data(), s.y.size(), y.data() + int64_t(b) * s.y.size());
    }
    return {x, y};
  }

  TrainConfig cfg_;
  std::unique_ptr<Generator<T>> gen_;
  std::unique_ptr<Discriminator<T>> disc_;
  std::unique_ptr<Adam<T>> opt_g_, opt_d_;
  RngState train_rng_;
  uint64_t step_ = 0;
  std::vector<size_t> perm_;
  SampleTransform transform_;
};

}  // namespace im2im

#endif  // IM2IM_TRAIN_HPP
