#include "analogy/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <algorithm>
#include <optional>
#include <stdexcept>

#include "analogy/backend/adam.hpp"
#include "analogy/backend/ops.hpp"
#include "analogy/checkpoint.hpp"

namespace analogy {

namespace {

constexpr Domain kDomains[] = {Domain::A, Domain::B};

/// Generated images of one training step at scale n.
struct Samples {
  ad::Tensor a, b, ab, ba, aba, bab;
};

class ScaleTrainer {
 public:
  ScaleTrainer(ModelBundle& m, const TrainingData& data, int n)
      : m_(m),
        data_(data),
        n_(n),
        K_(m.K()),
        size_(m.sched.at(n)),
        nets_(m.nets[static_cast<std::size_t>(n)]),
        noise_(Rng::derive(m.config.seed, Stream::noise, static_cast<std::uint64_t>(n))),
        eps_(Rng::derive(m.config.seed, Stream::epsilon, static_cast<std::uint64_t>(n))),
        frames_(Rng::derive(m.config.seed, Stream::frame_draw, static_cast<std::uint64_t>(n))),
        gen_params_(nets_.generator_parameters()),
        critic_params_(nets_.critic_parameters()),
        opt_g_(gen_params_, m.config.lr, m.config.beta1, m.config.beta2),
        opt_d_(critic_params_, m.config.lr, m.config.beta1, m.config.beta2),
        cycle_active_(!m.refinement && cycle_applies(m.config.ablations.cycle_scope, n, K_)) {
    for (const auto& f : data.frames_a) pyr_a_.push_back(build_pyramid(f, m.sched));
    if (!m.refinement) pyr_b_ = build_pyramid(data.b, m.sched);
  }

  /// Reconstruction prefixes and noise levels; must run before any sampling.
  void prepare(ScaleAudit& audit) {
    for (Domain d : domains()) {
      const Image& target = real_image(d, 0);
      double sigma = 1.0;
      if (n_ > 0) {
        const Image prev = uncond_chain(m_, d, n_ - 1, ChainMode::reconstruction, nullptr).back();
        const Image up = resize(prev, size_);
        rec_prev_up_[index(d)] = up.to_tensor();
        sigma = compute_sigma(up, target);
      }
      m_.plan.set_sigma(d, n_, sigma);
      (d == Domain::A ? audit.sigma_a : audit.sigma_b) = sigma;
    }
    if (m_.refinement) {
      // Keep the B entry aligned with A so has_sigma() reflects the scale.
      m_.plan.set_sigma(Domain::B, n_, 0.0);
    }
  }

  LossReport iteration(int it, ScaleAudit& audit) {
    if (pyr_a_.size() > 1) frame_ = static_cast<std::size_t>(frames_.below(pyr_a_.size()));
    LossReport r;
    r.iteration = it;
    r.scale = n_;
    for (int s = 0; s < m_.config.d_steps; ++s) critic_step(s == 0 ? &r : nullptr, audit);
    double gen_adv = 0.0;
    for (int s = 0; s < m_.config.g_steps; ++s) {
      generator_step(s == 0 ? &r : nullptr, s == 0 ? &gen_adv : nullptr, audit);
    }
    const Totals t = total_losses(r, gen_adv, m_.config.weights, cycle_active_,
                                  distance_scale(m_.config.objective_norm, size_));
    r.total_G = t.total_G;
    r.total_D = t.total_D;
    if (!r.all_finite()) {
      throw NonFiniteError("non-finite loss at scale " + std::to_string(n_) + ", iteration " +
                           std::to_string(it) + ": " + to_csv_row(r));
    }
    return r;
  }

 private:
  std::vector<Domain> domains() const {
    if (m_.refinement) return {Domain::A};
    return {Domain::A, Domain::B};
  }
  static std::size_t index(Domain d) { return d == Domain::A ? 0 : 1; }

  const Image& real_image(Domain d, std::size_t frame) const {
    return d == Domain::A ? pyr_a_[frame][static_cast<std::size_t>(n_)]
                          : pyr_b_[static_cast<std::size_t>(n_)];
  }
  ad::Tensor real(Domain d) const { return real_image(d, frame_).to_tensor(); }

  /// Upsampled random sample of scale n-1 and the scale-n noise, both constant.
  std::pair<ad::Tensor, ad::Tensor> chain_inputs(Domain d, std::vector<Image>* lower,
                                                 ScaleAudit& audit) {
    ad::Tensor prev_up;
    if (n_ > 0) {
      *lower = uncond_chain(m_, d, n_ - 1, ChainMode::random, &noise_);
      prev_up = resize(lower->back(), size_).to_tensor();
    }
    if (!noise_checked_) {
      audit.sigma_ready_before_noise = m_.plan.has_sigma(n_);
      noise_checked_ = true;
    }
    const ad::Tensor z = noise_.normal_tensor({Image::kChannels, size_.height, size_.width},
                                              m_.plan.sigma(d, n_));
    return {prev_up, z};
  }

  /// A->B translation of the lower-scale chain, top entry resized to scale n.
  ad::Tensor prev_translation_up(const std::vector<Image>& lower) const {
    ad::NoGradGuard no_grad;
    std::optional<Image> t;
    for (int k = 0; k < n_; ++k) t = translate_at(m_, Domain::A, lower[static_cast<std::size_t>(k)], k, t);
    return resize(*t, size_).to_tensor();
  }

  Samples sample(bool need_cycle, ScaleAudit& audit) {
    Samples s;
    std::vector<Image> lower_a, lower_b;
    auto [prev_a, z_a] = chain_inputs(Domain::A, &lower_a, audit);
    s.a = uncond_step(nets_.g_a, prev_a, z_a, n_, K_);
    if (m_.refinement) return s;
    auto [prev_b, z_b] = chain_inputs(Domain::B, &lower_b, audit);
    s.b = uncond_step(nets_.g_b, prev_b, z_b, n_, K_);

    const Network& to_b = nets_.conditional_generator(Domain::B);
    const Network& to_a = nets_.conditional_generator(Domain::A);
    if (m_.config.ablations.condition_on_prev_translation && n_ > 0) {
      s.ab = cond_map_with_prev(to_b, s.a, prev_translation_up(lower_a), n_, K_);
    } else {
      s.ab = cond_map(to_b, s.a, n_, K_);
    }
    s.ba = cond_map(to_a, s.b, n_, K_);
    if (need_cycle) {
      s.aba = cond_map(to_a, s.ab, n_, K_);
      s.bab = cond_map(to_b, s.ba, n_, K_);
    }
    return s;
  }

  void critic_step(LossReport* r, ScaleAudit& audit) {
    Samples s;
    {
      ad::NoGradGuard no_grad;
      s = sample(false, audit);
    }
    ad::GradModeGuard record(true);
    const double lambda = m_.config.weights.lambda_gp;
    const bool exact = m_.config.gp_mode == GpMode::exact;

    struct Term {
      const Network* d;
      Domain domain;
      ad::Tensor fake;
      double* adv;
      double* gp;
    };
    std::vector<Term> terms{{&nets_.d_a, Domain::A, s.a, r ? &r->adv_A1 : nullptr,
                             r ? &r->gp_A : nullptr}};
    if (!m_.refinement) {
      terms.push_back({&nets_.d_b, Domain::B, s.b, r ? &r->adv_B1 : nullptr, r ? &r->gp_B : nullptr});
      terms.push_back({&nets_.d_a, Domain::A, s.ba, r ? &r->adv_A2 : nullptr, r ? &r->gp_A : nullptr});
      terms.push_back({&nets_.d_b, Domain::B, s.ab, r ? &r->adv_B2 : nullptr, r ? &r->gp_B : nullptr});
    }

    ad::Tensor real_score[2];
    ad::Tensor real_in[2];
    ad::Tensor total = ad::Tensor::scalar(0.0);
    std::vector<ad::Tensor> fd_grads;
    for (const Term& t : terms) {
      const std::size_t i = index(t.domain);
      if (!real_score[i].defined()) {
        real_in[i] = real(t.domain);
        real_score[i] = ad::mean(t.d->forward(real_in[i]));
      }
      const ad::Tensor w = ad::sub(real_score[i], ad::mean(t.d->forward(t.fake)));
      const double eps = eps_.uniform();
      double gp_value = 0.0;
      if (exact) {
        const ad::Tensor gp = gradient_penalty(as_critic(*t.d), real_in[i], t.fake, eps, lambda);
        gp_value = gp.item();
        total = ad::add(total, ad::sub(gp, w));
      } else {
        const std::vector<ad::Tensor> params = t.d->params().tensors();
        PenaltyGrad pg = gradient_penalty_fd(as_critic(*t.d), params, real_in[i], t.fake, eps,
                                             lambda, m_.config.gp_fd_step);
        gp_value = pg.value;
        accumulate_fd(*t.d, pg.grads, fd_grads);
        total = ad::sub(total, w);
      }
      if (t.adv) *t.adv = w.item();
      if (t.gp) *t.gp += gp_value;
    }
    std::vector<ad::Tensor> grads = ad::grad(total, critic_params_);
    if (!exact) {
      for (std::size_t k = 0; k < grads.size(); ++k) grads[k] = ad::add(grads[k], fd_grads[k]);
    }
    check_finite(grads, "critic");
    opt_d_.step(grads);
  }

  /// Adds per-network FD penalty gradients into the critic-parameter layout.
  void accumulate_fd(const Network& d, const std::vector<ad::Tensor>& g,
                     std::vector<ad::Tensor>& into) const {
    if (into.empty()) {
      for (const auto& p : critic_params_) into.push_back(ad::Tensor::zeros(p.shape()));
    }
    const auto own = d.params().tensors();
    for (std::size_t k = 0; k < own.size(); ++k) {
      for (std::size_t j = 0; j < critic_params_.size(); ++j) {
        if (critic_params_[j].id() == own[k].id()) into[j] = ad::add(into[j], g[k]);
      }
    }
  }

  void generator_step(LossReport* r, double* gen_adv_out, ScaleAudit& audit) {
    ad::GradModeGuard record(true);
    const Samples s = sample(cycle_active_, audit);
    ad::Tensor adv = ad::neg(ad::mean(nets_.d_a.forward(s.a)));
    if (!m_.refinement) {
      adv = ad::sub(adv, ad::mean(nets_.d_b.forward(s.b)));
      adv = ad::sub(adv, ad::mean(nets_.d_a.forward(s.ba)));
      adv = ad::sub(adv, ad::mean(nets_.d_b.forward(s.ab)));
    }
    const LossWeights& w = m_.config.weights;
    ad::Tensor recon[2];
    for (Domain d : domains()) {
      const Network& g = nets_.generator(d);
      const std::size_t i = index(d);
      const ad::Tensor out =
          n_ == 0 ? uncond_step(g, ad::Tensor(), m_.plan.z_star(d).to_tensor(), 0, K_)
                  : uncond_step(g, rec_prev_up_[i],
                                ad::Tensor::zeros({Image::kChannels, size_.height, size_.width}),
                                n_, K_);
      recon[i] = rmse_loss(out, real(d));
    }
    const double k = distance_scale(m_.config.objective_norm, size_);
    ad::Tensor total = adv;
    ad::Tensor recon_sum = m_.refinement ? recon[0] : ad::add(recon[0], recon[1]);
    total = ad::add(total, ad::scale(recon_sum, k * w.lambda_recon));
    ad::Tensor cycle;
    if (cycle_active_) {
      cycle = cycle_loss(s.a, s.aba, s.b, s.bab);
      total = ad::add(total, ad::scale(cycle, k * w.lambda_cycle));
    }
    const std::vector<ad::Tensor> grads = ad::grad(total, gen_params_);
    check_finite(grads, "generator");
    opt_g_.step(grads);
    if (r) {
      r->recon_A = recon[0].item();
      if (!m_.refinement) r->recon_B = recon[1].item();
      r->cycle = cycle.defined() ? cycle.item() : 0.0;
      *gen_adv_out = adv.item();
    }
  }

  void check_finite(const std::vector<ad::Tensor>& grads, const char* who) const {
    for (const auto& g : grads) {
      for (double v : g.values()) {
        if (!std::isfinite(v)) {
          throw NonFiniteError(std::string("non-finite ") + who + " gradient at scale " +
                               std::to_string(n_));
        }
      }
    }
  }

  ModelBundle& m_;
  const TrainingData& data_;
  int n_;
  int K_;
  Size size_;
  ScaleNets& nets_;
  Rng noise_, eps_, frames_;
  std::vector<ad::Tensor> gen_params_, critic_params_;
  ad::Adam opt_g_, opt_d_;
  bool cycle_active_;
  std::vector<std::vector<Image>> pyr_a_;
  std::vector<Image> pyr_b_;
  ad::Tensor rec_prev_up_[2];
  std::size_t frame_ = 0;
  bool noise_checked_ = false;
};

NetSpec generator_spec(const TrainConfig& c) { return NetSpec::generator(c.base_channels); }

std::vector<std::uint64_t> scale_fingerprints(const ModelBundle& m, int below) {
  std::vector<std::uint64_t> out;
  for (int k = 0; k < below; ++k) out.push_back(m.nets[static_cast<std::size_t>(k)].fingerprint());
  return out;
}

void write_progress(std::ostream* log, const ScaleAudit& a, const std::vector<LossReport>& losses) {
  if (!log) return;
  *log << "scale " << a.scale << " done in " << a.seconds << " s, sigma_A=" << a.sigma_a
       << " sigma_B=" << a.sigma_b;
  if (!losses.empty()) {
    const LossReport& r = losses.back();
    *log << ", recon_A=" << r.recon_A << " recon_B=" << r.recon_B << " cycle=" << r.cycle;
  }
  *log << '\n';
}

}  // namespace

TrainingData prepare_training_data(const std::vector<Image>& frames_a, const Image& b,
                                   const ScaleSchedule& sched) {
  if (frames_a.empty()) throw std::invalid_argument("no A images to train on");
  TrainingData d;
  for (const auto& f : frames_a) d.frames_a.push_back(resize(f, sched.finest()));
  if (!b.empty()) d.b = resize(b, sched.finest());
  return d;
}

ModelBundle make_bundle(Size source, const TrainConfig& config, bool refinement) {
  config.validate();
  ModelBundle m;
  const ScheduleConfig& s = config.schedule;
  m.sched = build_schedule(source, s.r, s.min_size, s.max_size, s.k_offset);
  m.config = config;
  m.refinement = refinement;
  m.plan = make_noise_plan(m.sched, config.seed);
  return m;
}

ScaleAudit train_scale(ModelBundle& m, const TrainingData& data, std::vector<LossReport>* losses,
                       TrainObserver* observer) {
  ad::tune_allocator();
  const int n = m.trained_up_to + 1;
  if (n > m.N()) throw std::logic_error("all scales are already trained");
  if (static_cast<int>(m.nets.size()) != n) {
    throw std::logic_error("model has " + std::to_string(m.nets.size()) +
                           " network sets but " + std::to_string(n) + " trained scales");
  }
  const auto start = std::chrono::steady_clock::now();
  ScaleAudit audit;
  audit.scale = n;
  audit.frozen_before = scale_fingerprints(m, n);
  audit.prev_end_fingerprint = n > 0 ? m.nets.back().fingerprint() : 0;

  const NetSpec spec = generator_spec(m.config);
  if (n > 0 && m.config.ablations.scale_weight_copy) {
    m.nets.push_back(init_from_previous(m.nets.back(), n, spec));
    audit.weights_copied = true;
  } else {
    m.nets.push_back(make_scale_nets(spec, n, m.config.seed, m.layout()));
  }
  audit.start_fingerprint = m.nets.back().fingerprint();

  ScaleTrainer trainer(m, data, n);
  trainer.prepare(audit);
  if (observer) observer->on_scale_start(m, n);
  const int iters = m.config.iters_per_scale;
  for (int it = 0; it < iters; ++it) {
    const LossReport r = trainer.iteration(it, audit);
    if (it % m.config.log_every == 0 || it == iters - 1) {
      if (losses) losses->push_back(r);
      if (observer) observer->on_iteration(r);
    }
  }
  m.trained_up_to = n;
  audit.end_fingerprint = m.nets.back().fingerprint();
  audit.frozen_after = scale_fingerprints(m, n);
  audit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (observer) observer->on_scale_end(m, audit);
  return audit;
}

void continue_training(TrainResult& run, const TrainOptions& options) {
  const int stop = options.stop_after_scale < 0 ? run.bundle.N()
                                                : std::min(options.stop_after_scale, run.bundle.N());
  while (run.bundle.trained_up_to < stop) {
    ScaleAudit audit;
    try {
      audit = train_scale(run.bundle, run.data, &run.losses, options.observer);
    } catch (const NonFiniteError&) {
      if (!options.checkpoint_dir.empty()) {
        // Keep the last good state; the partially trained scale is dropped.
        TrainResult good = run;
        good.bundle.nets.resize(static_cast<std::size_t>(good.bundle.trained_up_to) + 1);
        checkpoint_save(options.checkpoint_dir, good);
      }
      throw;
    }
    run.audits.push_back(audit);
    write_progress(options.log, audit, run.losses);
    if (!options.checkpoint_dir.empty()) checkpoint_save(options.checkpoint_dir, run);
  }
}

TrainResult train_pair(const Image& a, const Image& b, const TrainConfig& config,
                       const TrainOptions& options) {
  TrainResult run;
  run.bundle = make_bundle(a.size(), config);
  run.data = prepare_training_data({a}, b, run.bundle.sched);
  continue_training(run, options);
  return run;
}

TrainResult resume_training(const std::filesystem::path& checkpoint_dir,
                            const TrainOptions& options) {
  TrainResult run = checkpoint_load(checkpoint_dir);
  TrainOptions o = options;
  if (o.checkpoint_dir.empty()) o.checkpoint_dir = checkpoint_dir;
  continue_training(run, o);
  return run;
}

TrainResult train_refinement(const Image& target, const TrainConfig& config,
                             const TrainOptions& options) {
  TrainResult run;
  run.bundle = make_bundle(target.size(), config, /*refinement=*/true);
  run.data = prepare_training_data({target}, Image(), run.bundle.sched);
  continue_training(run, options);
  return run;
}

}  // namespace analogy
