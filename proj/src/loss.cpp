#include "advkit/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "advkit/rng.hpp"

namespace advkit {

ParamSet ParamSet::zeros_like(const VisualEmbedder& f, const TextEmbedder& g) {
  ParamSet p;
  p.query_vectors = Eigen::MatrixXd::Zero(f.query_vectors.rows(), f.query_vectors.cols());
  p.key_proj = Eigen::MatrixXd::Zero(f.key_proj.rows(), f.key_proj.cols());
  p.value_proj = Eigen::MatrixXd::Zero(f.value_proj.rows(), f.value_proj.cols());
  p.action_embeddings =
      Eigen::MatrixXd::Zero(g.action_embeddings.rows(), g.action_embeddings.cols());
  p.adverb_transforms.assign(
      g.adverb_transforms.size(),
      Eigen::MatrixXd::Zero(g.embed_dim(), g.embed_dim()));
  return p;
}

void ParamSet::set_zero() {
  query_vectors.setZero();
  key_proj.setZero();
  value_proj.setZero();
  action_embeddings.setZero();
  for (auto& w : adverb_transforms) w.setZero();
}

std::vector<Eigen::MatrixXd*> parameter_matrices(VisualEmbedder& f, TextEmbedder& g) {
  std::vector<Eigen::MatrixXd*> out = {&f.query_vectors, &f.key_proj, &f.value_proj,
                                       &g.action_embeddings};
  for (auto& w : g.adverb_transforms) out.push_back(&w);
  return out;
}

std::vector<const Eigen::MatrixXd*> parameter_matrices(const VisualEmbedder& f,
                                                       const TextEmbedder& g) {
  std::vector<const Eigen::MatrixXd*> out = {&f.query_vectors, &f.key_proj,
                                             &f.value_proj, &g.action_embeddings};
  for (const auto& w : g.adverb_transforms) out.push_back(&w);
  return out;
}

std::vector<Eigen::MatrixXd*> parameter_matrices(ParamSet& p) {
  std::vector<Eigen::MatrixXd*> out = {&p.query_vectors, &p.key_proj, &p.value_proj,
                                       &p.action_embeddings};
  for (auto& w : p.adverb_transforms) out.push_back(&w);
  return out;
}

namespace {

void visual_backward(const VisualEmbedder& f, const VideoClip& x, ActionId a,
                     const VisualForward& fwd, const Eigen::RowVectorXd& grad_out,
                     ParamSet& grads) {
  // output = attention^T * values, values = features * value_proj
  grads.value_proj.noalias() += x.features.transpose() * (fwd.attention * grad_out);
  Eigen::VectorXd grad_alpha = fwd.values * grad_out.transpose();
  double mixed = fwd.attention.dot(grad_alpha);
  Eigen::VectorXd grad_score =
      fwd.attention.cwiseProduct(grad_alpha - Eigen::VectorXd::Constant(grad_alpha.size(), mixed));
  double scale = 1.0 / std::sqrt(static_cast<double>(f.query_dim()));
  grads.query_vectors.row(a).noalias() += scale * (grad_score.transpose() * fwd.keys);
  grads.key_proj.noalias() +=
      scale * (x.features.transpose() * (grad_score * f.query_vectors.row(a)));
}

// Text embeddings are shared across hinges; gradients are accumulated per
// (action, adverb) and folded into parameters once, in sorted key order so
// the reduction order is part of the contract.
class TextSide {
 public:
  TextSide(const TextEmbedder& g, bool use_transform)
      : g_(g), use_transform_(use_transform) {}

  const Eigen::RowVectorXd& embedding(ActionId a, AdverbId m) {
    auto key = std::make_pair(a, use_transform_ ? m : -1);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      Eigen::RowVectorXd v =
          use_transform_ ? embed_text(g_, a, m) : embed_action(g_, a);
      it = cache_.emplace(key, std::move(v)).first;
    }
    return it->second;
  }

  void add_grad(ActionId a, AdverbId m, const Eigen::RowVectorXd& gv) {
    auto key = std::make_pair(a, use_transform_ ? m : -1);
    auto it = grad_.find(key);
    if (it == grad_.end()) {
      grad_.emplace(key, gv);
    } else {
      it->second += gv;
    }
  }

  void fold_into(ParamSet& grads) const {
    for (const auto& [key, gv] : grad_) {
      auto [a, m] = key;
      if (m < 0) {
        grads.action_embeddings.row(a) += gv;
      } else {
        grads.adverb_transforms[m].noalias() +=
            g_.action_embeddings.row(a).transpose() * gv;
        grads.action_embeddings.row(a).noalias() +=
            gv * g_.adverb_transforms[m].transpose();
      }
    }
  }

 private:
  const TextEmbedder& g_;
  bool use_transform_;
  std::map<std::pair<int, int>, Eigen::RowVectorXd> cache_;
  std::map<std::pair<int, int>, Eigen::RowVectorXd> grad_;
};

std::vector<ActionId> distinct_actions(const Batch& batch) {
  std::set<ActionId> s;
  for (const auto& sample : batch) s.insert(sample.action);
  return std::vector<ActionId>(s.begin(), s.end());
}

}  // namespace

TermStats loss_act_term(const Batch& batch, const VisualEmbedder& f,
                        const TextEmbedder& g, const LossConfig& cfg,
                        bool use_adverb_transform,
                        const std::vector<double>* weights, ParamSet* grads) {
  cfg.validate();
  TermStats stats;
  if (batch.empty()) return stats;
  std::vector<ActionId> actions = distinct_actions(batch);
  if (actions.size() < 2) {
    stats.single_action_warnings = 1;
    return stats;
  }
  TextSide text(g, use_adverb_transform);
  const double n = static_cast<double>(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = batch[i];
    double w = weights ? (*weights)[i] : 1.0 / n;
    VisualForward fwd = embed_video(f, *s.clip, s.action);
    const Eigen::RowVectorXd& u = fwd.output;
    const Eigen::RowVectorXd& pos = text.embedding(s.action, s.adverb);

    Eigen::RowVectorXd gu_pos, gp;
    double d_pos;
    if (grads) {
      d_pos = distance_backward(u, pos, gu_pos, gp);
    } else {
      d_pos = distance(u, pos);
    }

    double inv_k = 1.0 / static_cast<double>(actions.size() - 1);
    Eigen::RowVectorXd grad_u = Eigen::RowVectorXd::Zero(u.size());
    Eigen::RowVectorXd grad_pos = Eigen::RowVectorXd::Zero(u.size());
    for (ActionId neg_a : actions) {
      if (neg_a == s.action) continue;
      const Eigen::RowVectorXd& neg = text.embedding(neg_a, s.adverb);
      ++stats.n_hinges;
      if (grads) {
        Eigen::RowVectorXd gu_neg, gn;
        double d_neg = distance_backward(u, neg, gu_neg, gn);
        double z = d_pos - d_neg + cfg.gamma1;
        if (z > 0) {
          ++stats.active_hinges;
          double coeff = w * inv_k;
          stats.value += coeff * z;
          grad_u += coeff * (gu_pos - gu_neg);
          grad_pos += coeff * gp;
          text.add_grad(neg_a, s.adverb, (-coeff) * gn);
        }
      } else {
        double z = d_pos - distance(u, neg) + cfg.gamma1;
        if (z > 0) {
          ++stats.active_hinges;
          stats.value += w * inv_k * z;
        }
      }
    }
    if (grads) {
      text.add_grad(s.action, s.adverb, grad_pos);
      if (grad_u.squaredNorm() > 0) {
        visual_backward(f, *s.clip, s.action, fwd, grad_u, *grads);
      }
    }
  }
  if (grads) text.fold_into(*grads);
  return stats;
}

TermStats loss_adv_term(const Batch& batch, const VisualEmbedder& f,
                        const TextEmbedder& g, const LossConfig& cfg,
                        const AdverbVocabulary& adverbs,
                        const std::vector<double>* weights, ParamSet* grads) {
  cfg.validate();
  TermStats stats;
  if (batch.empty()) return stats;
  TextSide text(g, /*use_transform=*/true);
  const double n = static_cast<double>(batch.size());
  for (size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = batch[i];
    double w = weights ? (*weights)[i] : 1.0 / n;
    AdverbId ant = adverbs.antonym(s.adverb);
    VisualForward fwd = embed_video(f, *s.clip, s.action);
    const Eigen::RowVectorXd& u = fwd.output;
    const Eigen::RowVectorXd& pos = text.embedding(s.action, s.adverb);
    const Eigen::RowVectorXd& neg = text.embedding(s.action, ant);
    ++stats.n_hinges;
    if (grads) {
      Eigen::RowVectorXd gu_pos, gp, gu_neg, gn;
      double d_pos = distance_backward(u, pos, gu_pos, gp);
      double d_neg = distance_backward(u, neg, gu_neg, gn);
      double z = d_pos - d_neg + cfg.gamma2;
      if (z > 0) {
        ++stats.active_hinges;
        stats.value += w * z;
        text.add_grad(s.action, s.adverb, w * gp);
        text.add_grad(s.action, ant, (-w) * gn);
        Eigen::RowVectorXd grad_u = w * (gu_pos - gu_neg);
        visual_backward(f, *s.clip, s.action, fwd, grad_u, *grads);
      }
    } else {
      double z = distance(u, pos) - distance(u, neg) + cfg.gamma2;
      if (z > 0) {
        ++stats.active_hinges;
        stats.value += w * z;
      }
    }
  }
  if (grads) text.fold_into(*grads);
  return stats;
}

double loss_act(const Batch& batch, const VisualEmbedder& f, const TextEmbedder& g,
                const LossConfig& cfg, ParamSet* grads, TermStats* stats) {
  TermStats s = loss_act_term(batch, f, g, cfg, /*use_adverb_transform=*/true,
                              nullptr, grads);
  if (stats) *stats = s;
  return s.value;
}

double loss_adv(const Batch& batch, const VisualEmbedder& f, const TextEmbedder& g,
                const LossConfig& cfg, const AdverbVocabulary& adverbs,
                ParamSet* grads, TermStats* stats) {
  TermStats s = loss_adv_term(batch, f, g, cfg, adverbs, nullptr, grads);
  if (stats) *stats = s;
  return s.value;
}

LossReport total_loss(const Batch& labeled, const PseudoBatch& pseudo,
                      const VisualEmbedder& f, const TextEmbedder& g,
                      const LossConfig& cfg, const AdverbVocabulary& adverbs,
                      Phase phase, ParamSet* grads) {
  if (phase != Phase::semi_supervised && !pseudo.empty()) {
    throw ConfigError("pseudo-labeled batch supplied outside the semi-supervised phase");
  }
  LossReport report;

  TermStats act_l = loss_act_term(labeled, f, g, cfg,
                                  /*use_adverb_transform=*/phase != Phase::warmup,
                                  nullptr, grads);
  report.l_act_labeled = act_l.value;
  report.active_fraction_act_labeled = act_l.active_fraction();
  report.single_action_warnings += act_l.single_action_warnings;

  if (phase != Phase::warmup) {
    TermStats adv_l = loss_adv_term(labeled, f, g, cfg, adverbs, nullptr, grads);
    report.l_adv_labeled = adv_l.value;
    report.active_fraction_adv_labeled = adv_l.active_fraction();
  }

  if (phase == Phase::semi_supervised) {
    Batch expanded;
    std::vector<double> weights;
    long contributing = 0;
    for (const auto& ps : pseudo) {
      if (!ps.adverbs.empty()) ++contributing;
    }
    if (contributing > 0) {
      double w = 1.0 / static_cast<double>(contributing);
      for (const auto& ps : pseudo) {
        for (AdverbId m : ps.adverbs) {
          expanded.push_back({ps.clip, ps.action, m});
          weights.push_back(w);
        }
      }
      TermStats act_u = loss_act_term(expanded, f, g, cfg,
                                      /*use_adverb_transform=*/true, &weights, grads);
      report.l_act_unlabeled = act_u.value;
      report.active_fraction_act_unlabeled = act_u.active_fraction();
      report.single_action_warnings += act_u.single_action_warnings;

      TermStats adv_u = loss_adv_term(expanded, f, g, cfg, adverbs, &weights, grads);
      report.l_adv_unlabeled = adv_u.value;
      report.active_fraction_adv_unlabeled = adv_u.active_fraction();
    }
  }

  report.total = report.l_act_labeled + report.l_adv_labeled +
                 report.l_act_unlabeled + report.l_adv_unlabeled;
  return report;
}

namespace {

struct CheckInstance {
  std::vector<VideoClip> clips;
  Batch batch;
};

CheckInstance make_instance(const VisualEmbedder& f, const TextEmbedder& g,
                            const GradCheckConfig& gc, uint64_t seed) {
  Rng rng(seed);
  CheckInstance inst;
  int n = std::max(2, gc.n_samples);
  inst.clips.reserve(n);
  for (int i = 0; i < n; ++i) {
    VideoClip clip;
    clip.clip_id = "gradcheck_" + std::to_string(i);
    int t = 1 + static_cast<int>(rng.uniform_index(gc.max_segments));
    clip.features.resize(t, f.feature_dim());
    for (int r = 0; r < t; ++r)
      for (int c = 0; c < f.feature_dim(); ++c) clip.features(r, c) = rng.normal();
    // Force at least two distinct actions so the negative set is nonempty.
    clip.action = (i < 2) ? i % f.n_actions()
                          : static_cast<ActionId>(rng.uniform_index(f.n_actions()));
    clip.adverb = static_cast<AdverbId>(rng.uniform_index(g.n_adverbs()));
    inst.clips.push_back(std::move(clip));
  }
  for (const auto& clip : inst.clips) {
    inst.batch.push_back({&clip, clip.action, *clip.adverb});
  }
  return inst;
}

// All hinge pre-activations for both terms; the kink-free condition keeps
// finite differences on one side of every max(0, .).
std::vector<double> hinge_preactivations(const CheckInstance& inst,
                                         const VisualEmbedder& f, const TextEmbedder& g,
                                         const LossConfig& cfg,
                                         const AdverbVocabulary& adverbs) {
  std::vector<double> zs;
  std::vector<ActionId> actions = distinct_actions(inst.batch);
  for (const auto& s : inst.batch) {
    VisualForward fwd = embed_video(f, *s.clip, s.action);
    double d_pos = distance(fwd.output, embed_text(g, s.action, s.adverb));
    for (ActionId neg_a : actions) {
      if (neg_a == s.action) continue;
      zs.push_back(d_pos - distance(fwd.output, embed_text(g, neg_a, s.adverb)) +
                   cfg.gamma1);
    }
    double d_ant =
        distance(fwd.output, embed_text(g, s.action, adverbs.antonym(s.adverb)));
    zs.push_back(d_pos - d_ant + cfg.gamma2);
  }
  return zs;
}

}  // namespace

double check_gradients(const VisualEmbedder& f, const TextEmbedder& g,
                       const LossConfig& cfg, const AdverbVocabulary& adverbs,
                       uint64_t seed, const GradCheckConfig& gc) {
  CheckInstance inst;
  bool found = false;
  for (int attempt = 0; attempt < gc.max_retries; ++attempt) {
    inst = make_instance(f, g, gc, derive_seed(seed, attempt));
    std::vector<double> zs = hinge_preactivations(inst, f, g, cfg, adverbs);
    bool clear = true;
    for (double z : zs) {
      if (std::abs(z) <= gc.kink_margin) {
        clear = false;
        break;
      }
    }
    if (clear) {
      found = true;
      break;
    }
  }
  if (!found) {
    throw NumericError("check_gradients: no kink-free instance after " +
                       std::to_string(gc.max_retries) + " retries");
  }

  double max_rel_err = 0;
  for (int term = 0; term < 2; ++term) {
    ParamSet analytic = ParamSet::zeros_like(f, g);
    if (term == 0) {
      loss_act(inst.batch, f, g, cfg, &analytic);
    } else {
      loss_adv(inst.batch, f, g, cfg, adverbs, &analytic);
    }
    VisualEmbedder fc = f;
    TextEmbedder gc_copy = g;
    auto params = parameter_matrices(fc, gc_copy);
    auto grads = parameter_matrices(analytic);
    auto eval = [&]() {
      return term == 0 ? loss_act(inst.batch, fc, gc_copy, cfg)
                       : loss_adv(inst.batch, fc, gc_copy, cfg, adverbs);
    };
    for (size_t p = 0; p < params.size(); ++p) {
      Eigen::MatrixXd& mat = *params[p];
      const Eigen::MatrixXd& ga = *grads[p];
      for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        for (Eigen::Index j = 0; j < mat.cols(); ++j) {
          double saved = mat(i, j);
          mat(i, j) = saved + gc.fd_step;
          double up = eval();
          mat(i, j) = saved - gc.fd_step;
          double down = eval();
          mat(i, j) = saved;
          double fd = (up - down) / (2 * gc.fd_step);
          double denom = std::max({std::abs(ga(i, j)), std::abs(fd), 1e-6});
          max_rel_err = std::max(max_rel_err, std::abs(ga(i, j) - fd) / denom);
        }
      }
    }
  }
  return max_rel_err;
}

}  // namespace advkit
