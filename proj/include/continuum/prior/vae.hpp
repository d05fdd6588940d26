#pragma once

#include <continuum/body/kinematics.hpp>
#include <continuum/core/rng.hpp>
#include <continuum/core/serialize.hpp>
#include <continuum/tensor/adam.hpp>
#include <continuum/tensor/conv.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace continuum {

// Variational autoencoder over pose parameters theta. The decoder emits a 6D
// continuous rotation representation per joint, orthonormalized by
// Gram-Schmidt; reconstruction is scored on forward-kinematics joint
// positions (plus a small rotation term that pins twist components no joint
// position can see).
struct PriorConfig {
  int latent_dim = 8;
  int hidden = 128;
  double kl_weight = 5e-3;
  int kl_warmup_epochs = 10;
  double rot_weight = 0.25;
  double lr = 1e-3;
  int batch = 64;
  int epochs = 250;
  uint64_t seed = 0;
};

template <typename S>
struct PriorModel {
  using T = ad::Tensor<S>;
  PriorConfig config;
  // encoder
  T e_w1, e_b1, e_w2, e_b2, w_mu, b_mu, w_lv, b_lv;
  // decoder
  T d_w1, d_b1, d_w2, d_b2, d_out, b_out;
  bool trained = false;

  std::vector<T> params() {
    return {e_w1, e_b1, e_w2, e_b2, w_mu, b_mu, w_lv, b_lv,
            d_w1, d_b1, d_w2, d_b2, d_out, b_out};
  }

  static PriorModel init(const PriorConfig& cfg) {
    Rng rng(Rng::mix(cfg.seed, 0x9e5));
    PriorModel m;
    m.config = cfg;
    auto mk = [&](int in, int out, double s) {
      std::vector<S> d(static_cast<size_t>(in) * out);
      for (auto& v : d) v = S(rng.normal() * s);
      return T::from({in, out}, std::move(d), true);
    };
    auto bias = [&](int out) { return T::zeros({out}, true); };
    int in_dim = kJointCount * 3;
    int h = cfg.hidden;
    m.e_w1 = mk(in_dim, h, std::sqrt(2.0 / in_dim));
    m.e_b1 = bias(h);
    m.e_w2 = mk(h, h, std::sqrt(2.0 / h));
    m.e_b2 = bias(h);
    // a deliberately loud mean head: the KL term starts high and must fall
    m.w_mu = mk(h, cfg.latent_dim, 0.35);
    m.b_mu = bias(cfg.latent_dim);
    m.w_lv = mk(h, cfg.latent_dim, 0.01);
    m.b_lv = bias(cfg.latent_dim);
    m.d_w1 = mk(cfg.latent_dim, h, std::sqrt(2.0 / cfg.latent_dim));
    m.d_b1 = bias(h);
    m.d_w2 = mk(h, h, std::sqrt(2.0 / h));
    m.d_b2 = bias(h);
    m.d_out = mk(h, kJointCount * 6, 0.02);
    m.b_out = bias(kJointCount * 6);
    return m;
  }

  // (N, 48) -> hidden features
  ad::Tensor<S> encode_features(const T& x) const {
    T h = ad::leaky_relu(ad::linear(x, e_w1, e_b1), S(0.2));
    return ad::leaky_relu(ad::linear(h, e_w2, e_b2), S(0.2));
  }

  // (N, latent) -> per-joint 6D rotation representation (N, J*6)
  ad::Tensor<S> decode_raw(const T& z) const {
    T h = ad::leaky_relu(ad::linear(z, d_w1, d_b1), S(0.2));
    h = ad::leaky_relu(ad::linear(h, d_w2, d_b2), S(0.2));
    return ad::linear(h, d_out, b_out);
  }

  void save(const std::string& path) const {
    WeightArchive ar;
    ar.meta = {{"kind", "pose_prior_vae"},
               {"latent_dim", config.latent_dim},
               {"hidden", config.hidden},
               {"joints", int(kJointCount)},
               {"trained", trained}};
    const char* names[] = {"e_w1", "e_b1", "e_w2", "e_b2", "w_mu", "b_mu", "w_lv", "b_lv",
                           "d_w1", "d_b1", "d_w2", "d_b2", "d_out", "b_out"};
    const T* tensors[] = {&e_w1, &e_b1, &e_w2, &e_b2, &w_mu, &b_mu, &w_lv, &b_lv,
                          &d_w1, &d_b1, &d_w2, &d_b2, &d_out, &b_out};
    for (int i = 0; i < 14; ++i) ar.put(names[i], *tensors[i]);
    ar.save(path);
  }

  static PriorModel load(const std::string& path) {
    WeightArchive ar = WeightArchive::load(path);
    PriorConfig cfg;
    cfg.latent_dim = ar.meta.value("latent_dim", 8);
    cfg.hidden = ar.meta.value("hidden", 128);
    PriorModel m;
    m.config = cfg;
    m.trained = ar.meta.value("trained", true);
    m.e_w1 = ar.get<S>("e_w1", true);
    m.e_b1 = ar.get<S>("e_b1", true);
    m.e_w2 = ar.get<S>("e_w2", true);
    m.e_b2 = ar.get<S>("e_b2", true);
    m.w_mu = ar.get<S>("w_mu", true);
    m.b_mu = ar.get<S>("b_mu", true);
    m.w_lv = ar.get<S>("w_lv", true);
    m.b_lv = ar.get<S>("b_lv", true);
    m.d_w1 = ar.get<S>("d_w1", true);
    m.d_b1 = ar.get<S>("d_b1", true);
    m.d_w2 = ar.get<S>("d_w2", true);
    m.d_b2 = ar.get<S>("d_b2", true);
    m.d_out = ar.get<S>("d_out", true);
    m.b_out = ar.get<S>("b_out", true);
    return m;
  }
};

namespace prior_detail {

// 6D two-column representation -> rotation matrices (N,J,3,3)
template <typename S>
ad::Tensor<S> rot6d_to_matrix(const ad::Tensor<S>& raw, int n, int joints) {
  using T = ad::Tensor<S>;
  T r = ad::reshape(raw, {n, joints, 6});
  auto comp = [&](const T& v, int i) { return ad::narrow(v, 2, i, 1); };
  T a = ad::narrow(r, 2, 0, 3);
  T b = ad::narrow(r, 2, 3, 3);
  auto normed = [&](const T& v) {
    T n2 = ad::add(ad::add(ad::square(comp(v, 0)), ad::square(comp(v, 1))), ad::square(comp(v, 2)));
    return ad::div(v, ad::sqrt(ad::add_const(n2, S(1e-8))));
  };
  T r1 = normed(a);
  T dot = ad::add(ad::add(ad::mul(comp(r1, 0), comp(b, 0)), ad::mul(comp(r1, 1), comp(b, 1))),
                  ad::mul(comp(r1, 2), comp(b, 2)));
  T r2 = normed(ad::sub(b, ad::mul(dot, r1)));
  // r3 = r1 x r2
  T r3 = ad::concat<S>({ad::sub(ad::mul(comp(r1, 1), comp(r2, 2)), ad::mul(comp(r1, 2), comp(r2, 1))),
                        ad::sub(ad::mul(comp(r1, 2), comp(r2, 0)), ad::mul(comp(r1, 0), comp(r2, 2))),
                        ad::sub(ad::mul(comp(r1, 0), comp(r2, 1)), ad::mul(comp(r1, 1), comp(r2, 0)))},
                       2);
  // columns r1 r2 r3, row-major 3x3
  T rows = ad::concat<S>({comp(r1, 0), comp(r2, 0), comp(r3, 0),
                          comp(r1, 1), comp(r2, 1), comp(r3, 1),
                          comp(r1, 2), comp(r2, 2), comp(r3, 2)},
                         2);
  return ad::reshape(rows, {n, joints, 3, 3});
}

template <typename S>
ad::Tensor<S> poses_to_tensor(const std::vector<BodyState>& poses, bool requires_grad = false) {
  std::vector<S> d;
  d.reserve(poses.size() * kJointCount * 3);
  for (const auto& p : poses)
    for (const auto& t : p.theta) {
      d.push_back(S(t.x));
      d.push_back(S(t.y));
      d.push_back(S(t.z));
    }
  return ad::Tensor<S>::from({static_cast<int>(poses.size()), kJointCount * 3}, std::move(d),
                             requires_grad);
}

}  // namespace prior_detail

struct PriorEpochLog {
  int epoch;
  double recon;
  double kl;
};

// Train the pose prior. Reconstruction is measured on 3D joint positions via
// forward kinematics; KL is against a unit Gaussian with a linear warmup.
template <typename S>
PriorModel<S> train_prior(const std::vector<BodyState>& poses, const PriorConfig& cfg,
                          std::vector<PriorEpochLog>* log = nullptr) {
  using T = ad::Tensor<S>;
  if (poses.size() < 500)
    throw std::invalid_argument("pose prior needs at least 500 training poses, got " +
                                std::to_string(poses.size()));
  const Skeleton& skel = Skeleton::standard();
  PriorModel<S> model = PriorModel<S>::init(cfg);
  ad::Adam<S> opt(model.params(), S(cfg.lr));
  Rng rng(Rng::mix(cfg.seed, 0xabcdef));

  // precompute ground-truth joint positions for every pose
  int n_all = static_cast<int>(poses.size());
  std::vector<S> gt_pos(static_cast<size_t>(n_all) * kJointCount * 3);
  BodyState neutral;
  for (int i = 0; i < n_all; ++i) {
    BodyState st = neutral;
    st.theta = poses[i].theta;
    Joints3D j = forward_kinematics(st, skel);
    for (int k = 0; k < kJointCount; ++k) {
      gt_pos[(static_cast<size_t>(i) * kJointCount + k) * 3 + 0] = S(j[k].x);
      gt_pos[(static_cast<size_t>(i) * kJointCount + k) * 3 + 1] = S(j[k].y);
      gt_pos[(static_cast<size_t>(i) * kJointCount + k) * 3 + 2] = S(j[k].z);
    }
  }
  T theta_all = prior_detail::poses_to_tensor<S>(poses);

  T beta_ones = T::full({1, kBoneCount}, S(1));
  std::vector<S> eye{1, 0, 0, 0, 1, 0, 0, 0, 1};
  T global_id = T::from({1, 3, 3}, eye);

  std::vector<int> order(n_all);
  for (int i = 0; i < n_all; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // deterministic shuffle
    for (int i = n_all - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<int>(rng.uniform_int(0, i))]);
    double kl_scale = cfg.kl_weight *
                      std::min(1.0, double(epoch + 1) / std::max(1, cfg.kl_warmup_epochs));
    double ep_recon = 0, ep_kl = 0;
    int n_batches = 0;
    for (int start = 0; start + cfg.batch <= n_all; start += cfg.batch) {
      int nb = cfg.batch;
      std::vector<S> xb(static_cast<size_t>(nb) * kJointCount * 3);
      std::vector<S> pb(static_cast<size_t>(nb) * kJointCount * 3);
      for (int i = 0; i < nb; ++i) {
        int src = order[start + i];
        std::copy_n(theta_all.data().begin() + static_cast<size_t>(src) * kJointCount * 3,
                    kJointCount * 3, xb.begin() + static_cast<size_t>(i) * kJointCount * 3);
        std::copy_n(gt_pos.begin() + static_cast<size_t>(src) * kJointCount * 3, kJointCount * 3,
                    pb.begin() + static_cast<size_t>(i) * kJointCount * 3);
      }
      T x = T::from({nb, kJointCount * 3}, std::move(xb));
      T target_pos = T::from({nb, kJointCount, 3}, std::move(pb));

      T feat = model.encode_features(x);
      T mu = ad::linear(feat, model.w_mu, model.b_mu);
      T logvar = ad::linear(feat, model.w_lv, model.b_lv);
      std::vector<S> noise(static_cast<size_t>(nb) * cfg.latent_dim);
      for (auto& v : noise) v = S(rng.normal());
      T eps = T::from({nb, cfg.latent_dim}, std::move(noise));
      T z = ad::add(mu, ad::mul(eps, ad::exp(ad::scale(logvar, S(0.5)))));

      T raw = model.decode_raw(z);
      T rot = prior_detail::rot6d_to_matrix<S>(raw, nb, kJointCount);
      T pos = adk::fk_positions(rot, beta_ones, global_id, skel);
      T recon = ad::mean(ad::square(ad::sub(pos, target_pos)));

      // pin the twist directions that joint positions cannot observe
      T rot_gt = adk::rodrigues_batch(ad::reshape(x, {nb, kJointCount, 3})).detach();
      T rot_term = ad::mean(ad::square(ad::sub(rot, rot_gt)));

      T kl = ad::scale(
          ad::mean(ad::sub(ad::add(ad::square(mu), ad::exp(logvar)),
                           ad::add_const(logvar, S(1)))),
          S(0.5));
      T loss = ad::add(ad::add(recon, ad::scale(rot_term, S(cfg.rot_weight))),
                       ad::scale(kl, S(kl_scale)));
      double lv = loss.item();
      if (!std::isfinite(lv))
        throw std::runtime_error("pose prior training diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
      opt.step(ad::grad(loss, opt.params()));
      ep_recon += recon.item();
      ep_kl += kl.item();
      ++n_batches;
    }
    if (log) log->push_back({epoch, ep_recon / n_batches, ep_kl / n_batches});
  }
  model.trained = true;
  return model;
}

// theta -> theta_hat through the (deterministic) encoder mean and decoder.
template <typename S>
std::array<Vec3, kJointCount> reconstruct(const PriorModel<S>& model,
                                          const std::array<Vec3, kJointCount>& theta) {
  using T = ad::Tensor<S>;
  if (!model.trained) throw std::logic_error("pose prior has not been trained");
  std::vector<S> d;
  d.reserve(kJointCount * 3);
  for (const auto& t : theta) {
    d.push_back(S(t.x));
    d.push_back(S(t.y));
    d.push_back(S(t.z));
  }
  T x = T::from({1, kJointCount * 3}, std::move(d));
  T feat = model.encode_features(x);
  T mu = ad::linear(feat, model.w_mu, model.b_mu);
  T raw = model.decode_raw(mu);
  T rot = prior_detail::rot6d_to_matrix<S>(raw, 1, kJointCount);
  std::array<Vec3, kJointCount> out;
  for (int j = 0; j < kJointCount; ++j) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m[k] = double(rot.data()[j * 9 + k]);
    out[j] = matrix_to_axis_angle(m);
  }
  return out;
}

// Held-out reconstruction quality: RMS of joint-position error in rest-bone
// units (the toy body stands about one unit tall).
template <typename S>
double prior_joint_rms(const PriorModel<S>& model, const std::vector<BodyState>& poses) {
  const Skeleton& skel = Skeleton::standard();
  double acc = 0;
  int64_t n = 0;
  for (const auto& p : poses) {
    auto theta_hat = reconstruct(model, p.theta);
    BodyState a, b;
    a.theta = p.theta;
    b.theta = theta_hat;
    Joints3D ja = forward_kinematics(a, skel);
    Joints3D jb = forward_kinematics(b, skel);
    for (int j = 0; j < kJointCount; ++j) {
      Vec3 d = ja[j] - jb[j];
      acc += d.x * d.x + d.y * d.y + d.z * d.z;
      n += 3;
    }
  }
  return std::sqrt(acc / double(n));
}

}  // namespace continuum
