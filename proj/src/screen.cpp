#include "qebm/screen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

#include "qebm/parallel.hpp"
#include "qebm/rng.hpp"

namespace qebm {

namespace {

constexpr double kExpClip = 50.0;
constexpr double kArmijoC = 1e-4;
constexpr int kNewtonDimCap = 512;
constexpr int kNewtonMaxIters = 60;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double clip_exponent(double e, long& clips) {
  if (e > kExpClip) {
    ++clips;
    return kExpClip;
  }
  if (e < -kExpClip) {
    ++clips;
    return -kExpClip;
  }
  return e;
}

// Uniform view over the two data sources: sample rows with weight 1/m, or
// enumerated table entries with weight mu(sigma).
struct DataView {
  const SampleSet* samples = nullptr;
  const ProbTable* table = nullptr;

  int n() const { return samples ? samples->n : table->n; }
  int q() const { return samples ? samples->q : table->q; }
  std::uint64_t rows() const { return samples ? samples->rows() : table->entries(); }
  bool empirical() const { return samples != nullptr; }
  double weight(std::uint64_t t) const {
    return samples ? 1.0 / static_cast<double>(samples->rows()) : table->probs[t];
  }
  void config(std::uint64_t t, std::span<Symbol> out) const {
    if (samples) {
      auto r = samples->row(t);
      std::copy(r.begin(), r.end(), out.begin());
    } else {
      table->decode(t, out);
    }
  }
};

void neighbor_of(std::span<const Symbol> config, int u, std::span<Symbol> out) {
  int w = 0;
  for (std::size_t i = 0; i < config.size(); ++i)
    if (static_cast<int>(i) != u) out[static_cast<std::size_t>(w++)] = config[i];
}

// phi matrix, Phi(a, s) = centered_delta(a+1, s+1, q)
MatrixXd phi_matrix(int q) {
  MatrixXd phi(q, q);
  for (int a = 0; a < q; ++a)
    for (int s = 0; s < q; ++s) phi(a, s) = centered_delta(a + 1, static_cast<Symbol>(s + 1), q);
  return phi;
}

class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dim() const = 0;
  virtual double eval(const VectorXd& theta, VectorXd& grad, long& clips) = 0;
  virtual void project(VectorXd& theta) const { (void)theta; }
  // Minibatch support (neural only).
  virtual bool supports_batches() const { return false; }
  virtual double eval_batch(const VectorXd& theta, VectorXd& grad, std::span<const std::uint64_t> batch,
                            long& clips) {
    (void)theta;
    (void)grad;
    (void)batch;
    (void)clips;
    fail(ErrorKind::config, "objective does not support minibatches");
  }
  virtual std::uint64_t batch_rows() const { return 0; }
  // Exact curvature (linear-feature families only), for the Newton endgame.
  virtual bool supports_hessian() const { return false; }
  virtual double eval_hessian(const VectorXd& theta, VectorXd& grad, MatrixXd& hess, long& clips) {
    (void)theta;
    (void)grad;
    (void)hess;
    (void)clips;
    fail(ErrorKind::optimization, "objective does not expose a hessian");
  }
};

// q == 2 polynomial: exponent is linear in the coefficients, one design row
// per sample with the centre spin sign folded in.
class PolyIsingObjective : public Objective {
 public:
  PolyIsingObjective(const PolyParams& params, bool wrapped, int u, const DataView& view) {
    int n = view.n();
    int k = static_cast<int>(params.key_sites.size());
    std::vector<std::uint64_t> kept;
    for (std::uint64_t t = 0; t < view.rows(); ++t)
      if (view.weight(t) > 0.0) kept.push_back(t);
    z_.resize(static_cast<Eigen::Index>(kept.size()), k);
    w_.resize(static_cast<Eigen::Index>(kept.size()));
    std::vector<Symbol> config(static_cast<std::size_t>(n));
    std::vector<Symbol> x(static_cast<std::size_t>(n - 1));
    std::vector<Symbol> xf(static_cast<std::size_t>(n - 1));
    std::vector<double> basis(static_cast<std::size_t>(k));
    std::vector<double> basis_f(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < kept.size(); ++r) {
      std::uint64_t t = kept[r];
      view.config(t, config);
      neighbor_of(config, u, x);
      double su = spin_of(config[static_cast<std::size_t>(u)]);
      params.basis_into(x, basis);
      if (wrapped) {
        for (std::size_t i = 0; i < x.size(); ++i) xf[i] = flip_symbol(x[i], 2);
        params.basis_into(xf, basis_f);
        for (int j = 0; j < k; ++j) basis[static_cast<std::size_t>(j)] -= basis_f[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < k; ++j) z_(static_cast<Eigen::Index>(r), j) = su * basis[static_cast<std::size_t>(j)];
      w_(static_cast<Eigen::Index>(r)) = view.weight(t);
    }
  }

  int dim() const override { return static_cast<int>(z_.cols()); }

  double eval(const VectorXd& theta, VectorXd& grad, long& clips) override {
    e_.noalias() = z_ * theta;
    coef_.resize(e_.size());
    double loss = 0.0;
    for (Eigen::Index t = 0; t < e_.size(); ++t) {
      double ex = clip_exponent(-e_(t), clips);
      double term = w_(t) * std::exp(ex);
      loss += term;
      coef_(t) = (ex == -e_(t)) ? term : 0.0;
    }
    grad.noalias() = -(z_.transpose() * coef_);
    return loss;
  }

  bool supports_hessian() const override { return true; }

  double eval_hessian(const VectorXd& theta, VectorXd& grad, MatrixXd& hess, long& clips) override {
    double loss = eval(theta, grad, clips);
    hess.noalias() = z_.transpose() * coef_.asDiagonal() * z_;
    return loss;
  }

 private:
  RowMatrix z_;
  VectorXd w_, e_, coef_;
};

// q > 2 polynomial in the centered-delta tensor basis.
class PolyPottsObjective : public Objective {
 public:
  PolyPottsObjective(const PolyParams& params, int u, const DataView& view)
      : q_(params.q), keys_(static_cast<int>(params.key_sites.size())), phi_(phi_matrix(params.q)) {
    int n = view.n();
    std::vector<std::uint64_t> kept;
    for (std::uint64_t t = 0; t < view.rows(); ++t)
      if (view.weight(t) > 0.0) kept.push_back(t);
    b_.resize(static_cast<Eigen::Index>(kept.size()), keys_);
    w_.resize(static_cast<Eigen::Index>(kept.size()));
    su_.resize(kept.size());
    std::vector<Symbol> config(static_cast<std::size_t>(n));
    std::vector<Symbol> x(static_cast<std::size_t>(n - 1));
    std::vector<double> basis(static_cast<std::size_t>(keys_));
    for (std::size_t r = 0; r < kept.size(); ++r) {
      std::uint64_t t = kept[r];
      view.config(t, config);
      neighbor_of(config, u, x);
      params.basis_into(x, basis);
      for (int j = 0; j < keys_; ++j) b_(static_cast<Eigen::Index>(r), j) = basis[static_cast<std::size_t>(j)];
      su_[r] = config[static_cast<std::size_t>(u)];
      w_(static_cast<Eigen::Index>(r)) = view.weight(t);
    }
  }

  int dim() const override { return keys_ * q_; }

  double eval(const VectorXd& theta, VectorXd& grad, long& clips) override {
    Eigen::Map<const RowMatrix> th(theta.data(), keys_, q_);
    c_.noalias() = th * phi_;       // keys x q, exponent per (key, centre symbol)
    em_.noalias() = b_ * c_;        // rows x q
    coefmat_.setZero(b_.rows(), q_);
    double loss = 0.0;
    for (Eigen::Index t = 0; t < b_.rows(); ++t) {
      int s = su_[static_cast<std::size_t>(t)] - 1;
      double e = em_(t, s);
      double ex = clip_exponent(-e, clips);
      double term = w_(t) * std::exp(ex);
      loss += term;
      if (ex == -e) coefmat_(t, s) = term;
    }
    m_.noalias() = b_.transpose() * coefmat_;  // keys x q(symbol)
    gm_.noalias() = -(m_ * phi_.transpose());  // keys x q(output)
    grad.resize(dim());
    Eigen::Map<RowMatrix>(grad.data(), keys_, q_) = gm_;
    return loss;
  }

  void project(VectorXd& theta) const override {
    Eigen::Map<RowMatrix> th(theta.data(), keys_, q_);
    VectorXd mean = th.rowwise().mean();
    th.colwise() -= mean;
  }

  bool supports_hessian() const override { return true; }

  double eval_hessian(const VectorXd& theta, VectorXd& grad, MatrixXd& hess, long& clips) override {
    double loss = eval(theta, grad, clips);
    hess.setZero(dim(), dim());
    VectorXd u(dim());
    for (Eigen::Index t = 0; t < b_.rows(); ++t) {
      int s = su_[static_cast<std::size_t>(t)] - 1;
      double term = coefmat_(t, s);
      if (term == 0.0) continue;
      for (int j = 0; j < keys_; ++j) u.segment(j * q_, q_) = b_(t, j) * phi_.col(s);
      hess.selfadjointView<Eigen::Lower>().rankUpdate(u, term);
    }
    hess = hess.selfadjointView<Eigen::Lower>();
    return loss;
  }

 private:
  int q_, keys_;
  MatrixXd phi_;
  RowMatrix b_;
  VectorXd w_;
  std::vector<Symbol> su_;
  MatrixXd c_, em_, coefmat_, m_, gm_;
};

// Symmetric table: the loss depends on data only through weight sums per
// (count key, centre symbol), so evaluation cost is independent of m.
class SymObjective : public Objective {
 public:
  SymObjective(const SymParams& params, bool wrapped, int u, const DataView& view)
      : q_(params.q), keys_(static_cast<int>(params.keys.size())), wrapped_(wrapped),
        phi_(phi_matrix(params.q)) {
    int n = view.n();
    stats_ = MatrixXd::Zero(keys_, q_);
    std::vector<Symbol> config(static_cast<std::size_t>(n));
    std::vector<Symbol> x(static_cast<std::size_t>(n - 1));
    for (std::uint64_t t = 0; t < view.rows(); ++t) {
      double w = view.weight(t);
      if (w <= 0.0) continue;
      view.config(t, config);
      neighbor_of(config, u, x);
      stats_(params.key_of(x), config[static_cast<std::size_t>(u)] - 1) += w;
    }
    if (wrapped_) {
      flip_key_.resize(static_cast<std::size_t>(keys_));
      for (int k = 0; k < keys_; ++k) flip_key_[static_cast<std::size_t>(k)] = params.flipped_key(k);
    }
  }

  int dim() const override { return keys_ * q_; }

  double eval(const VectorXd& theta, VectorXd& grad, long& clips) override {
    Eigen::Map<const RowMatrix> th(theta.data(), keys_, q_);
    c_.noalias() = th * phi_;  // keys x q
    grad.setZero(dim());
    Eigen::Map<RowMatrix> gm(grad.data(), keys_, q_);
    double loss = 0.0;
    for (int k = 0; k < keys_; ++k)
      for (int s = 0; s < q_; ++s) {
        double w = stats_(k, s);
        if (w <= 0.0) continue;
        double e = c_(k, s);
        int kf = 0, sf = 0;
        if (wrapped_) {
          kf = flip_key_[static_cast<std::size_t>(k)];
          sf = q_ - 1 - s;
          e += c_(kf, sf);
        }
        double ex = clip_exponent(-e, clips);
        double term = w * std::exp(ex);
        loss += term;
        if (ex == -e) {
          gm.row(k) -= term * phi_.col(s).transpose();
          if (wrapped_) gm.row(kf) -= term * phi_.col(sf).transpose();
        }
      }
    return loss;
  }

  void project(VectorXd& theta) const override {
    Eigen::Map<RowMatrix> th(theta.data(), keys_, q_);
    VectorXd mean = th.rowwise().mean();
    th.colwise() -= mean;
  }

  bool supports_hessian() const override { return true; }

  double eval_hessian(const VectorXd& theta, VectorXd& grad, MatrixXd& hess, long& clips) override {
    double loss = eval(theta, grad, clips);
    hess.setZero(dim(), dim());
    VectorXd v(dim());
    long dummy = 0;
    for (int k = 0; k < keys_; ++k)
      for (int s = 0; s < q_; ++s) {
        double w = stats_(k, s);
        if (w <= 0.0) continue;
        double e = c_(k, s);
        int kf = 0, sf = 0;
        if (wrapped_) {
          kf = flip_key_[static_cast<std::size_t>(k)];
          sf = q_ - 1 - s;
          e += c_(kf, sf);
        }
        double ex = clip_exponent(-e, dummy);
        if (ex != -e) continue;
        double term = w * std::exp(ex);
        v.setZero();
        v.segment(k * q_, q_) = phi_.col(s);
        if (wrapped_) v.segment(kf * q_, q_) += phi_.col(sf);
        hess.selfadjointView<Eigen::Lower>().rankUpdate(v, term);
      }
    hess = hess.selfadjointView<Eigen::Lower>();
    return loss;
  }

 private:
  int q_, keys_;
  bool wrapped_;
  MatrixXd phi_;
  MatrixXd stats_;
  std::vector<int> flip_key_;
  MatrixXd c_;
};

// Neural family; delegates forward/backward (including the spin-flip wrap)
// to SpinFamily and supports minibatch evaluation for adam.
class NeuralObjective : public Objective {
 public:
  NeuralObjective(const SpinFamily& family, int u, const DataView& view)
      : fam_(family), q_(family.q()), nin_(family.n_inputs()) {
    int n = view.n();
    std::vector<std::uint64_t> kept;
    for (std::uint64_t t = 0; t < view.rows(); ++t)
      if (view.weight(t) > 0.0) kept.push_back(t);
    rows_ = kept.size();
    xs_.resize(rows_ * static_cast<std::size_t>(nin_));
    w_.resize(static_cast<Eigen::Index>(rows_));
    su_.resize(rows_);
    std::vector<Symbol> config(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < rows_; ++r) {
      std::uint64_t t = kept[r];
      view.config(t, config);
      neighbor_of(config, u, {xs_.data() + r * static_cast<std::size_t>(nin_), static_cast<std::size_t>(nin_)});
      su_[r] = config[static_cast<std::size_t>(u)];
      w_(static_cast<Eigen::Index>(r)) = view.weight(t);
    }
    phi_ = phi_matrix(q_);
  }

  int dim() const override { return fam_.param_count(); }
  bool supports_batches() const override { return true; }
  std::uint64_t batch_rows() const override { return rows_; }

  double eval(const VectorXd& theta, VectorXd& grad, long& clips) override {
    all_.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) all_[i] = i;
    grad.setZero(dim());
    return accumulate(theta, grad, all_, false, clips);
  }

  double eval_batch(const VectorXd& theta, VectorXd& grad, std::span<const std::uint64_t> batch,
                    long& clips) override {
    grad.setZero(dim());
    return accumulate(theta, grad, batch, true, clips);
  }

 private:
  // rescale=true averages over the batch (weights come in as 1/rows for the
  // empirical loss and mu(sigma) for the exact one, so the batch estimate
  // stays unbiased for the full loss in both cases).
  double accumulate(const VectorXd& theta, VectorXd& grad, std::span<const std::uint64_t> batch,
                    bool rescale, long& clips) {
    fam_.set_params({theta.data(), static_cast<std::size_t>(theta.size())});
    double scale = rescale ? static_cast<double>(rows_) / static_cast<double>(batch.size()) : 1.0;
    std::span<double> gs{grad.data(), static_cast<std::size_t>(grad.size())};
    double loss = 0.0;
    for (std::uint64_t r : batch) {
      std::span<const Symbol> x{xs_.data() + r * static_cast<std::size_t>(nin_),
                                static_cast<std::size_t>(nin_)};
      fam_.value(x, f_, ws_);
      int s = su_[static_cast<std::size_t>(r)] - 1;
      double e = f_(s) - f_.mean();
      double ex = clip_exponent(-e, clips);
      double term = w_(static_cast<Eigen::Index>(r)) * std::exp(ex) * scale;
      loss += term;
      if (ex != -e) continue;
      cot_ = -term * phi_.col(s);
      fam_.backward(x, cot_, gs, ws_);
    }
    return loss;
  }

  SpinFamily fam_;
  int q_, nin_;
  std::size_t rows_ = 0;
  std::vector<Symbol> xs_;  // row-major neighbour configs
  VectorXd w_;
  std::vector<Symbol> su_;
  MatrixXd phi_;
  FamilyWorkspace ws_;
  VectorXd f_, cot_;
  std::vector<std::uint64_t> all_;
};

std::unique_ptr<Objective> make_objective(const SpinFamily& family, int u, const DataView& view) {
  require(family.q() == view.q(), ErrorKind::config, "family q does not match data q");
  require(family.n_inputs() == view.n() - 1, ErrorKind::config, "family inputs do not match data sites");
  if (const auto* p = std::get_if<PolyParams>(&family.params)) {
    if (p->q == 2) return std::make_unique<PolyIsingObjective>(*p, family.spin_flip_symmetrized, u, view);
    require(!family.spin_flip_symmetrized, ErrorKind::config, "spin-flip symmetrization requires q == 2");
    return std::make_unique<PolyPottsObjective>(*p, u, view);
  }
  if (const auto* s = std::get_if<SymParams>(&family.params))
    return std::make_unique<SymObjective>(*s, family.spin_flip_symmetrized, u, view);
  return std::make_unique<NeuralObjective>(family, u, view);
}

struct OptimizerOutcome {
  VectorXd theta;
  double loss = 0.0;
  double grad_norm = 0.0;
  long epochs = 0;
  long clip_events = 0;
};

OptimizerOutcome run_gd_backtracking(Objective& obj, VectorXd theta, const FitConfig& cfg, double lr,
                                     long max_epochs) {
  OptimizerOutcome out;
  long clips = 0;
  VectorXd grad(obj.dim()), grad_next(obj.dim()), trial_theta;
  obj.project(theta);
  double loss = obj.eval(theta, grad, clips);
  require(std::isfinite(loss), ErrorKind::optimization, "screening loss is not finite at the initial point");
  double step = lr;
  long epoch = 0;
  for (; epoch < max_epochs; ++epoch) {
    double gn2 = grad.squaredNorm();
    if (std::sqrt(gn2) < cfg.grad_tol) break;
    bool accepted = false;
    double trial = step;
    for (int bt = 0; bt < 80 && !accepted; ++bt) {
      trial_theta = theta - trial * grad;
      obj.project(trial_theta);
      double trial_loss = obj.eval(trial_theta, grad_next, clips);
      if (std::isfinite(trial_loss) && trial_loss <= loss - kArmijoC * trial * gn2) {
        theta.swap(trial_theta);
        loss = trial_loss;
        grad.swap(grad_next);
        step = trial * 2.0;
        accepted = true;
      } else {
        trial *= 0.5;
      }
    }
    if (!accepted) break;  // step size underflow: as converged as the data allows
  }

  // Newton endgame for the convex linear-feature families. Armijo steps stall
  // once the certified decrease falls below rounding noise, which on badly
  // conditioned instances leaves the gradient well above a tight tolerance;
  // a few damped second-order steps close that gap.
  if (grad.norm() >= cfg.grad_tol && obj.supports_hessian() && obj.dim() <= kNewtonDimCap) {
    MatrixXd hess(obj.dim(), obj.dim());
    VectorXd dir(obj.dim());
    for (int it = 0; it < kNewtonMaxIters; ++it) {
      loss = obj.eval_hessian(theta, grad, hess, clips);
      if (grad.norm() < cfg.grad_tol) break;
      hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
      Eigen::LDLT<MatrixXd> ldlt(hess);
      if (ldlt.info() != Eigen::Success) break;
      dir = ldlt.solve(grad);
      double slope = grad.dot(dir);
      if (!dir.allFinite() || !(slope > 0.0)) break;
      bool accepted = false;
      double t = 1.0;
      for (int bt = 0; bt < 60 && !accepted; ++bt, t *= 0.5) {
        trial_theta = theta - t * dir;
        obj.project(trial_theta);
        double trial_loss = obj.eval(trial_theta, grad_next, clips);
        if (std::isfinite(trial_loss) && trial_loss <= loss - kArmijoC * t * slope) {
          theta.swap(trial_theta);
          loss = trial_loss;
          grad.swap(grad_next);
          accepted = true;
        }
      }
      ++epoch;
      if (!accepted) break;
    }
  }

  require(std::isfinite(loss), ErrorKind::optimization, "screening loss diverged");
  out.theta = std::move(theta);
  out.loss = loss;
  out.grad_norm = grad.norm();
  out.epochs = epoch;
  out.clip_events = clips;
  return out;
}

OptimizerOutcome run_entropic_mirror(Objective& obj, const FitConfig& cfg, double lr, long max_epochs) {
  require(cfg.l1_radius > 0.0, ErrorKind::config,
          "entropic-mirror requires a positive l1_radius");
  int p = obj.dim();
  double lambda = cfg.l1_radius;
  VectorXd logw = VectorXd::Constant(2 * p + 1, -std::log(static_cast<double>(2 * p + 1)));
  VectorXd w, theta(p), grad(p);
  long clips = 0;
  auto to_theta = [&] {
    double mx = logw.maxCoeff();
    w = (logw.array() - mx).exp();
    w /= w.sum();
    for (int i = 0; i < p; ++i) theta(i) = lambda * (w(i) - w(p + i));
  };
  to_theta();
  OptimizerOutcome out;
  out.theta = theta;
  out.loss = std::numeric_limits<double>::infinity();
  long epoch = 0;
  for (; epoch < max_epochs; ++epoch) {
    double loss = obj.eval(theta, grad, clips);
    require(std::isfinite(loss), ErrorKind::optimization, "screening loss diverged");
    if (loss < out.loss) {
      out.loss = loss;
      out.theta = theta;
      out.grad_norm = grad.norm();
    }
    if (grad.norm() < cfg.grad_tol) break;
    double eta = lr / std::sqrt(static_cast<double>(epoch + 1));
    for (int i = 0; i < p; ++i) {
      logw(i) -= eta * lambda * grad(i);
      logw(p + i) += eta * lambda * grad(i);
    }
    to_theta();
  }
  obj.project(out.theta);
  out.epochs = epoch;
  out.clip_events = clips;
  return out;
}

OptimizerOutcome run_adam(Objective& obj, VectorXd theta, const FitConfig& cfg, double lr,
                          long max_epochs, int spin) {
  require(obj.supports_batches(), ErrorKind::config, "adam requires the neural family");
  std::uint64_t rows = obj.batch_rows();
  require(rows >= 1, ErrorKind::config, "no data rows to fit");
  require(static_cast<std::uint64_t>(cfg.minibatch) <= rows, ErrorKind::config,
          "minibatch exceeds the number of rows");
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  VectorXd m = VectorXd::Zero(obj.dim()), v = VectorXd::Zero(obj.dim()), grad(obj.dim());
  std::vector<std::uint64_t> order(rows);
  for (std::uint64_t i = 0; i < rows; ++i) order[i] = i;
  auto eng = make_stream(cfg.seed, "adam-shuffle", static_cast<std::uint64_t>(spin));
  long clips = 0;
  long step = 0;
  double prev_epoch_loss = std::numeric_limits<double>::infinity();
  long epoch = 0;
  for (; epoch < max_epochs; ++epoch) {
    // Fisher-Yates; std::shuffle is implementation-defined
    for (std::uint64_t i = rows - 1; i > 0; --i) {
      std::uint64_t j = uniform_below(eng, i + 1);
      std::swap(order[i], order[j]);
    }
    double lr_epoch = lr / (1.0 + cfg.lr_decay * static_cast<double>(epoch));
    double epoch_loss = 0.0;
    std::uint64_t covered = 0;
    for (std::uint64_t b = 0; b < rows; b += static_cast<std::uint64_t>(cfg.minibatch)) {
      std::uint64_t len = std::min<std::uint64_t>(cfg.minibatch, rows - b);
      double batch_loss = obj.eval_batch(theta, grad, {order.data() + b, len}, clips);
      require(std::isfinite(batch_loss), ErrorKind::optimization, "screening loss diverged during adam");
      epoch_loss += batch_loss * static_cast<double>(len);
      covered += len;
      ++step;
      double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
      theta.array() -= lr_epoch * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
    epoch_loss /= static_cast<double>(covered);
    if (std::abs(prev_epoch_loss - epoch_loss) < cfg.early_stop_delta) {
      ++epoch;
      break;
    }
    prev_epoch_loss = epoch_loss;
  }
  long final_clips = 0;
  double loss = obj.eval(theta, grad, final_clips);
  require(std::isfinite(loss), ErrorKind::optimization, "screening loss diverged");
  OptimizerOutcome out;
  out.theta = std::move(theta);
  out.loss = loss;
  out.grad_norm = grad.norm();
  out.epochs = epoch;
  out.clip_events = clips + final_clips;
  return out;
}

struct ResolvedConfig {
  std::string optimizer;
  double lr;
  long max_epochs;
};

ResolvedConfig resolve_config(const FitConfig& cfg) {
  require(cfg.family == "poly" || cfg.family == "neural" || cfg.family == "symmetric",
          ErrorKind::config, "unknown family '" + cfg.family + "'");
  std::string opt = cfg.optimizer;
  if (opt == "auto") opt = cfg.family == "neural" ? "adam" : "gd-backtracking";
  if (opt == "adam")
    require(cfg.family == "neural", ErrorKind::config, "optimizer adam requires the neural family");
  else if (opt == "gd-backtracking" || opt == "entropic-mirror")
    require(cfg.family != "neural", ErrorKind::config,
            "the neural family requires the adam optimizer");
  else
    fail(ErrorKind::config, "unknown optimizer '" + opt + "'");
  double lr = cfg.learning_rate;
  if (lr <= 0.0) lr = opt == "adam" ? 1e-2 : 1.0;
  long max_epochs = cfg.max_epochs;
  if (max_epochs <= 0) max_epochs = opt == "adam" ? 500 : (opt == "entropic-mirror" ? 5000 : 20000);
  require(cfg.lr_decay >= 0.0, ErrorKind::config, "lr_decay must be >= 0");
  require(cfg.minibatch >= 1, ErrorKind::config, "minibatch must be >= 1");
  require(cfg.grad_tol > 0.0, ErrorKind::config, "grad_tol must be > 0");
  require(cfg.early_stop_delta >= 0.0, ErrorKind::config, "early_stop_delta must be >= 0");
  return {opt, lr, max_epochs};
}

SpinFamily build_family(const FitConfig& cfg, int q, int n_inputs, int u) {
  SpinFamily fam;
  if (cfg.family == "poly") {
    fam.params = PolyParams::create(q, n_inputs, cfg.L);
  } else if (cfg.family == "symmetric") {
    fam.params = SymParams::create(q, n_inputs);
  } else {
    NeuralEncoding enc = neural_encoding_from_label(cfg.encoding, q);
    std::uint64_t s = cfg.seed ^ fnv1a("nn-init") ^
                      (0x5851f42d4c957f2dULL * (static_cast<std::uint64_t>(u) + 1));
    fam.params = NeuralParams::create(q, n_inputs, cfg.depth, cfg.width, enc, splitmix64(s));
  }
  fam.spin_flip_symmetrized = cfg.spin_flip_symmetrize;
  fam.validate();
  return fam;
}

std::pair<SpinFamily, SpinFitReport> fit_spin(const DataView& view, int u, const FitConfig& cfg,
                                              const ResolvedConfig& rc) {
  auto t0 = std::chrono::steady_clock::now();
  SpinFamily fam = build_family(cfg, view.q(), view.n() - 1, u);
  auto obj = make_objective(fam, u, view);
  VectorXd theta(fam.param_count());
  fam.get_params({theta.data(), static_cast<std::size_t>(theta.size())});

  OptimizerOutcome oc;
  if (rc.optimizer == "gd-backtracking")
    oc = run_gd_backtracking(*obj, std::move(theta), cfg, rc.lr, rc.max_epochs);
  else if (rc.optimizer == "entropic-mirror")
    oc = run_entropic_mirror(*obj, cfg, rc.lr, rc.max_epochs);
  else
    oc = run_adam(*obj, std::move(theta), cfg, rc.lr, rc.max_epochs, u);

  fam.set_params({oc.theta.data(), static_cast<std::size_t>(oc.theta.size())});
  SpinFitReport rep;
  rep.spin = u;
  rep.loss = oc.loss;
  rep.grad_norm = oc.grad_norm;
  rep.epochs = oc.epochs;
  rep.clip_events = oc.clip_events;
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(fam), rep};
}

std::pair<EnergyModel, FitReport> fit_view(const DataView& view, const FitConfig& cfg) {
  require(view.rows() >= 1, ErrorKind::config, "no data rows to fit");
  int n = view.n();
  int q = view.q();
  require(n >= 2, ErrorKind::config, "fitting needs at least two sites");
  ResolvedConfig rc = resolve_config(cfg);
  if (cfg.symmetry == Symmetry::permutation)
    require(cfg.family == "symmetric", ErrorKind::config,
            "permutation symmetry requires the symmetric family");
  if (cfg.symmetry == Symmetry::translation)
    require(n >= 2, ErrorKind::config, "translation symmetry needs n >= 2");

  auto t0 = std::chrono::steady_clock::now();
  EnergyModel model;
  model.n = n;
  model.q = q;
  model.symmetry = cfg.symmetry;
  FitReport report;
  report.family = cfg.family;
  report.optimizer = rc.optimizer;
  report.symmetry = cfg.symmetry;

  if (cfg.symmetry == Symmetry::none) {
    model.spins.resize(static_cast<std::size_t>(n));
    report.spins.resize(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
      for (std::size_t u = b; u < e; ++u) {
        auto [fam, rep] = fit_spin(view, static_cast<int>(u), cfg, rc);
        model.spins[u] = std::move(fam);
        report.spins[u] = rep;
      }
    });
  } else {
    // Shared parameters: the screening fit is done once, on spin 0. For
    // translation the canonical neighbour order of spin 0 coincides with the
    // ascending order used by the objectives.
    auto [fam, rep] = fit_spin(view, 0, cfg, rc);
    model.spins.push_back(std::move(fam));
    report.spins.push_back(rep);
  }
  report.total_wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  model.validate();
  return {std::move(model), std::move(report)};
}

LossEval loss_at_current(const SpinFamily& family, int u, const DataView& view) {
  family.validate();
  require(u >= 0 && u < view.n(), ErrorKind::config, "spin index out of range");
  auto obj = make_objective(family, u, view);
  VectorXd theta(family.param_count());
  family.get_params({theta.data(), static_cast<std::size_t>(theta.size())});
  LossEval out;
  out.grad.resize(obj->dim());
  out.clip_events = 0;
  out.loss = obj->eval(theta, out.grad, out.clip_events);
  return out;
}

}  // namespace

LossEval is_loss_empirical(const SpinFamily& family, int u, const SampleSet& samples) {
  require(samples.rows() >= 1, ErrorKind::config, "sample set is empty");
  DataView view;
  view.samples = &samples;
  return loss_at_current(family, u, view);
}

LossEval is_loss_exact(const SpinFamily& family, int u, const ProbTable& table) {
  require(!table.probs.empty(), ErrorKind::config, "probability table is empty");
  DataView view;
  view.table = &table;
  return loss_at_current(family, u, view);
}

std::pair<EnergyModel, FitReport> fit_model(const SampleSet& samples, const FitConfig& cfg) {
  DataView view;
  view.samples = &samples;
  return fit_view(view, cfg);
}

std::pair<EnergyModel, FitReport> fit_model_exact(const ProbTable& table, const FitConfig& cfg) {
  DataView view;
  view.table = &table;
  return fit_view(view, cfg);
}

}  // namespace qebm
