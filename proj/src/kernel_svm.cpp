#include "firstcontact/kernel_svm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "firstcontact/random.hpp"

namespace firstcontact {

std::vector<double> Preprocess::apply(std::span<const double> x) const {
  double c = center_value;
  if (center == Center::window_mean && !x.empty())
    c = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> out(x.size());
  const double inv = 1.0 / scale;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - c) * inv;
  return out;
}

Preprocess Preprocess::fit_window_mean(const FeatureRows& windows) {
  Preprocess p;
  p.center = Center::window_mean;
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& w : windows) {
    if (w.empty()) continue;
    const double m = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    for (double v : w) ss += (v - m) * (v - m);
    n += w.size();
  }
  const double rms = n > 0 ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
  p.scale = rms > 0.0 ? rms : 1.0;
  return p;
}

Preprocess Preprocess::fixed(double center, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("Preprocess: scale must be positive");
  return {Center::fixed, center, scale};
}

TargetScale TargetScale::fit(std::span<const double> targets) {
  TargetScale t;
  if (targets.empty()) return t;
  t.mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());
  double ss = 0.0;
  for (double v : targets) ss += (v - t.mean) * (v - t.mean);
  const double sd = std::sqrt(ss / static_cast<double>(targets.size()));
  t.scale = sd > 0.0 ? sd : 1.0;
  return t;
}

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  if (u.size() != v.size()) throw std::invalid_argument("rbf_kernel: length mismatch");
  if (!(gamma > 0.0)) throw std::invalid_argument("rbf_kernel: gamma must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double default_gamma(const FeatureRows& rows) {
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("default_gamma: no data");
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows)
    for (double v : r) {
      sum += v;
      sq += v * v;
      ++n;
    }
  const double mean = sum / static_cast<double>(n);
  const double var = sq / static_cast<double>(n) - mean * mean;
  const double dim = static_cast<double>(rows.front().size());
  return var > 0.0 ? 1.0 / (dim * var) : 1.0 / dim;
}

namespace {

/// Lazily computed kernel rows with FIFO eviction once the byte budget is reached.
class KernelCache {
 public:
  KernelCache(const FeatureRows& x, double gamma, std::size_t cache_mb)
      : x_(x), gamma_(gamma), rows_(x.size()), norms_(x.size()) {
    for (std::size_t i = 0; i < x.size(); ++i)
      norms_[i] = std::inner_product(x[i].begin(), x[i].end(), x[i].begin(), 0.0);
    const std::size_t row_bytes = std::max<std::size_t>(1, x.size() * sizeof(double));
    max_rows_ = std::max<std::size_t>(2, cache_mb * 1024 * 1024 / row_bytes);
  }

  const std::vector<double>& row(std::size_t i, std::size_t keep) {
    if (rows_[i].empty()) {
      while (fifo_.size() >= max_rows_) {
        std::size_t victim = fifo_.front();
        fifo_.pop_front();
        if (victim == keep) {
          fifo_.push_back(victim);
          continue;
        }
        std::vector<double>().swap(rows_[victim]);
      }
      auto& r = rows_[i];
      r.resize(x_.size());
      const auto& xi = x_[i];
      for (std::size_t j = 0; j < x_.size(); ++j) {
        const double dot = std::inner_product(xi.begin(), xi.end(), x_[j].begin(), 0.0);
        r[j] = std::exp(-gamma_ * std::max(0.0, norms_[i] + norms_[j] - 2.0 * dot));
      }
      r[i] = 1.0;
      fifo_.push_back(i);
    }
    return rows_[i];
  }

 private:
  const FeatureRows& x_;
  double gamma_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> norms_;
  std::deque<std::size_t> fifo_;
  std::size_t max_rows_;
};

constexpr double kTau = 1e-12;

/// Second-order working-set SMO over variables t with Q_ts = y_t y_s K(point_t, point_s).
DualSolution smo(KernelCache& kernel, const std::vector<std::size_t>& point, const std::vector<double>& y,
                 const std::vector<double>& p, double c, const SmoOptions& opts) {
  const std::size_t m = point.size();
  DualSolution sol;
  sol.alpha.assign(m, 0.0);
  std::vector<double> grad = p;
  auto& alpha = sol.alpha;

  const auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
  const std::size_t max_iter = std::max<std::size_t>(1, opts.max_passes) * std::max<std::size_t>(1, m);

  std::size_t iter = 0;
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t gi = -1;
    for (std::size_t t = 0; t < m; ++t) {
      if (y[t] > 0) {
        if (!upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; gi = static_cast<std::ptrdiff_t>(t); }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        gi = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (gi < 0) {
      sol.kkt_gap = 0.0;
      sol.converged = true;
      break;
    }
    const auto i = static_cast<std::size_t>(gi);
    const auto& ki = kernel.row(point[i], point[i]);

    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t gj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < m; ++t) {
      const double qit = y[i] * y[t] * ki[point[t]];
      if (y[t] > 0) {
        if (lower(t)) continue;
        const double diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (diff > 0) {
          double quad = 1.0 + 1.0 - 2.0 * y[i] * qit;
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) { best = obj; gj = static_cast<std::ptrdiff_t>(t); }
        }
      } else {
        if (upper(t)) continue;
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0) {
          double quad = 1.0 + 1.0 + 2.0 * y[i] * qit;
          if (quad <= 0) quad = kTau;
          const double obj = -(diff * diff) / quad;
          if (obj <= best) { best = obj; gj = static_cast<std::ptrdiff_t>(t); }
        }
      }
    }
    sol.kkt_gap = gmax + gmax2;
    if (sol.kkt_gap < opts.tol || gj < 0) {
      sol.converged = true;
      break;
    }
    const auto j = static_cast<std::size_t>(gj);
    const auto& kj = kernel.row(point[j], point[i]);
    const auto& ki2 = kernel.row(point[i], point[j]);
    const double qij = y[i] * y[j] * ki2[point[j]];

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < m; ++t)
      grad[t] += y[t] * (y[i] * ki2[point[t]] * di + y[j] * kj[point[t]] * dj);
  }
  sol.iterations = iter;

  // Bias from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  double obj = 0.0;
  for (std::size_t t = 0; t < m; ++t) obj += alpha[t] * (grad[t] + p[t]);
  sol.dual_objective = -0.5 * obj;
  return sol;
}

void check_rows(const FeatureRows& x) {
  if (x.empty()) throw std::invalid_argument("kernel machine: no training rows");
  const std::size_t d = x.front().size();
  if (d == 0) throw std::invalid_argument("kernel machine: empty feature vectors");
  for (const auto& r : x)
    if (r.size() != d) throw std::invalid_argument("kernel machine: ragged feature rows");
}

}  // namespace

DualSolution solve_svc_dual(const FeatureRows& x, std::span<const double> y_pm1, double c, double gamma,
                            const SmoOptions& opts) {
  check_rows(x);
  if (y_pm1.size() != x.size()) throw std::invalid_argument("solve_svc_dual: label count mismatch");
  if (!(c > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("solve_svc_dual: C and gamma must be positive");
  KernelCache cache(x, gamma, opts.cache_mb);
  std::vector<std::size_t> point(x.size());
  std::iota(point.begin(), point.end(), 0);
  std::vector<double> y(y_pm1.begin(), y_pm1.end());
  for (double& v : y) {
    if (v != 1.0 && v != -1.0) throw std::invalid_argument("solve_svc_dual: labels must be +1/-1");
  }
  return smo(cache, point, y, std::vector<double>(x.size(), -1.0), c, opts);
}

DualSolution solve_svr_dual(const FeatureRows& x, std::span<const double> targets, double c, double gamma,
                            double epsilon, const SmoOptions& opts) {
  check_rows(x);
  if (targets.size() != x.size()) throw std::invalid_argument("solve_svr_dual: target count mismatch");
  if (!(c > 0.0) || !(gamma > 0.0) || epsilon < 0.0)
    throw std::invalid_argument("solve_svr_dual: need C > 0, gamma > 0, epsilon >= 0");
  const std::size_t n = x.size();
  KernelCache cache(x, gamma, opts.cache_mb);
  std::vector<std::size_t> point(2 * n);
  std::vector<double> y(2 * n);
  std::vector<double> p(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    point[i] = point[i + n] = i;
    y[i] = 1.0;
    y[i + n] = -1.0;
    p[i] = epsilon - targets[i];
    p[i + n] = epsilon + targets[i];
  }
  return smo(cache, point, y, p, c, opts);
}

void KernelModel::check_invariants() const {
  for (const auto& sv : support_vectors)
    if (sv.size() != input_len) throw std::logic_error("KernelModel: support vector length mismatch");
  if (kind == Kind::regressor) {
    if (dual_coefs.size() != support_vectors.size())
      throw std::logic_error("KernelModel: |dual_coefs| != |support_vectors|");
    for (double b : dual_coefs)
      if (std::abs(b) > c_penalty * (1 + 1e-9)) throw std::logic_error("KernelModel: dual coefficient above C");
    return;
  }
  if (classes.size() < 2) throw std::logic_error("KernelModel: classifier needs two classes");
  for (const auto& pm : pair_models) {
    if (pm.sv.size() != pm.coef.size()) throw std::logic_error("KernelModel: pair model size mismatch");
    double balance = 0.0;
    for (std::size_t k = 0; k < pm.sv.size(); ++k) {
      if (pm.sv[k] >= support_vectors.size()) throw std::logic_error("KernelModel: support index out of range");
      if (std::abs(pm.coef[k]) > c_penalty * (1 + 1e-9)) throw std::logic_error("KernelModel: alpha above C");
      balance += pm.coef[k];
    }
    if (std::abs(balance) > 1e-8 * std::max(1.0, c_penalty))
      throw std::logic_error("KernelModel: sum alpha_i y_i != 0");
  }
}

namespace {

FeatureRows preprocess_rows(const FeatureRows& windows, const Preprocess& pre) {
  FeatureRows out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(pre.apply(w));
  return out;
}

}  // namespace

KernelModel train_svc(const FeatureRows& windows, std::span<const double> labels, const SvmParams& params) {
  check_rows(windows);
  if (labels.size() != windows.size()) throw std::invalid_argument("train_svc: label count mismatch");
  std::vector<double> classes(labels.begin(), labels.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) throw std::invalid_argument("train_svc: need at least two classes");

  const FeatureRows x = preprocess_rows(windows, params.preprocess);
  KernelModel model;
  model.kind = KernelModel::Kind::classifier;
  model.input_len = windows.front().size();
  model.gamma = params.gamma.value_or(default_gamma(x));
  model.c_penalty = params.c_penalty;
  model.classes = classes;
  model.preprocess = params.preprocess;
  model.seed = params.seed;

  std::map<std::size_t, std::size_t> pool;  // training row -> support vector slot
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      FeatureRows sub;
      std::vector<double> y;
      std::vector<std::size_t> origin;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (labels[i] == classes[a] || labels[i] == classes[b]) {
          sub.push_back(x[i]);
          y.push_back(labels[i] == classes[a] ? 1.0 : -1.0);
          origin.push_back(i);
        }
      }
      const DualSolution sol = solve_svc_dual(sub, y, params.c_penalty, model.gamma, params.smo);
      PairModel pm;
      pm.positive_class = classes[a];
      pm.negative_class = classes[b];
      pm.bias = -sol.rho;
      pm.dual_objective = sol.dual_objective;
      pm.kkt_gap = sol.kkt_gap;
      for (std::size_t k = 0; k < sub.size(); ++k) {
        if (sol.alpha[k] <= 0.0) continue;
        auto [it, inserted] = pool.try_emplace(origin[k], model.support_vectors.size());
        if (inserted) model.support_vectors.push_back(x[origin[k]]);
        pm.sv.push_back(it->second);
        pm.coef.push_back(sol.alpha[k] * y[k]);
      }
      model.pair_models.push_back(std::move(pm));
    }
  }
  return model;
}

KernelModel train_svr(const FeatureRows& windows, std::span<const double> targets, const SvmParams& params) {
  check_rows(windows);
  if (targets.size() != windows.size()) throw std::invalid_argument("train_svr: target count mismatch");
  const FeatureRows x = preprocess_rows(windows, params.preprocess);
  KernelModel model;
  model.kind = KernelModel::Kind::regressor;
  model.input_len = windows.front().size();
  model.gamma = params.gamma.value_or(default_gamma(x));
  model.c_penalty = params.c_penalty;
  model.epsilon = params.epsilon;
  model.preprocess = params.preprocess;
  model.target = TargetScale::fit(targets);
  model.seed = params.seed;

  std::vector<double> z(targets.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = model.target.forward(targets[i]);
  const DualSolution sol =
      solve_svr_dual(x, z, params.c_penalty, model.gamma, params.epsilon / model.target.scale, params.smo);
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double beta = sol.alpha[i] - sol.alpha[i + n];
    if (beta == 0.0) continue;
    model.support_vectors.push_back(x[i]);
    model.dual_coefs.push_back(beta);
  }
  model.bias = -sol.rho;
  return model;
}

double predict_value(const KernelModel& model, std::span<const double> window) {
  if (window.size() != model.input_len)
    throw std::invalid_argument("predict: window has " + std::to_string(window.size()) + " samples, model expects " +
                                std::to_string(model.input_len));
  const std::vector<double> x = model.preprocess.apply(window);
  if (model.kind == KernelModel::Kind::regressor) {
    double acc = model.bias;
    for (std::size_t k = 0; k < model.support_vectors.size(); ++k)
      acc += model.dual_coefs[k] * rbf_kernel(model.support_vectors[k], x, model.gamma);
    return std::clamp(model.target.inverse(acc), 0.0, 100.0);
  }
  std::vector<double> kv(model.support_vectors.size());
  for (std::size_t k = 0; k < kv.size(); ++k) kv[k] = rbf_kernel(model.support_vectors[k], x, model.gamma);
  std::vector<int> votes(model.classes.size(), 0);
  const auto index_of = [&](double cls) {
    return static_cast<std::size_t>(std::lower_bound(model.classes.begin(), model.classes.end(), cls) -
                                    model.classes.begin());
  };
  for (const auto& pm : model.pair_models) {
    double d = pm.bias;
    for (std::size_t k = 0; k < pm.sv.size(); ++k) d += pm.coef[k] * kv[pm.sv[k]];
    ++votes[index_of(d > 0.0 ? pm.positive_class : pm.negative_class)];
  }
  const auto best = std::max_element(votes.begin(), votes.end());  // first maximum = lowest class
  return model.classes[static_cast<std::size_t>(best - votes.begin())];
}

namespace {

struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

Holdout split_holdout(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0x67726964));
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_valid = std::max<std::size_t>(1, n / 5);
  return {{idx.begin() + static_cast<std::ptrdiff_t>(n_valid), idx.end()},
          {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_valid)}};
}

template <typename Train, typename Score>
GridResult grid_search(const FeatureRows& windows, std::span<const double> y, const SvmParams& base, bool maximize,
                       Train train, Score score) {
  check_rows(windows);
  if (windows.size() < 5) throw std::invalid_argument("grid_search: need at least 5 rows");
  const Holdout h = split_holdout(windows.size(), base.seed);
  FeatureRows xt, xv;
  std::vector<double> yt, yv;
  for (auto i : h.train) { xt.push_back(windows[i]); yt.push_back(y[i]); }
  for (auto i : h.valid) { xv.push_back(windows[i]); yv.push_back(y[i]); }

  FeatureRows pre;
  for (const auto& w : xt) pre.push_back(base.preprocess.apply(w));
  const double g0 = base.gamma.value_or(default_gamma(pre));

  GridResult result;
  result.best = base;
  double best_score = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  for (double c : {1.0, 10.0, 100.0}) {
    for (double gm : {0.1, 1.0, 10.0}) {
      SvmParams p = base;
      p.c_penalty = c;
      p.gamma = g0 * gm;
      const KernelModel m = train(xt, yt, p);
      const double s = score(m, xv, yv);
      result.table.push_back({c, g0 * gm, s});
      if (maximize ? s > best_score : s < best_score) {
        best_score = s;
        result.best = p;
      }
    }
  }
  return result;
}

}  // namespace

GridResult grid_search_svc(const FeatureRows& windows, std::span<const double> labels, const SvmParams& base) {
  return grid_search(
      windows, labels, base, true,
      [](const FeatureRows& x, const std::vector<double>& y, const SvmParams& p) { return train_svc(x, y, p); },
      [](const KernelModel& m, const FeatureRows& x, const std::vector<double>& y) {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < x.size(); ++i) hit += predict_value(m, x[i]) == y[i];
        return static_cast<double>(hit) / static_cast<double>(x.size());
      });
}

GridResult grid_search_svr(const FeatureRows& windows, std::span<const double> targets, const SvmParams& base) {
  return grid_search(
      windows, targets, base, false,
      [](const FeatureRows& x, const std::vector<double>& y, const SvmParams& p) { return train_svr(x, y, p); },
      [](const KernelModel& m, const FeatureRows& x, const std::vector<double>& y) {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double e = predict_value(m, x[i]) - y[i];
          ss += e * e;
        }
        return std::sqrt(ss / static_cast<double>(x.size()));
      });
}

}  // namespace firstcontact
