#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "../oracles/qp_oracle.hpp"
#include "firstcontact/kernel_svm.hpp"
#include "gen.hpp"

using namespace firstcontact;

namespace {

SmoOptions tight() {
  SmoOptions o;
  o.tol = 1e-10;
  return o;
}

void check_svc_feasible(const DualSolution& s, const std::vector<double>& y, double c) {
  double balance = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(s.alpha[i] >= 0.0);
    CHECK(s.alpha[i] <= c);
    balance += y[i] * s.alpha[i];
  }
  CHECK(std::abs(balance) <= 1e-9);
}

}  // namespace

TEST_CASE("rbf kernel") {
  const std::vector<double> u = {1, 2, 3};
  const std::vector<double> v = {1, 0, 3};
  CHECK(rbf_kernel(u, u, 0.7) == 1.0);
  CHECK(rbf_kernel(u, v, 0.5) == doctest::Approx(std::exp(-2.0)));
  CHECK(rbf_kernel(u, v, 0.5) == rbf_kernel(v, u, 0.5));
}

TEST_CASE("default gamma is 1 / (dim * variance)") {
  const FeatureRows rows = {{0, 2}, {2, 0}};
  // Pooled values {0, 2, 2, 0}: population variance 1.
  CHECK(default_gamma(rows) == doctest::Approx(0.5));
}

TEST_CASE("SMO matches the exact QP on XOR") {
  const FeatureRows x = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<double> y = {1, 1, -1, -1};
  const auto smo = solve_svc_dual(x, y, 10.0, 1.0, tight());
  const auto exact = oracle::svc_dual_optimum(x, y, 10.0, 1.0);
  CHECK(smo.converged);
  CHECK(smo.dual_objective == doctest::Approx(-exact.objective).epsilon(1e-9));
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(smo.alpha[i] - exact.a[static_cast<int>(i)]) <= 1e-6);
  check_svc_feasible(smo, y, 10.0);
  // The exact optimum is not beaten by any sampled feasible point.
  const auto qp = oracle::svc_problem(x, y, 10.0, 1.0);
  CHECK(oracle::sampled_feasible_min(qp, 20000, 1) >= exact.objective - 1e-12);
}

TEST_CASE("SVR dual matches the exact QP on a 1-D problem") {
  const FeatureRows x = {{0.0}, {0.5}, {1.0}, {1.5}, {2.0}, {2.5}};
  const std::vector<double> t = {0.0, 0.4, 1.1, 1.4, 2.2, 2.4};
  const auto smo = solve_svr_dual(x, t, 5.0, 1.0, 0.1, tight());
  const auto exact = oracle::svr_dual_optimum(x, t, 5.0, 1.0, 0.1);
  CHECK(smo.converged);
  CHECK(smo.dual_objective == doctest::Approx(-exact.objective).epsilon(1e-9));
  double balance = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    balance += smo.alpha[i] - smo.alpha[i + x.size()];
    CHECK(smo.alpha[i] * smo.alpha[i + x.size()] <= 1e-12);
  }
  CHECK(std::abs(balance) <= 1e-9);
}

TEST_CASE("SMO objective equals the exact optimum on random small problems") {
  gen::for_cases(11, 15, [](gen::Source& g, int) {
    const std::size_t n = g.index(2, 8);
    FeatureRows x(n, std::vector<double>(2));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : x[i]) v = g.normal();
      y[i] = i % 2 == 0 ? 1.0 : -1.0;
    }
    const double c = g.uniform(0.1, 50.0);
    const double gamma = g.uniform(0.1, 3.0);
    const auto smo = solve_svc_dual(x, y, c, gamma, tight());
    const auto exact = oracle::svc_dual_optimum(x, y, c, gamma);
    CHECK(std::abs(smo.dual_objective + exact.objective) <= 1e-6);
    check_svc_feasible(smo, y, c);
  });
}

TEST_CASE("one-vs-one SVC fits separable classes") {
  gen::Source g(12);
  FeatureRows x;
  std::vector<double> labels;
  for (double cls : {10.0, 20.0, 30.0}) {
    for (int i = 0; i < 20; ++i) {
      x.push_back({cls / 10.0 + 0.05 * g.normal(), -cls / 10.0 + 0.05 * g.normal()});
      labels.push_back(cls);
    }
  }
  SvmParams p;
  const auto m = train_svc(x, labels, p);
  CHECK(m.classes == std::vector<double>{10, 20, 30});
  CHECK(m.pair_models.size() == 3);
  CHECK_NOTHROW(m.check_invariants());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(predict_value(m, x[i]) == labels[i]);
  CHECK_THROWS_AS((void)train_svc(x, std::vector<double>(x.size(), 1.0), p), std::invalid_argument);
  CHECK_THROWS_AS((void)predict_value(m, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("vote ties go to the lowest class") {
  KernelModel m;
  m.kind = KernelModel::Kind::classifier;
  m.input_len = 1;
  m.classes = {10, 20, 30};
  // A cycle: 10 beats 20, 30 beats 10, 20 beats 30. One vote each.
  m.pair_models = {{10, 20, {}, {}, 1.0, 0, 0}, {10, 30, {}, {}, -1.0, 0, 0}, {20, 30, {}, {}, 1.0, 0, 0}};
  CHECK_NOTHROW(m.check_invariants());
  CHECK(predict_value(m, std::vector<double>{0.0}) == 10.0);
}

TEST_CASE("regressor output is clamped to the Shore A range") {
  KernelModel m;
  m.kind = KernelModel::Kind::regressor;
  m.input_len = 1;
  m.bias = 5.0;
  m.target = {50.0, 20.0};
  CHECK(predict_value(m, std::vector<double>{0.0}) == 100.0);
  m.bias = -5.0;
  CHECK(predict_value(m, std::vector<double>{0.0}) == 0.0);
  m.bias = 0.5;
  CHECK(predict_value(m, std::vector<double>{0.0}) == doctest::Approx(60.0));
}

TEST_CASE("SVR recovers a smooth function") {
  gen::Source g(13);
  FeatureRows x;
  std::vector<double> t;
  for (int i = 0; i < 80; ++i) {
    const double u = g.uniform(-1, 1);
    x.push_back({u});
    t.push_back(50.0 + 20.0 * std::sin(2.0 * u));
  }
  SvmParams p;
  p.c_penalty = 100.0;
  p.gamma = 2.0;
  p.epsilon = 0.5;
  const auto m = train_svr(x, t, p);
  CHECK_NOTHROW(m.check_invariants());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(predict_value(m, x[i]) - t[i]));
  CHECK(worst < 2.0);
}

TEST_CASE("window-mean preprocessing makes predictions offset invariant") {
  gen::Source g(14);
  FeatureRows x;
  std::vector<double> t;
  for (int i = 0; i < 40; ++i) {
    const double a = g.uniform(0.5, 2.0);
    std::vector<double> w(10);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.65 + a * std::sin(0.7 * static_cast<double>(k));
    x.push_back(w);
    t.push_back(20.0 * a);
  }
  SvmParams p;
  p.preprocess = Preprocess::fit_window_mean(x);
  const auto m = train_svr(x, t, p);
  gen::for_cases(15, 20, [&](gen::Source& h, int) {
    auto w = x[h.index(0, x.size() - 1)];
    const double before = predict_value(m, w);
    const double shift = h.uniform(-1.0, 1.0);
    for (double& v : w) v += shift;
    CHECK(predict_value(m, w) == doctest::Approx(before).epsilon(1e-9));
  });
}

TEST_CASE("grid search covers the 3x3 grid") {
  gen::Source g(16);
  FeatureRows x;
  std::vector<double> labels;
  for (int i = 0; i < 30; ++i) {
    const double cls = i % 2 == 0 ? 0.0 : 1.0;
    x.push_back({cls + 0.2 * g.normal(), 0.2 * g.normal()});
    labels.push_back(cls);
  }
  const auto r = grid_search_svc(x, labels, SvmParams{});
  CHECK(r.table.size() == 9);
  REQUIRE(r.best.gamma.has_value());
  bool found = false;
  for (const auto& p : r.table) found = found || (p.c_penalty == r.best.c_penalty && p.gamma == *r.best.gamma);
  CHECK(found);
}
