#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>

#include "firstcontact/evaluate.hpp"
#include "firstcontact/workflow.hpp"

using namespace firstcontact;

TEST_CASE("model kind names round trip") {
  for (auto k : {ModelKind::svc, ModelKind::svr, ModelKind::cnn_classifier, ModelKind::cnn_regressor})
    CHECK(parse_model_kind(model_kind_name(k)) == k);
  CHECK_FALSE(parse_model_kind("random-forest").has_value());
  CHECK(is_classifier(ModelKind::svc));
  CHECK_FALSE(is_classifier(ModelKind::cnn_regressor));
}

TEST_CASE("split is a seeded partition") {
  const auto s = split_indices(100, 0.1, 7);
  CHECK(s.validation.size() == 10);
  CHECK(s.train.size() == 90);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  CHECK(all.size() == 100);
  CHECK(split_indices(100, 0.1, 7).validation == s.validation);
  CHECK(split_indices(100, 0.1, 8).validation != s.validation);
  CHECK(split_indices(5, 0.0, 1).validation.empty());
}

TEST_CASE("corpus windows have the stiffness length and the trace labels") {
  const SynthConfig cfg;
  Rng rng(71);
  const auto traces = make_dataset(cfg, paper_blocks(), 3, rng);
  const auto data = corpus_windows(traces, cfg, WindowSpec{});
  REQUIRE(data.size() == traces.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data.windows[i].size() == 74);
    CHECK(data.shore[i] == traces[i].label.shore_a());
    CHECK(data.source[i] == traces[i].source);
    CHECK(data.trace_id[i] == traces[i].trace_id);
  }
  const auto sub = data.subset({2, 0});
  CHECK(sub.size() == 2);
  CHECK(sub.trace_id[0] == data.trace_id[2]);
}

TEST_CASE("training holds out the validation split and evaluation reports per object") {
  const SynthConfig cfg;
  Rng rng(72);
  const auto traces = make_dataset(cfg, paper_blocks(), 20, rng);
  const auto data = corpus_windows(traces, cfg, WindowSpec{});
  TrainOptions opts;
  opts.seed = 73;
  const auto out = train_stiffness(ModelKind::svc, data, opts);
  CHECK(out.split.validation.size() == 10);
  CHECK(is_classifier(out.model));
  CHECK(input_len(out.model) == 74);

  const auto report = evaluate(out.model, data.subset(out.split.validation), Task::discrimination);
  REQUIRE(report.accuracy.has_value());
  CHECK(*report.accuracy >= 0.9);
  CHECK(report.samples == 10);
  CHECK(report.classes == std::vector<double>{10, 20, 29, 43, 60});
  std::size_t total = 0;
  for (const auto& row : report.confusion)
    for (auto c : row) total += c;
  CHECK(total == 10);

  const auto svr = train_stiffness(ModelKind::svr, data, opts);
  CHECK_THROWS_AS((void)evaluate(svr.model, data, Task::discrimination), std::invalid_argument);
  const auto reg = evaluate(svr.model, data.subset(svr.split.validation), Task::regression);
  REQUIRE(reg.rmse_shore.has_value());
  CHECK(*reg.rmse_shore == doctest::Approx(std::sqrt(*reg.mse_shore)));
  std::size_t n = 0;
  for (const auto& [name, obj] : reg.per_object) n += obj.predictions.size();
  CHECK(n == 10);
}

TEST_CASE("grid option records the search table") {
  const SynthConfig cfg;
  Rng rng(74);
  const auto traces = make_dataset(cfg, paper_blocks(), 8, rng);
  TrainOptions opts;
  opts.grid = true;
  const auto out = train_stiffness(ModelKind::svc, corpus_windows(traces, cfg, WindowSpec{}), opts);
  REQUIRE(out.grid.has_value());
  CHECK(out.grid->table.size() == 9);
}
