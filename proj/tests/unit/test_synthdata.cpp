#include "fedcy/synthdata.hpp"

#include "doctest.h"

#include <cmath>
#include <algorithm>
#include <map>
#include <set>
#include <random>

#include "fedcy/rng.hpp"

using namespace fedcy;
using namespace fedcy::synthdata;
using engine::Array;

namespace {

// Training views carry frames only where labels are off limits.
template <class T>
concept HasLabels = requires(T t) { t.labels; };
static_assert(HasLabels<LabeledTrainingSet>);
static_assert(!HasLabels<UnlabeledTrainingSet>);

bool valid(std::vector<int> labels, const WorkflowModel& w = {}) { return validate_workflow(labels, w); }

double centroid_distance(const ClientProfile& a, const ClientProfile& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.centroids.size(); ++i) s += std::pow(a.centroids[i] - b.centroids[i], 2);
  return std::sqrt(s);
}

double mean_pairwise_distance(const Scenario& sc) {
  std::vector<const ClientProfile*> ps{&sc.labeled.profile};
  for (const auto& c : sc.unlabeled) ps.push_back(&c.profile);
  ps.push_back(&sc.held_out.profile);
  double total = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j) {
      total += centroid_distance(*ps[i], *ps[j]);
      ++pairs;
    }
  return total / pairs;
}

// Softmax regression by full-batch gradient descent; returns test accuracy.
double linear_probe_accuracy(const LabeledTrainingSet& train, const EvaluationSet& test, int classes) {
  const std::size_t d = train.frames.cols(), n = train.frames.rows();
  std::vector<double> w(d * classes, 0.0), b(classes, 0.0);
  const auto scores = [&](std::span<const double> x) {
    std::vector<double> z(classes);
    for (int c = 0; c < classes; ++c) {
      z[c] = b[c];
      for (std::size_t i = 0; i < d; ++i) z[c] += x[i] * w[i * classes + c];
    }
    return z;
  };
  for (int it = 0; it < 300; ++it) {
    std::vector<double> gw(w.size(), 0.0), gb(classes, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      auto z = scores(train.frames.row(r));
      const double mx = *std::max_element(z.begin(), z.end());
      double total = 0.0;
      for (double& v : z) total += (v = std::exp(v - mx));
      for (int c = 0; c < classes; ++c) {
        const double g = z[c] / total - (train.labels[r] == c + 1 ? 1.0 : 0.0);
        gb[c] += g;
        for (std::size_t i = 0; i < d; ++i) gw[i * classes + c] += g * train.frames.at(r, i);
      }
    }
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= 0.5 * gw[i] / n;
    for (int c = 0; c < classes; ++c) b[c] -= 0.5 * gb[c] / n;
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.frames.rows(); ++r) {
    const auto z = scores(test.frames.row(r));
    correct += static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()) + 1 == test.labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(test.frames.rows());
}

std::vector<std::pair<int, std::size_t>> runs_of(const std::vector<int>& labels) {
  std::vector<std::pair<int, std::size_t>> runs;
  for (int l : labels) {
    if (runs.empty() || runs.back().first != l) runs.push_back({l, 0});
    ++runs.back().second;
  }
  return runs;
}

}  // namespace

TEST_CASE("workflow ordering rule") {
  CHECK(valid({1, 1, 2, 3, 4, 5, 6}));
  CHECK_FALSE(valid({1, 3, 2, 4, 5, 6}));
  CHECK(valid({1, 2, 3, 4, 6, 5}));
  CHECK(valid({1, 2, 2, 3, 4, 6, 6, 5, 6}));
  CHECK_FALSE(valid({1, 2, 3, 4, 6, 5, 6, 5}));
  CHECK_FALSE(valid({1, 2, 3, 4, 6, 5, 6, 5, 6}));
  CHECK_FALSE(valid({1, 2, 3, 4, 5, 6, 5}));
  CHECK_FALSE(valid({1, 2, 3, 5, 4, 6}));
  CHECK_FALSE(valid({5, 1, 2, 3, 4, 6}));
  CHECK_FALSE(valid({1, 2, 1, 3, 4, 5, 6}));
  WorkflowModel strict;
  strict.repeatable_phase = 0;
  CHECK_FALSE(valid({1, 2, 3, 4, 6, 5, 6}, strict));
  CHECK_THROWS(valid({}));
  CHECK_THROWS(valid({1, 2, 7}));
  CHECK_THROWS(valid({0, 1}));
}

TEST_CASE("workflow and scenario validation") {
  WorkflowModel w;
  w.mean_durations.pop_back();
  CHECK_THROWS(w.validate());
  w = {};
  w.repeatable_phase = 2;
  CHECK_THROWS(w.validate());
  ScenarioConfig c;
  c.labeled_videos.validation = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("invalid split"), std::invalid_argument);
  c = {};
  c.unlabeled_videos.train = -1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("invalid split"), std::invalid_argument);
  c = {};
  c.num_unlabeled = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.unlabeled_duration_scales = {1.0};
  CHECK_THROWS(c.validate());
}

TEST_CASE("noise-free, drift-free frames sit on their centroid") {
  ScenarioConfig c;
  c.noise_sigma = 0.0;
  c.drift = 0.0;
  const ClientProfile ref = reference_profile(c, 3);
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const SyntheticVideo v = generate_video(ref, c.workflow, rng);
    CHECK(v.labels.size() == v.frames.rows());
    for (std::size_t r = 0; r < v.frames.rows(); ++r) {
      const auto row = v.frames.row(r);
      const auto centroid = ref.centroids.row(static_cast<std::size_t>(v.labels[r] - 1));
      for (std::size_t i = 0; i < row.size(); ++i) CHECK(row[i] == centroid[i]);
    }
  }
}

TEST_CASE("generated videos follow the workflow and contain every phase") {
  ScenarioConfig c;
  c.workflow.repeat_probability = 0.5;
  const Scenario sc = generate_scenario(c, 11);
  int repeats = 0;
  std::vector<const ClientDataset*> all{&sc.labeled, &sc.held_out};
  for (const auto& u : sc.unlabeled) all.push_back(&u);
  for (const auto* client : all) {
    for (const auto& v : client->videos) {
      CHECK(validate_workflow(v.labels, c.workflow));
      CHECK(v.labels.size() >= static_cast<std::size_t>(c.workflow.num_phases));
      std::map<int, int> runs;
      for (const auto& [phase, len] : runs_of(v.labels)) runs[phase]++;
      CHECK(runs.size() == static_cast<std::size_t>(c.workflow.num_phases));
      repeats += runs[6] == 2;
    }
  }
  CHECK(repeats > 0);
}

TEST_CASE("mean run duration matches the profile within 3 standard errors") {
  ScenarioConfig c;
  const ClientProfile ref = reference_profile(c, 5);
  ClientProfile slow = ref;
  slow.duration_scale = 1.7;
  for (const ClientProfile* profile : std::vector<const ClientProfile*>{&ref, &slow}) {
    Rng rng(9);
    std::map<int, std::vector<double>> lengths;
    for (int t = 0; t < 1000; ++t) {
      for (const auto& [phase, len] : runs_of(generate_video(*profile, c.workflow, rng).labels))
        lengths[phase].push_back(static_cast<double>(len));
    }
    for (int p = 1; p <= c.workflow.num_phases; ++p) {
      const auto& xs = lengths[p];
      double mean = 0.0, var = 0.0;
      for (double x : xs) mean += x;
      mean /= xs.size();
      for (double x : xs) var += (x - mean) * (x - mean);
      const double se = std::sqrt(var / (xs.size() - 1) / xs.size());
      CAPTURE(p);
      CHECK(std::abs(mean - profile->expected_duration(c.workflow, p)) < 3.0 * se);
    }
  }
}

TEST_CASE("scenario layout, splits and ids") {
  const ScenarioConfig c;
  const Scenario sc = generate_scenario(c, 21);
  CHECK(sc.labeled.id() == "labeled");
  CHECK(sc.labeled.role() == Role::labeled);
  CHECK(sc.unlabeled.size() == 4);
  CHECK(sc.held_out.role() == Role::held_out);
  const auto count = [](const ClientDataset& d, Split s) {
    return std::count_if(d.videos.begin(), d.videos.end(), [&](const auto& v) { return v.split == s; });
  };
  CHECK(count(sc.labeled, Split::train) == 12);
  CHECK(count(sc.labeled, Split::validation) == 3);
  CHECK(count(sc.labeled, Split::test) == 6);
  for (const auto& u : sc.unlabeled) {
    CHECK(u.role() == Role::unlabeled);
    CHECK(count(u, Split::train) == 6);
    CHECK(count(u, Split::test) == 3);
  }
  CHECK(count(sc.held_out, Split::train) == 0);
  CHECK(count(sc.held_out, Split::test) == 6);
  CHECK(sc.labeled.videos.front().id == sc.labeled.id() + "/v0");
  std::set<std::uint64_t> seeds{sc.labeled.generation_seed, sc.held_out.generation_seed};
  for (const auto& u : sc.unlabeled) seeds.insert(u.generation_seed);
  CHECK(seeds.size() == 6);
}

TEST_CASE("views") {
  const Scenario sc = generate_scenario(ScenarioConfig{}, 22);
  const auto lab = labeled_view(sc.labeled, Split::train);
  CHECK(lab.labels.size() == lab.frames.rows());
  CHECK(lab.frames.rows() == sc.labeled.frame_count(Split::train));
  const auto un = unlabeled_view(sc.unlabeled[1], Split::train);
  CHECK(un.client_id == sc.unlabeled[1].id());
  CHECK(un.videos.size() == 6);
  CHECK(un.frame_count() == sc.unlabeled[1].frame_count(Split::train));
  const auto ev = evaluation_view(sc.unlabeled[1], Split::test);
  CHECK(ev.role == Role::unlabeled);
  CHECK(ev.labels.size() == ev.frames.rows());
  CHECK_THROWS(evaluation_view(sc.held_out, Split::train));
}

TEST_CASE("same master seed, same scenario; different seed, different data") {
  const ScenarioConfig c;
  const Scenario a = generate_scenario(c, 31), b = generate_scenario(c, 31), d = generate_scenario(c, 32);
  CHECK(client_to_json(a.labeled).dump() == client_to_json(b.labeled).dump());
  for (std::size_t i = 0; i < a.unlabeled.size(); ++i)
    CHECK(client_to_json(a.unlabeled[i]).dump() == client_to_json(b.unlabeled[i]).dump());
  CHECK(client_to_json(a.held_out).dump() == client_to_json(b.held_out).dump());
  CHECK(client_to_json(a.labeled).dump() != client_to_json(d.labeled).dump());
}

TEST_CASE("zero heterogeneity reproduces the reference for every client") {
  ScenarioConfig c;
  c.heterogeneity = 0.0;
  const Scenario sc = generate_scenario(c, 41);
  std::vector<const ClientProfile*> ps{&sc.labeled.profile, &sc.held_out.profile};
  for (const auto& u : sc.unlabeled) ps.push_back(&u.profile);
  for (const auto* p : ps) {
    CHECK(p->centroids == sc.reference.centroids);
    CHECK(p->drift_directions == sc.reference.drift_directions);
    CHECK(p->duration_scale == 1.0);
    for (double v : p->shift.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("client profiles are reproducible and the labeled client is the reference") {
  const ScenarioConfig c;
  const ClientProfile ref = reference_profile(c, 50);
  const auto a = client_profile(c, ref, "unlabeled_2", Role::unlabeled, derive_seed(50, {stream::kClient, 2}), 1);
  const auto b = client_profile(c, ref, "unlabeled_2", Role::unlabeled, derive_seed(50, {stream::kClient, 2}), 1);
  CHECK(a.centroids == b.centroids);
  const Scenario sc = generate_scenario(c, 50);
  CHECK(sc.labeled.profile.centroids == sc.reference.centroids);
  CHECK_FALSE(sc.unlabeled[0].profile.centroids == sc.reference.centroids);
}

TEST_CASE("client offsets lie in the shared shift subspace") {
  ScenarioConfig c;
  c.phase_shift_scale = 0.0;
  const Scenario sc = generate_scenario(c, 60);
  const Array& basis = sc.reference.shift_basis;
  REQUIRE(basis.rows() == c.shift_rank);
  for (const auto& u : sc.unlabeled) {
    // Residual of the shift after projecting onto the basis rows.
    std::vector<double> residual(u.profile.shift.values());
    for (std::size_t r = 0; r < basis.rows(); ++r) {
      double coef = 0.0;
      for (std::size_t i = 0; i < residual.size(); ++i) coef += u.profile.shift[i] * basis.at(r, i);
      for (std::size_t i = 0; i < residual.size(); ++i) residual[i] -= coef * basis.at(r, i);
    }
    double norm = 0.0;
    for (double v : residual) norm += v * v;
    CHECK(std::sqrt(norm) < 1e-9);
  }
}

TEST_CASE("mean centroid distance grows with the heterogeneity knob") {
  double previous = -1.0;
  for (double h : {0.1, 0.25, 0.5, 0.75, 1.0}) {
    ScenarioConfig c;
    c.heterogeneity = h;
    const double dist = mean_pairwise_distance(generate_scenario(c, 70));
    CAPTURE(h);
    CHECK(dist > previous);
    previous = dist;
  }
}

TEST_CASE("explicit unlabeled duration scales are honoured") {
  ScenarioConfig c;
  c.heterogeneity = 0.0;
  c.num_unlabeled = 2;
  c.unlabeled_duration_scales = {1.0, 2.0};
  const Scenario sc = generate_scenario(c, 80);
  CHECK(sc.unlabeled[0].profile.duration_scale == 1.0);
  CHECK(sc.unlabeled[1].profile.duration_scale == 2.0);
  CHECK(sc.unlabeled[1].frame_count(Split::train) > sc.unlabeled[0].frame_count(Split::train));
}

TEST_CASE("a linear probe separates reference phases at noise 0.1") {
  ScenarioConfig c;
  c.noise_sigma = 0.1;
  c.centroid_spacing = 1.0;
  const Scenario sc = generate_scenario(c, 90);
  const double acc = linear_probe_accuracy(labeled_view(sc.labeled, Split::train),
                                           evaluation_view(sc.labeled, Split::test), c.workflow.num_phases);
  CHECK(acc > 0.9);
}

TEST_CASE("client dataset documents round-trip") {
  const Scenario sc = generate_scenario(ScenarioConfig{}, 100);
  const auto j = client_to_json(sc.unlabeled[2]);
  const ClientDataset back = client_from_json(j);
  CHECK(client_to_json(back).dump() == j.dump());
  CHECK(back.profile.shift_basis == sc.unlabeled[2].profile.shift_basis);
  CHECK(back.videos[0].frames == sc.unlabeled[2].videos[0].frames);
  auto wrong = j;
  wrong["kind"] = "fedcy.checkpoint";
  CHECK_THROWS(client_from_json(wrong));
  CHECK(to_json(workflow_from_json(to_json(WorkflowModel{}))) == to_json(WorkflowModel{}));
}

TEST_CASE("role and split names round-trip") {
  for (auto r : {Role::labeled, Role::unlabeled, Role::held_out}) CHECK(role_from_string(to_string(r)) == r);
  for (auto s : {Split::train, Split::validation, Split::test}) CHECK(split_from_string(to_string(s)) == s);
  CHECK_THROWS(role_from_string("observer"));
  CHECK_THROWS(split_from_string("dev"));
}
