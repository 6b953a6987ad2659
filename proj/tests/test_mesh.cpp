#include <doctest.h>

#include <cmath>
#include <limits>

#include "reorient/errors.hpp"
#include "reorient/mesh.hpp"
#include "reorient/oracle.hpp"
#include "reorient/transcription.hpp"

using namespace reorient;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Decision vector whose nodes lie on the exact flow under a constant torque.
Eigen::VectorXd exact_flow_point(const CollocationProblem& p, double tf) {
  const auto& model = p.maneuver().model;
  const Control u{0.3, -0.5, 0.2};
  const ControlPolicy hold{[u](double, const State&) { return u; }, {}};
  const State y0 = p.maneuver().bc.initial;
  return p.initial_point(
      [&](double t) {
        if (t <= 0.0) return GuessSample{y0, u};
        return GuessSample{integrate(model, y0, hold, 0.0, t).points.back().y, u};
      },
      {tf});
}

ErrorEstimate single(std::vector<double> errors) {
  ErrorEstimate e;
  e.per_interval = {errors};
  for (double v : errors) e.max_error = std::max(e.max_error, v);
  return e;
}

}  // namespace

TEST_CASE("mesh construction and validation") {
  const Mesh m = Mesh::uniform(4, 5);
  CHECK(m.num_domains() == 1);
  CHECK(m.total_intervals() == 4);
  CHECK(m.total_points() == 20);
  CHECK(m.domains[0].breaks[2] == 0.5);
  const Mesh pd = Mesh::per_domain(3, 2, 3);
  CHECK(pd.num_domains() == 3);
  CHECK(pd.total_points() == 18);
  CHECK_THROWS_AS(Mesh::uniform(0, 3), Error);
  CHECK_THROWS_AS(Mesh::uniform(2, 2), Error);
  CHECK_THROWS_AS(Mesh::uniform(2, 13), Error);
  Mesh bad = Mesh::uniform(3, 3);
  bad.domains[0].breaks[1] = bad.domains[0].breaks[2];
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("a resting body has zero discretization error") {
  Maneuver m = builtin_maneuver("RTR");
  m.bc.initial = State{};
  const CollocationProblem p = transcribe(m, Mesh::uniform(3, 4));
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p.num_variables());
  x[p.duration_index(0)] = 2.0;
  const ErrorEstimate e = estimate_error(p, x);
  CHECK(e.max_error == 0.0);
  REQUIRE(e.per_interval.size() == 1);
  CHECK(e.per_interval[0].size() == 3);
}

TEST_CASE("error on the exact flow decays with the point count") {
  const Maneuver m = builtin_maneuver("RTR");
  double previous = 1.0;
  for (int n : {3, 5, 7, 9}) {
    const CollocationProblem p = transcribe(m, Mesh::uniform(2, n));
    const double e = estimate_error(p, exact_flow_point(p, 2.5)).max_error;
    INFO("points " << n << " error " << e);
    CHECK(e < 0.2 * previous);
    previous = e;
  }
  CHECK(previous < 1e-4);
}

TEST_CASE("a coarse mesh over the whole maneuver is over tolerance") {
  const Maneuver m = builtin_maneuver("RTR");
  const CollocationProblem p = transcribe(m, Mesh::uniform(1, 3));
  CHECK(estimate_error(p, exact_flow_point(p, 2.5)).max_error > 1e-5);
}

TEST_CASE("intervals under tolerance are left alone") {
  const Mesh m = Mesh::uniform(3, 4);
  const Mesh r = refine(m, single({1e-7, 5e-6, 0.0}));
  CHECK(r.domains[0].breaks == m.domains[0].breaks);
  CHECK(r.domains[0].points == m.domains[0].points);
}

TEST_CASE("first refinement raises the point count") {
  const Mesh m = Mesh::uniform(2, 3);
  const Mesh r = refine(m, single({1e-3, 1e-7}));
  // ceil(log(1e-3 / 1e-5) / log(3)) = 5
  CHECK(r.domains[0].points == std::vector<int>{8, 3});
  CHECK(r.domains[0].breaks == m.domains[0].breaks);
  CHECK(r.domains[0].last_error[0] == 1e-3);
  CHECK(std::isnan(r.domains[0].last_error[1]));
}

TEST_CASE("stalled or saturated intervals are split") {
  Mesh m = Mesh::uniform(2, 5);
  m.domains[0].last_error = {1e-4, kNan};
  // Interval 0 only went from 1e-4 to 5e-5 after its last raise.
  const Mesh r = refine(m, single({5e-5, 1.0}));
  // Interval 1 would need ceil(log(1e5) / log(5)) = 8 more points, past 12.
  CHECK(r.domains[0].points == std::vector<int>{3, 3, 3, 3});
  CHECK(r.domains[0].breaks == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  m.domains[0].last_error = {1e-2, kNan};
  const Mesh decayed = refine(m, single({4e-5, 0.0}));
  CHECK(decayed.domains[0].points == std::vector<int>{6, 5});
}

TEST_CASE("domain boundaries never move") {
  const Mesh m = Mesh::per_domain(2, 2, 3);
  ErrorEstimate e;
  e.per_interval = {{1.0, 1e-9}, {1e-9, 1.0}};
  const Mesh r = refine(m, e);
  CHECK(r.num_domains() == 2);
  for (const auto& d : r.domains) {
    CHECK(d.breaks.front() == 0.0);
    CHECK(d.breaks.back() == 1.0);
  }
  ErrorEstimate wrong;
  wrong.per_interval = {{1.0}};
  CHECK_THROWS_AS(refine(m, wrong), Error);
}
