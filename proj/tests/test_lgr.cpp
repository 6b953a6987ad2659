#include <doctest.h>

#include <cmath>

#include "reorient/errors.hpp"
#include "reorient/lgr.hpp"

using namespace reorient;

namespace {

double monomial_integral(int k) { return k % 2 == 0 ? 2.0 / (k + 1) : 0.0; }

}  // namespace

TEST_CASE("small Radau rules") {
  const LgrRule one = lgr_points_weights(1);
  CHECK(one.points[0] == -1.0);
  CHECK(one.weights[0] == doctest::Approx(2.0).epsilon(1e-15));

  const LgrRule two = lgr_points_weights(2);
  CHECK(two.points[0] == -1.0);
  CHECK(two.points[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(two.weights[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(two.weights[1] == doctest::Approx(1.5).epsilon(1e-14));

  const LgrRule five = lgr_points_weights(5);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += five.weights[i] * std::pow(five.points[i], 8);
  CHECK(std::abs(s - 2.0 / 9.0) < 1e-13);
}

TEST_CASE("points are the roots of P[n-1] + P[n]") {
  for (int n = 2; n <= kMaxLgrPoints; ++n) {
    const LgrRule r = lgr_points_weights(n);
    for (int i = 0; i < n; ++i) {
      const double x = r.points[i];
      CHECK(std::abs(std::legendre(n - 1, x) + std::legendre(n, x)) < 1e-12);
      if (i > 0) CHECK(x > r.points[i - 1]);
    }
    CHECK(r.points[n - 1] < 1.0);
  }
}

TEST_CASE("quadrature is exact up to degree 2n-2") {
  for (int n = 1; n <= kMaxLgrPoints; ++n) {
    const LgrRule r = lgr_points_weights(n);
    for (int k = 0; k <= 2 * n - 2; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.points[i], k);
      INFO("n = " << n << ", degree " << k);
      CHECK(std::abs(s - monomial_integral(k)) < 1e-12);
    }
  }
}

TEST_CASE("differentiation is exact up to degree n") {
  for (int n = 1; n <= kMaxLgrPoints; ++n) {
    const LgrRule r = lgr_points_weights(n);
    const Eigen::VectorXd support = r.support_points();
    const Eigen::MatrixXd d = differentiation_matrix(support);
    REQUIRE(d.rows() == n);
    REQUIRE(d.cols() == n + 1);
    for (int k = 0; k <= n; ++k) {
      Eigen::VectorXd values(n + 1);
      for (int i = 0; i <= n; ++i) values[i] = std::pow(support[i], k);
      const Eigen::VectorXd dv = d * values;
      for (int i = 0; i < n; ++i) {
        const double exact = k == 0 ? 0.0 : k * std::pow(r.points[i], k - 1);
        INFO("n = " << n << ", degree " << k << ", point " << i);
        CHECK(std::abs(dv[i] - exact) < 1e-10);
      }
    }
  }
}

TEST_CASE("differentiation examples") {
  const LgrRule two = lgr_points_weights(2);
  const Eigen::MatrixXd d2 = differentiation_matrix(two.support_points());
  CHECK((d2 * Eigen::VectorXd::Constant(3, 4.2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d2 * two.support_points() - Eigen::VectorXd::Ones(2)).cwiseAbs().maxCoeff() < 1e-14);

  const LgrRule four = lgr_points_weights(4);
  const Eigen::VectorXd s = four.support_points();
  const Eigen::VectorXd cubes = s.array().cube();
  const Eigen::VectorXd dv = differentiation_matrix(s) * cubes;
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(dv[i] - 3.0 * four.points[i] * four.points[i]) < 1e-12);
  }
}

TEST_CASE("integration matrix integrates the interpolant") {
  const LgrRule r = lgr_points_weights(5);
  const Eigen::VectorXd eval = Eigen::VectorXd::LinSpaced(7, -0.9, 1.0);
  const Eigen::MatrixXd integ = integration_matrix(r.points, eval);
  // x^4 is interpolated exactly by five points.
  const Eigen::VectorXd values = r.points.array().pow(4);
  const Eigen::VectorXd got = integ * values;
  for (int k = 0; k < eval.size(); ++k) {
    const double exact = (std::pow(eval[k], 5) + 1.0) / 5.0;
    CHECK(std::abs(got[k] - exact) < 1e-13);
  }
}

TEST_CASE("Lagrange basis is a partition of unity and interpolates") {
  const Eigen::VectorXd nodes = lgr_points_weights(6).support_points();
  for (double t : {-1.0, -0.3, 0.2, 0.77, 1.0}) {
    const Eigen::VectorXd b = lagrange_basis(nodes, t);
    CHECK(std::abs(b.sum() - 1.0) < 1e-13);
    CHECK(std::abs(b.dot(nodes.array().pow(3).matrix()) - t * t * t) < 1e-13);
  }
  const Eigen::VectorXd at_node = lagrange_basis(nodes, nodes[2]);
  CHECK(at_node[2] == doctest::Approx(1.0));
  CHECK(std::abs(at_node.sum() - 1.0) < 1e-15);
}

TEST_CASE("Gauss-Legendre rule and Legendre values") {
  for (int n = 1; n <= 12; ++n) {
    const LgrRule g = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.points[i], k);
      CHECK(std::abs(s - monomial_integral(k)) < 1e-12);
    }
  }
  for (int n = 0; n <= 12; ++n) {
    for (double x : {-1.0, -0.4, 0.0, 0.6, 1.0}) {
      CHECK(legendre(n, x) == doctest::Approx(std::legendre(n, x)).epsilon(1e-13));
    }
  }
}

TEST_CASE("rule size is range checked") {
  CHECK_THROWS_AS(lgr_points_weights(0), Error);
  CHECK_THROWS_AS(lgr_points_weights(13), Error);
}
