#pragma once

// Cone programs with a known optimum: pick x*, a slack s* in K and a dual
// y* in K* with s*'y* = 0, then set b = A x* + s* and c = -A'y*. The pair
// satisfies the KKT conditions, so c'x* is the optimal value. The first n
// orthant rows are active with positive multipliers and dense, so x* is
// also the unique minimizer.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "scmpc/cone_program.hpp"

namespace scmpc::testing {

struct PlantedProgram {
  ConicProgram program;
  Eigen::VectorXd x;
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double optimum = 0.0;
};

struct PlantedShape {
  int n = 5;
  int orthant = 8;   // the first n rows are active
  int soc = 4;       // sizes cycle through 3..6
  int rotated = 4;   // sizes cycle through 3..5
  double density = 0.5;
};

inline PlantedProgram make_planted(std::mt19937_64& g, const PlantedShape& shape) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.1, 2.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int n = shape.n;

  PlantedProgram out;
  out.x.resize(n);
  for (int i = 0; i < n; ++i) out.x(i) = normal(g);
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> b;
  std::vector<double> s;
  std::vector<double> y;
  auto add_row = [&](double sv, double yv, bool dense = false) {
    const int r = static_cast<int>(b.size());
    double ax = 0.0;
    for (int j = 0; j < n; ++j) {
      if (dense || coin(g) < shape.density) {
        const double a = normal(g);
        trips.emplace_back(r, j, a);
        ax += a * out.x(j);
      }
    }
    b.push_back(ax + sv);
    s.push_back(sv);
    y.push_back(yv);
  };
  auto boundary_pair = [&](int size, Eigen::VectorXd& sp, Eigen::VectorXd& yp) {
    Eigen::VectorXd u(size - 1);
    for (auto& v : u) v = normal(g);
    u.normalize();
    const double a = pos(g);
    const double c = pos(g);
    sp.resize(size);
    yp.resize(size);
    sp(0) = a;
    yp(0) = c;
    sp.tail(size - 1) = a * u;
    yp.tail(size - 1) = -c * u;
  };

  auto& p = out.program;
  for (int i = 0; i < shape.orthant; ++i) {
    const bool active = i < n;
    add_row(active ? 0.0 : pos(g), active ? pos(g) : 0.0, active);
  }
  if (shape.orthant > 0) p.cones.push_back({ConeKind::kNonnegative, shape.orthant});
  for (int k = 0; k < shape.soc; ++k) {
    const int size = 3 + k % 4;
    Eigen::VectorXd sp, yp;
    boundary_pair(size, sp, yp);
    for (int i = 0; i < size; ++i) add_row(sp(i), yp(i));
    p.cones.push_back({ConeKind::kSecondOrder, size});
  }
  for (int k = 0; k < shape.rotated; ++k) {
    const int size = 3 + k % 3;
    Eigen::VectorXd sp, yp;
    boundary_pair(size, sp, yp);
    // [1 1; 1 -1]/sqrt(2) maps the second-order cone onto the rotated one.
    const double r = 1.0 / std::sqrt(2.0);
    for (Eigen::VectorXd* v : {&sp, &yp}) {
      const double a = (*v)(0);
      const double c = (*v)(1);
      (*v)(0) = (a + c) * r;
      (*v)(1) = (a - c) * r;
    }
    for (int i = 0; i < size; ++i) add_row(sp(i), yp(i));
    p.cones.push_back({ConeKind::kRotatedSecondOrder, size});
  }
  const int m = static_cast<int>(b.size());
  p.A.resize(m, n);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.A.makeCompressed();
  p.b = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
  out.s = Eigen::Map<const Eigen::VectorXd>(s.data(), m);
  out.y = Eigen::Map<const Eigen::VectorXd>(y.data(), m);
  p.c = -(p.A.transpose() * out.y);
  out.optimum = p.c.dot(out.x);
  return out;
}

}  // namespace scmpc::testing
