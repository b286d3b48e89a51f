// Copyright 2026 The DFL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dfl/qp_layer.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"

namespace dfl {
namespace {

QpProblem box_problem(const Eigen::VectorXd& theta, double gamma) {
  QpProblem prob;
  prob.theta = theta;
  prob.gamma = gamma;
  prob.A.resize(0, theta.size());
  prob.b.resize(0);
  unit_box(theta.size(), prob.G, prob.h);
  return prob;
}

TEST(ReduceRows, DropsScaledDuplicate) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 2, 2;
  const RowReduction r = reduce_rows(a, Eigen::Vector2d(1, 2));
  ASSERT_EQ(r.A.rows(), 1);
  EXPECT_EQ(r.A(0, 0), 1.0);
  EXPECT_EQ(r.A(0, 1), 1.0);
  EXPECT_EQ(r.b(0), 1.0);
}

TEST(ReduceRows, FullRankUnchanged) {
  Eigen::MatrixXd a(2, 3);
  a << 1, 0, 2, 0, 1, -1;
  const Eigen::Vector2d b(0.3, -4.0);
  const RowReduction r = reduce_rows(a, b);
  EXPECT_EQ(r.A, a);
  EXPECT_EQ(r.b, b);
}

TEST(ReduceRows, InconsistentDuplicateThrows) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 2, 2;
  EXPECT_THROW(reduce_rows(a, Eigen::Vector2d(1, 3)), InfeasibleRows);
}

TEST(ReduceRows, CombinationOfTwoRows) {
  Eigen::MatrixXd a(3, 3);
  a << 1, 0, 0, 0, 1, 0, 2, -3, 0;
  const RowReduction r = reduce_rows(a, Eigen::Vector3d(1, 1, -1));
  EXPECT_EQ(r.A.rows(), 2);
  EXPECT_THROW(reduce_rows(a, Eigen::Vector3d(1, 1, 0)), InfeasibleRows);
}

TEST(SolveQp, CoordinatewiseClipOnBox) {
  const LayerSolution s = solve_qp(box_problem(Eigen::Vector2d(1, -1), 0.5));
  EXPECT_NEAR(s.x(0), 1.0, 1e-9);
  EXPECT_NEAR(s.x(1), 0.0, 1e-9);
}

TEST(SolveQp, InteriorAndBoundary) {
  const LayerSolution s = solve_qp(box_problem(Eigen::Vector2d(0.5, -0.5), 0.5));
  EXPECT_NEAR(s.x(0), 0.5, 1e-9);
  EXPECT_NEAR(s.x(1), 0.0, 1e-9);
}

TEST(SolveQp, RequiresPositiveGamma) {
  EXPECT_THROW(solve_qp(box_problem(Eigen::Vector2d(1, 1), 0.0)), DomainError);
}

TEST(SolveQp, EmptyRegionIsInfeasible) {
  QpProblem prob;
  prob.theta = Eigen::VectorXd::Ones(1);
  prob.gamma = 0.1;
  prob.A.resize(0, 1);
  prob.b.resize(0);
  prob.G.resize(2, 1);
  prob.G << 1, -1;
  prob.h = Eigen::Vector2d(-1, 0);  // x <= -1 and x >= 0
  EXPECT_THROW(solve_qp(prob), Infeasible);
}

TEST(SolveQp, InconsistentEqualitiesAreInfeasible) {
  QpProblem prob = box_problem(Eigen::Vector2d(1, 1), 0.1);
  prob.A.resize(2, 2);
  prob.A << 1, 1, 2, 2;
  prob.b = Eigen::Vector2d(1, 3);
  EXPECT_THROW(solve_qp(prob), Infeasible);
}

TEST(SolveQp, MatchesActiveSetOracleOnRandomBoxes) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const QpProblem prob = oracle::random_box_qp(rng, 5, 0.1, trial % 3, trial % 2 == 0);
    const LayerSolution s = solve_qp(prob);
    const Eigen::VectorXd ref = oracle::qp_by_active_sets(prob);
    EXPECT_LE((s.x - ref).lpNorm<Eigen::Infinity>(), 1e-6) << "trial " << trial;
  }
}

TEST(SolveQp, KktInvariantsHold) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const QpProblem prob = oracle::random_box_qp(rng, 3 + trial % 8, 0.05 + 0.1 * (trial % 4), 2, trial % 3 == 0);
    for (bool polish : {true, false}) {
      QpSolverOptions opts;
      opts.polish = polish;
      const LayerSolution s = solve_qp(prob, opts);
      EXPECT_LE(kkt_residuals(prob, s).max(), 1e-6) << "trial " << trial << " polish " << polish;
      EXPECT_GE(s.lambda.minCoeff(), 0.0);
    }
  }
}

TEST(SolveQp, SmallerPenaltyNeverHurtsLinearObjective) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    QpProblem prob = oracle::random_box_qp(rng, 6, 0.01, 2, false);
    double previous = std::numeric_limits<double>::infinity();
    for (double gamma : {0.01, 0.05, 0.1, 0.5, 1.0, 5.0}) {
      prob.gamma = gamma;
      const double lin = prob.theta.dot(solve_qp(prob).x);
      EXPECT_LE(lin, previous + 1e-9);
      previous = lin;
    }
  }
}

TEST(SolveQp, InvariantToRowPermutationAndDependentEquality) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const QpProblem prob = oracle::random_box_qp(rng, 5, 0.1, 2, true);
    const Eigen::VectorXd base = solve_qp(prob).x;

    QpProblem permuted = prob;
    std::vector<int> order(static_cast<std::size_t>(prob.G.rows()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
      permuted.G.row(static_cast<Eigen::Index>(i)) = prob.G.row(order[i]);
      permuted.h(static_cast<Eigen::Index>(i)) = prob.h(order[i]);
    }
    EXPECT_LE((solve_qp(permuted).x - base).lpNorm<Eigen::Infinity>(), 1e-8);

    QpProblem dup = prob;
    dup.A.conservativeResize(2, Eigen::NoChange);
    dup.b.conservativeResize(2);
    dup.A.row(1) = -3.0 * prob.A.row(0);
    dup.b(1) = -3.0 * prob.b(0);
    const LayerSolution s = solve_qp(dup);
    EXPECT_LE((s.x - base).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_EQ(s.nu.size(), 2);
    EXPECT_EQ(s.nu(1), 0.0);
  }
}

TEST(BackwardQp, ZeroUpstreamGivesZero) {
  const QpProblem prob = box_problem(Eigen::Vector2d(0.5, -0.5), 0.5);
  const LayerSolution s = solve_qp(prob);
  EXPECT_TRUE(backward_qp(prob, s, Eigen::Vector2d::Zero()).isZero(0.0));
}

TEST(BackwardQp, InteriorAndActiveBoundSensitivities) {
  const QpProblem prob = box_problem(Eigen::Vector2d(0.5, -0.5), 0.5);
  const LayerSolution s = solve_qp(prob);
  const Eigen::MatrixXd jac = qp_jacobian(prob, s);
  const Eigen::MatrixXd fd = oracle::fd_jacobian(
      [&](const Eigen::VectorXd& t) {
        QpProblem q = prob;
        q.theta = t;
        return solve_qp(q).x;
      },
      prob.theta, 1e-5);
  EXPECT_NEAR(fd(0, 0), 1.0, 1e-7);
  EXPECT_NEAR(fd(1, 1), 0.0, 1e-7);
  EXPECT_NEAR(jac(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(jac(1, 1), 0.0, 1e-9);
  EXPECT_NEAR(backward_qp(prob, s, Eigen::Vector2d(1, 0))(0), 1.0, 1e-9);
}

TEST(BackwardQp, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const QpProblem prob = oracle::random_box_qp(rng, n, 0.1, trial % 4, trial % 2 == 1);
    const LayerSolution s = solve_qp(prob);
    const Eigen::MatrixXd jac = qp_jacobian(prob, s);
    const Eigen::MatrixXd fd = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& t) {
          QpProblem q = prob;
          q.theta = t;
          return solve_qp(q).x;
        },
        prob.theta, 1e-5);
    EXPECT_LE(oracle::rel_error(jac, fd), 1e-3) << "trial " << trial;

    // The adjoint route agrees with the forward Jacobian.
    Eigen::VectorXd up(n);
    for (Eigen::Index i = 0; i < n; ++i) up(i) = std::sin(1.0 + static_cast<double>(i * (trial + 1)));
    EXPECT_LE((backward_qp(prob, s, up) - jac.transpose() * up).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(BackwardQp, DegenerateMatchingVertexUsesDampedSolve) {
  // Row-degree, column-degree and box constraints all active at x = I.
  QpProblem prob;
  prob.gamma = 0.01;
  prob.theta = Eigen::Vector4d(1, 0, 0, 1);
  prob.A.resize(0, 4);
  prob.b.resize(0);
  Eigen::MatrixXd box_g;
  Eigen::VectorXd box_h;
  unit_box(4, box_g, box_h);
  prob.G.resize(12, 4);
  prob.G << 1, 1, 0, 0,  //
      0, 0, 1, 1,        //
      1, 0, 1, 0,        //
      0, 1, 0, 1,        //
      box_g;
  prob.h.resize(12);
  prob.h << 1, 1, 1, 1, box_h;
  const LayerSolution s = solve_qp(prob);
  EXPECT_NEAR(s.x(0), 1.0, 1e-8);
  KktSolveStats stats;
  const Eigen::VectorXd g = backward_qp(prob, s, Eigen::Vector4d(1, 0, 0, 1), &stats);
  EXPECT_TRUE(g.allFinite());
  EXPECT_LE(g.lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(SolveIntegral, MatchingExamples) {
  QpProblem prob;
  prob.theta = Eigen::Vector4d(1, 0, 0, 1);
  Eigen::VectorXd x = solve_integral(prob, IntegralStructure::BipartiteMatching);
  EXPECT_EQ(x, Eigen::Vector4d(1, 0, 0, 1));
  prob.theta = Eigen::Vector4d(1, 2, 3, 0);
  x = solve_integral(prob, IntegralStructure::BipartiteMatching);
  EXPECT_EQ(x, Eigen::Vector4d(0, 1, 1, 0));
  EXPECT_EQ(prob.theta.dot(x), 5.0);
}

TEST(SolveIntegral, MatchingAgreesWithPermutationOracle) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-0.5, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index s = 1 + trial % 6;
    Eigen::MatrixXd w(s, s);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    QpProblem prob;
    prob.theta = Eigen::Map<const Eigen::VectorXd>(Eigen::MatrixXd(w.transpose()).data(), s * s);
    const Eigen::VectorXd x = solve_integral(prob, IntegralStructure::BipartiteMatching);
    EXPECT_NEAR(prob.theta.dot(x), oracle::matching_by_permutations(w), 1e-12);
  }
}

TEST(SolveIntegral, TopK) {
  QpProblem prob = box_problem(Eigen::Vector3d(3, 1, 2), 0.1);
  prob.G.conservativeResize(7, Eigen::NoChange);
  prob.G.row(6).setOnes();
  prob.h.conservativeResize(7);
  prob.h(6) = 2;
  const Eigen::VectorXd x = solve_integral(prob, IntegralStructure::TopK);
  EXPECT_EQ(x, Eigen::Vector3d(1, 0, 1));
  EXPECT_EQ(prob.theta.dot(x), 5.0);
  EXPECT_THROW(solve_integral(box_problem(Eigen::Vector3d(1, 2, 3), 0.1), IntegralStructure::TopK),
               UnsupportedStructure);
}

TEST(SolveIntegral, GenericLpMatchesVertexEnumeration) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    QpProblem prob = oracle::random_box_qp(rng, n, 0.1, 0, false);
    const LpSolution lp = solve_lp(prob.theta, prob.A, prob.b, prob.G, prob.h);
    EXPECT_NEAR(lp.objective, prob.theta.cwiseMax(0.0).sum(), 1e-12);
    EXPECT_EQ(solve_integral(prob, IntegralStructure::GenericLp), (prob.theta.array() > 0).cast<double>().matrix());

    QpProblem cut = oracle::random_box_qp(rng, n, 0.1, 2, false);
    const LpSolution lp2 = solve_lp(cut.theta, cut.A, cut.b, cut.G, cut.h);
    EXPECT_NEAR(lp2.objective, oracle::lp_by_vertices(cut.theta, cut.G, cut.h), 1e-9);
  }
}

TEST(SolveIntegral, FractionalVertexIsUnsupported) {
  // x1 + x2 <= 1.5 with theta > 0 has the fractional optimum (1, 0.5).
  QpProblem prob = box_problem(Eigen::Vector2d(2, 1), 0.1);
  prob.G.conservativeResize(5, Eigen::NoChange);
  prob.G.row(4) << 1, 1;
  prob.h.conservativeResize(5);
  prob.h(4) = 1.5;
  EXPECT_THROW(solve_integral(prob, IntegralStructure::GenericLp), UnsupportedStructure);
}

TEST(LpSolver, DetectsInfeasibleAndUnbounded) {
  Eigen::MatrixXd g(2, 1);
  g << 1, -1;
  EXPECT_THROW(solve_lp(Eigen::VectorXd::Ones(1), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), g,
                        Eigen::Vector2d(-1, 0)),
               Infeasible);
  Eigen::MatrixXd lower(1, 1);
  lower << -1;
  EXPECT_THROW(solve_lp(Eigen::VectorXd::Ones(1), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), lower,
                        Eigen::VectorXd::Zero(1)),
               Error);
}

TEST(RegularizationBound, WithinGammaTimesDiameter) {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + trial % 6;
    QpProblem prob = oracle::random_box_qp(rng, n, 0.1, trial % 3, false);
    const double opt = solve_lp(prob.theta, prob.A, prob.b, prob.G, prob.h).objective;
    for (double gamma : {0.01, 0.1, 1.0}) {
      prob.gamma = gamma;
      EXPECT_GE(prob.theta.dot(solve_qp(prob).x), opt - gamma * static_cast<double>(n) - 1e-6);
    }
  }
}

TEST(QpText, RoundTripAndErrors) {
  std::mt19937_64 rng(19);
  const QpProblem prob = oracle::random_box_qp(rng, 4, 0.25, 1, true);
  std::stringstream ss;
  write_qp(ss, prob);
  const QpProblem back = read_qp(ss);
  EXPECT_EQ(back.theta, prob.theta);
  EXPECT_EQ(back.A, prob.A);
  EXPECT_EQ(back.G, prob.G);
  EXPECT_EQ(back.h, prob.h);
  EXPECT_EQ(back.gamma, prob.gamma);

  std::stringstream truncated("2 0 1 0.1\n1 1 1\n");
  try {
    read_qp(truncated);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream bad("2 0 0 0.1\n1 x\n");
  EXPECT_THROW(read_qp(bad), ParseError);
}

}  // namespace
}  // namespace dfl
