#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "optent/lbfgs.hpp"
#include "optent/transcription.hpp"

using namespace optent;

namespace {

TranscriptionGrid random_grid(std::mt19937_64& rng, std::size_t n = 200) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TranscriptionGrid grid(1.5, 2.0, n, 2);
  for (auto& x : grid.controls) x = 1.5 * u(rng);
  return grid;
}

}  // namespace

TEST(Transcription, GridPropagationMatchesReferenceIntegrator) {
  std::mt19937_64 rng(3);
  auto grid = random_grid(rng);
  grid.substeps = TranscriptionGrid::reference_substeps(grid.horizon, grid.size());
  const auto a = objective_and_constraints(grid);
  const auto b = propagate_reduced(grid.profile());
  EXPECT_NEAR(a.q1, b.q1, 1e-12);
  EXPECT_NEAR(a.q2, b.q2, 1e-12);
  EXPECT_NEAR(a.q3, b.q3, 1e-12);
}

TEST(Transcription, AdjointGradientMatchesCentralDifferences) {
  std::mt19937_64 rng(20161001);
  const AugmentedWeights w{0.7, -1.3, 25.0};
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto grid = random_grid(rng);
    const auto ag = adjoint_gradient(grid, w);
    const double h = 1e-6;
    std::vector<double> fd(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double saved = grid.controls[i];
      grid.controls[i] = saved + h;
      const double fp = augmented_value(objective_and_constraints(grid), w);
      grid.controls[i] = saved - h;
      const double fm = augmented_value(objective_and_constraints(grid), w);
      grid.controls[i] = saved;
      fd[i] = (fp - fm) / (2 * h);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      num = std::max(num, std::abs(ag.gradient[i] - fd[i]));
      den = std::max(den, std::abs(fd[i]));
    }
    worst = std::max(worst, num / den);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Transcription, ValueAtZeroControlIsRotationOnly) {
  TranscriptionGrid grid(1.0, 1.0, 100, 1);
  const auto q = objective_and_constraints(grid);
  EXPECT_EQ(q.q1, 0.0);
  EXPECT_EQ(q.q2, 0.0);
  EXPECT_EQ(q.q3, 0.0);
}

TEST(Transcription, GridValidation) {
  EXPECT_THROW(TranscriptionGrid(1.0, 1.0, 50, 1), Error);
  EXPECT_THROW(TranscriptionGrid(0.0, 1.0, 200, 1), Error);
  EXPECT_THROW(TranscriptionGrid(1.0, 0.0, 200, 1), Error);
}

TEST(Lbfgs, BoxConstrainedQuadratic) {
  // min sum (x_i - c_i)^2 over [-1, 1]: solution is clamp(c).
  const std::vector<double> c{0.3, -2.0, 5.0, -0.7};
  const std::vector<double> lo(4, -1.0), hi(4, 1.0);
  const auto fg = [&](const std::vector<double>& x, std::vector<double>& g) {
    double f = 0.0;
    g.assign(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      f += (x[i] - c[i]) * (x[i] - c[i]);
      g[i] = 2 * (x[i] - c[i]);
    }
    return f;
  };
  const auto res = minimize_box(fg, std::vector<double>(4, 0.0), lo, hi);
  EXPECT_NEAR(res.x[0], 0.3, 1e-8);
  EXPECT_NEAR(res.x[1], -1.0, 1e-12);
  EXPECT_NEAR(res.x[2], 1.0, 1e-12);
  EXPECT_NEAR(res.x[3], -0.7, 1e-8);
  EXPECT_TRUE(res.converged);
}

TEST(Lbfgs, Rosenbrock) {
  const std::vector<double> lo(2, -5.0), hi(2, 5.0);
  const auto fg = [](const std::vector<double>& x, std::vector<double>& g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g = {-2 * a - 400 * x[0] * b, 200 * b};
    return a * a + 100 * b * b;
  };
  BoxLbfgsOptions opt;
  opt.max_iterations = 2000;
  const auto res = minimize_box(fg, {-1.2, 1.0}, lo, hi, opt);
  EXPECT_NEAR(res.x[0], 1.0, 1e-5);
  EXPECT_NEAR(res.x[1], 1.0, 1e-5);
}
