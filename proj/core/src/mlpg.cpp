// Copyright 2026 The gatedrnn Authors.
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

#include "gatedrnn/mlpg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace gatedrnn {

namespace {

// One regression row of W: up to three (frame, coefficient) taps with edge
// replication, duplicates merged.
struct WindowRow {
  std::array<Index, 3> frame{};
  std::array<double, 3> coef{};
  int taps = 0;
};

WindowRow window_row(const std::array<double, 3>& window, Index t, Index steps) {
  WindowRow row;
  const std::array<Index, 3> frames = {std::max<Index>(t - 1, 0), t,
                                       std::min<Index>(t + 1, steps - 1)};
  for (int k = 0; k < 3; ++k) {
    if (window[static_cast<std::size_t>(k)] == 0.0) continue;
    bool merged = false;
    for (int m = 0; m < row.taps; ++m) {
      if (row.frame[static_cast<std::size_t>(m)] == frames[static_cast<std::size_t>(k)]) {
        row.coef[static_cast<std::size_t>(m)] += window[static_cast<std::size_t>(k)];
        merged = true;
      }
    }
    if (!merged) {
      row.frame[static_cast<std::size_t>(row.taps)] = frames[static_cast<std::size_t>(k)];
      row.coef[static_cast<std::size_t>(row.taps)] = window[static_cast<std::size_t>(k)];
      ++row.taps;
    }
  }
  return row;
}

double precision_of(double variance) {
  return std::isinf(variance) ? 0.0 : 1.0 / variance;
}

}  // namespace

void GenerationProblem::validate() const {
  require(means.rows() >= 1, "generation problem needs at least one frame");
  require(means.cols() >= 3 && means.cols() % 3 == 0,
          "generation problem needs [static, delta, accel] column blocks");
  require(variances.rows() == means.rows() && variances.cols() == means.cols(),
          "means and variances differ in shape");
  require(means.allFinite(), "generation means must be finite");
  for (Index i = 0; i < variances.size(); ++i) {
    const double v = variances.data()[i];
    require(v > 0.0 && !std::isnan(v), "generation variances must be positive");
  }
}

BandedSpdMatrix::BandedSpdMatrix(Index size, Index bandwidth)
    : band_(Matrix::Zero(bandwidth + 1, size)) {
  require(size >= 1 && bandwidth >= 0, "invalid band matrix shape");
}

void BandedSpdMatrix::add(Index i, Index j, double v) {
  if (i < j) std::swap(i, j);
  require(j >= 0 && i < size(), "entry outside the matrix");
  require(i - j <= bandwidth(), "entry outside the band");
  band_(i - j, j) += v;
}

double BandedSpdMatrix::at(Index i, Index j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bandwidth()) return 0.0;
  return band_(i - j, j);
}

Vector BandedSpdMatrix::solve(const Vector& rhs) const {
  const Index n = size();
  const Index p = bandwidth();
  require(rhs.size() == n, "right-hand side size mismatch");

  // l(k, j) = L(j + k, j)
  Matrix l = Matrix::Zero(p + 1, n);
  for (Index j = 0; j < n; ++j) {
    double diag = band_(0, j);
    for (Index k = std::max<Index>(0, j - p); k < j; ++k) diag -= l(j - k, k) * l(j - k, k);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw NumericalError("banded Cholesky: matrix is not positive definite at row " +
                           std::to_string(j));
    const double ljj = std::sqrt(diag);
    l(0, j) = ljj;
    for (Index i = j + 1; i <= std::min(j + p, n - 1); ++i) {
      double v = band_(i - j, j);
      for (Index k = std::max<Index>(0, i - p); k < j; ++k) v -= l(i - k, k) * l(j - k, k);
      l(i - j, j) = v / ljj;
    }
  }

  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    double v = rhs[i];
    for (Index k = std::max<Index>(0, i - p); k < i; ++k) v -= l(i - k, k) * y[k];
    y[i] = v / l(0, i);
  }
  Vector x(n);
  for (Index i = n - 1; i >= 0; --i) {
    double v = y[i];
    for (Index k = i + 1; k <= std::min(i + p, n - 1); ++k) v -= l(k - i, i) * x[k];
    x[i] = v / l(0, i);
  }
  return x;
}

Matrix mlpg_solve(const GenerationProblem& problem) {
  problem.validate();
  const Index steps = problem.frames();
  const Index dims = problem.dims();
  const std::array<std::array<double, 3>, 2> windows = {kDeltaWindow, kAccelWindow};

  Matrix out(steps, dims);
  for (Index d = 0; d < dims; ++d) {
    BandedSpdMatrix a(steps, 2);
    Vector rhs = Vector::Zero(steps);
    bool coupled = false;
    bool static_defined = true;
    for (Index t = 0; t < steps; ++t) {
      const double ps = precision_of(problem.variances(t, d));
      static_defined = static_defined && ps > 0.0;
      a.add(t, t, ps);
      rhs[t] += ps * problem.means(t, d);
      for (std::size_t w = 0; w < windows.size(); ++w) {
        const Index col = static_cast<Index>(w + 1) * dims + d;
        const double prec = precision_of(problem.variances(t, col));
        if (prec == 0.0) continue;
        coupled = true;
        const WindowRow row = window_row(windows[w], t, steps);
        for (int m = 0; m < row.taps; ++m) {
          rhs[row.frame[static_cast<std::size_t>(m)]] +=
              prec * row.coef[static_cast<std::size_t>(m)] * problem.means(t, col);
          for (int n = 0; n <= m; ++n)
            a.add(row.frame[static_cast<std::size_t>(m)], row.frame[static_cast<std::size_t>(n)],
                  prec * row.coef[static_cast<std::size_t>(m)] *
                      row.coef[static_cast<std::size_t>(n)]);
        }
      }
    }
    // Diagonal system: return the means as-is rather than (p*mu)/p.
    if (!coupled && static_defined)
      out.col(d) = problem.means.col(d);
    else
      out.col(d) = a.solve(rhs);
  }
  return out;
}

double mlpg_objective(const GenerationProblem& problem, const Matrix& trajectory) {
  problem.validate();
  const Index steps = problem.frames();
  const Index dims = problem.dims();
  require(trajectory.rows() == steps && trajectory.cols() == dims, "trajectory shape mismatch");
  const Matrix observed = compute_dynamics(trajectory);
  double total = 0.0;
  for (Index t = 0; t < steps; ++t) {
    for (Index c = 0; c < 3 * dims; ++c) {
      const double r = observed(t, c) - problem.means(t, c);
      total += precision_of(problem.variances(t, c)) * r * r;
    }
  }
  return total;
}

namespace {

// MLPG over `dims` consecutive static dimensions whose static, delta and
// accel columns start at `offset`, `offset + dims` and `offset + 2 * dims`.
Matrix generate_stream(const Matrix& restored, const Vector& global_variances,
                       const MeanVarStats& norm, Index offset, Index dims) {
  const Index steps = restored.rows();
  const double inf = std::numeric_limits<double>::infinity();
  auto usable = [&](Index col) {
    const double v = global_variances[col];
    return std::isfinite(v) && v > 0.0 && !norm.degenerate[col];
  };
  Matrix out(steps, dims);
  for (Index d = 0; d < dims; ++d) {
    if (!usable(offset + d)) {
      out.col(d) = restored.col(offset + d);
      continue;
    }
    GenerationProblem one;
    one.means.resize(steps, 3);
    one.variances.resize(steps, 3);
    for (Index block = 0; block < 3; ++block) {
      const Index col = offset + block * dims + d;
      one.means.col(block) = restored.col(col);
      one.variances.col(block).setConstant(usable(col) ? global_variances[col] : inf);
    }
    out.col(d) = mlpg_solve(one).col(0);
  }
  return out;
}

}  // namespace

GeneratedUtterance pipeline_generate(const Model& model, const Matrix& inputs,
                                     const MeanVarStats& norm, const Vector& global_variances,
                                     const AcousticLayout& layout) {
  const Index dim = layout.target_dim();
  require(model.config.output_dim == dim, "model output does not match the acoustic layout");
  require(norm.mean.size() == dim && norm.stddev.size() == dim &&
              static_cast<Index>(norm.degenerate.size()) == dim,
          "normalization statistics do not match the acoustic layout");
  require(global_variances.size() == dim, "global variances do not match the acoustic layout");

  const Matrix restored = norm.restore(forward(model, inputs));
  GeneratedUtterance g;
  g.mcc = generate_stream(restored, global_variances, norm, layout.mcc_offset(), layout.mcc_dim);
  g.bap = generate_stream(restored, global_variances, norm, layout.bap_offset(), layout.bap_dim);
  g.log_f0 = generate_stream(restored, global_variances, norm, layout.lf0_offset(), 1).col(0);

  const Index steps = restored.rows();
  g.vuv.resize(static_cast<std::size_t>(steps));
  g.f0_hz.resize(steps);
  for (Index t = 0; t < steps; ++t) {
    const bool voiced = restored(t, layout.vuv_offset()) > 0.5;
    g.vuv[static_cast<std::size_t>(t)] = voiced ? 1 : 0;
    g.f0_hz[t] = voiced ? std::exp(g.log_f0[t]) : 0.0;
  }
  return g;
}

GeneratedUtterance pipeline_generate(const Model& model, const Matrix& raw_linguistic) {
  if (!model.normalization)
    throw ValidationError("model has no stored normalization statistics");
  const DataNormalization& n = *model.normalization;
  return pipeline_generate(model, n.linguistic.apply(raw_linguistic), n.acoustic,
                           n.global_variances, n.layout);
}

}  // namespace gatedrnn
