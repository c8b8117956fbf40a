// Copyright 2026 The ehrablate Authors
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

#include "ehrablate/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ehrablate/kernels.hpp"
#include "ehrablate/util.hpp"

namespace ehrablate {
namespace {

// log(1 + exp(t)) without overflow for large |t|.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Parameter vector layout: weights in [0, n_cols), intercept at n_cols.
struct Problem {
  const FeatureMatrix& m;
  std::span<const uint32_t> rows;
  std::span<const uint8_t> labels;
  double lambda;

  size_t dim() const { return m.cols() + 1; }

  double eval(const double* x, double* grad) const {
    const kernels::Kernels& k = kernels::active();
    const size_t n_w = m.cols();
    const double intercept = x[n_w];
    double loss = 0.0;
    if (grad) std::fill(grad, grad + n_w + 1, 0.0);
    for (size_t i = 0; i < rows.size(); ++i) {
      const std::span<const uint32_t> row = m.row(rows[i]);
      const double z = intercept + k.gather_sum(x, row.data(), row.size());
      loss += labels[i] ? softplus(-z) : softplus(z);
      if (grad) {
        const double resid = sigmoid(z) - (labels[i] ? 1.0 : 0.0);
        grad[n_w] += resid;
        for (uint32_t c : row) grad[c] += resid;
      }
    }
    loss += lambda * k.dot(x, x, n_w);
    if (grad) k.axpy(2.0 * lambda, x, grad, n_w);
    return loss;
  }
};

}  // namespace

double objective_and_gradient(std::span<const double> weights, double intercept,
                              double lambda, const FeatureMatrix& m,
                              std::span<const uint32_t> rows,
                              std::span<const uint8_t> labels,
                              std::span<double> grad_weights,
                              double& grad_intercept) {
  if (weights.size() != m.cols()) {
    fail("classifier: weight vector size does not match column count");
  }
  if (rows.size() != labels.size()) {
    fail("classifier: rows and labels must be parallel");
  }
  Problem problem{m, rows, labels, lambda};
  std::vector<double> x(problem.dim());
  std::copy(weights.begin(), weights.end(), x.begin());
  x[m.cols()] = intercept;
  if (grad_weights.empty()) {
    grad_intercept = 0.0;
    return problem.eval(x.data(), nullptr);
  }
  if (grad_weights.size() != m.cols()) {
    fail("classifier: gradient buffer size does not match column count");
  }
  std::vector<double> g(problem.dim());
  const double f = problem.eval(x.data(), g.data());
  std::copy(g.begin(), g.end() - 1, grad_weights.begin());
  grad_intercept = g.back();
  return f;
}

double objective(const LogisticModel& model, const FeatureMatrix& m,
                 std::span<const uint32_t> rows,
                 std::span<const uint8_t> labels) {
  if (model.feature_signature != m.feature_signature()) {
    fail("classifier: matrix feature signature does not match model");
  }
  double unused;
  return objective_and_gradient(model.weights, model.intercept, model.lambda, m,
                                rows, labels, {}, unused);
}

LogisticModel train(const FeatureMatrix& m, std::span<const uint32_t> rows,
                    std::span<const uint8_t> labels,
                    const TrainConfig& config) {
  if (rows.size() != labels.size()) {
    fail("classifier: rows and labels must be parallel");
  }
  if (rows.empty()) fail("classifier: empty training subset");
  bool has_case = false, has_control = false;
  for (uint8_t y : labels) (y ? has_case : has_control) = true;
  if (!has_case || !has_control) {
    fail("classifier: training subset must contain both classes");
  }
  for (uint32_t r : rows) {
    if (r >= m.rows()) fail("classifier: training row index out of range");
  }

  const kernels::Kernels& k = kernels::active();
  Problem problem{m, rows, labels, config.lambda};
  const size_t dim = problem.dim();

  std::vector<double> x(dim, 0.0);
  if (config.init_scale > 0.0) {
    Rng rng(config.seed);
    for (double& v : x) v = rng.uniform(-config.init_scale, config.init_scale);
  }

  std::vector<double> g(dim), x_new(dim), g_new(dim), q(dim);
  constexpr size_t kMemory = 10;
  std::vector<std::vector<double>> mem_s, mem_y;
  std::vector<double> mem_rho;

  LogisticModel model;
  model.lambda = config.lambda;
  model.feature_signature = m.feature_signature();

  double f = problem.eval(x.data(), g.data());
  model.objective_trace.push_back(f);

  for (size_t iter = 0; iter < config.max_iterations; ++iter) {
    if (inf_norm(g) <= config.gradient_tolerance) {
      model.converged = true;
      break;
    }

    // Two-loop recursion for the L-BFGS direction.
    std::copy(g.begin(), g.end(), q.begin());
    const size_t n_pairs = mem_s.size();
    std::vector<double> alpha(n_pairs);
    for (size_t i = n_pairs; i-- > 0;) {
      alpha[i] = mem_rho[i] * k.dot(mem_s[i].data(), q.data(), dim);
      k.axpy(-alpha[i], mem_y[i].data(), q.data(), dim);
    }
    if (n_pairs > 0) {
      const std::vector<double>& s_last = mem_s.back();
      const std::vector<double>& y_last = mem_y.back();
      const double gamma = k.dot(s_last.data(), y_last.data(), dim) /
                           k.dot(y_last.data(), y_last.data(), dim);
      k.scale(gamma, q.data(), dim);
    }
    for (size_t i = 0; i < n_pairs; ++i) {
      const double beta = mem_rho[i] * k.dot(mem_y[i].data(), q.data(), dim);
      k.axpy(alpha[i] - beta, mem_s[i].data(), q.data(), dim);
    }
    k.scale(-1.0, q.data(), dim);  // q is now the search direction

    double gd = k.dot(g.data(), q.data(), dim);
    if (!(gd < 0.0)) {
      // Not a descent direction (numerically degenerate memory); fall back
      // to steepest descent and drop the history.
      std::copy(g.begin(), g.end(), q.begin());
      k.scale(-1.0, q.data(), dim);
      gd = -k.dot(g.data(), g.data(), dim);
      mem_s.clear();
      mem_y.clear();
      mem_rho.clear();
    }

    // Armijo backtracking.
    constexpr double kArmijo = 1e-4;
    double step = 1.0;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      std::copy(x.begin(), x.end(), x_new.begin());
      k.axpy(step, q.data(), x_new.data(), dim);
      f_new = problem.eval(x_new.data(), nullptr);
      if (f_new <= f + kArmijo * step * gd) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress possible at double precision

    problem.eval(x_new.data(), g_new.data());

    std::vector<double> s(dim), y(dim);
    for (size_t i = 0; i < dim; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = k.dot(s.data(), y.data(), dim);
    const double ss = k.dot(s.data(), s.data(), dim);
    const double yy = k.dot(y.data(), y.data(), dim);
    if (sy > 1e-12 * std::sqrt(ss) * std::sqrt(yy)) {
      if (mem_s.size() == kMemory) {
        mem_s.erase(mem_s.begin());
        mem_y.erase(mem_y.begin());
        mem_rho.erase(mem_rho.begin());
      }
      mem_s.push_back(std::move(s));
      mem_y.push_back(std::move(y));
      mem_rho.push_back(1.0 / sy);
    }

    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    model.objective_trace.push_back(f);
    model.iterations = iter + 1;
  }
  if (!model.converged) {
    model.converged = inf_norm(g) <= config.gradient_tolerance;
  }

  model.intercept = x[m.cols()];
  x.resize(m.cols());
  model.weights = std::move(x);
  return model;
}

std::vector<double> predict(const LogisticModel& model, const FeatureMatrix& m,
                            std::span<const uint32_t> rows) {
  if (model.feature_signature != m.feature_signature()) {
    fail("classifier: matrix feature signature does not match model");
  }
  const kernels::Kernels& k = kernels::active();
  std::vector<double> out;
  out.reserve(rows.size());
  for (uint32_t r : rows) {
    if (r >= m.rows()) fail("classifier: prediction row index out of range");
    const std::span<const uint32_t> row = m.row(r);
    out.push_back(sigmoid(model.intercept +
                          k.gather_sum(model.weights.data(), row.data(),
                                       row.size())));
  }
  return out;
}

void write_model(const LogisticModel& model, const std::filesystem::path& path,
                 std::string_view comment_header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("classifier: cannot write " + path.string());
  char sig[32];
  std::snprintf(sig, sizeof(sig), "%016llx",
                static_cast<unsigned long long>(model.feature_signature));
  out << "# " << comment_header << "\n";
  out << "lambda," << format_double(model.lambda) << "\n";
  out << "intercept," << format_double(model.intercept) << "\n";
  out << "feature_signature," << sig << "\n";
  out << "converged," << (model.converged ? 1 : 0) << "\n";
  out << "iterations," << model.iterations << "\n";
  out << "weights," << model.weights.size() << "\n";
  for (size_t i = 0; i < model.weights.size(); ++i) {
    out << i << ',' << format_double(model.weights[i]) << "\n";
  }
}

LogisticModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("classifier: cannot open model " + path.string());
  LogisticModel model;
  std::string line;
  size_t expected_weights = 0;
  bool in_weights = false;
  while (std::getline(in, line)) {
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    std::vector<std::string_view> tokens = split(view, ',');
    if (tokens.size() != 2) fail("classifier: malformed model line: " + line);
    if (!in_weights) {
      std::string_view key = trim(tokens[0]);
      if (key == "lambda") {
        if (!parse_double(tokens[1], model.lambda)) {
          fail("classifier: bad lambda in model file");
        }
      } else if (key == "intercept") {
        if (!parse_double(tokens[1], model.intercept)) {
          fail("classifier: bad intercept in model file");
        }
      } else if (key == "feature_signature") {
        std::string_view hex = trim(tokens[1]);
        uint64_t sig = 0;
        for (char c : hex) {
          int digit;
          if (c >= '0' && c <= '9') digit = c - '0';
          else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
          else fail("classifier: bad feature signature in model file");
          sig = sig << 4 | static_cast<uint64_t>(digit);
        }
        model.feature_signature = sig;
      } else if (key == "converged") {
        model.converged = trim(tokens[1]) == "1";
      } else if (key == "iterations") {
        uint64_t v;
        if (!parse_u64(tokens[1], v)) fail("classifier: bad iteration count");
        model.iterations = v;
      } else if (key == "weights") {
        uint64_t v;
        if (!parse_u64(tokens[1], v)) fail("classifier: bad weight count");
        expected_weights = v;
        model.weights.reserve(v);
        in_weights = true;
      } else {
        fail("classifier: unknown model key: " + std::string(key));
      }
    } else {
      uint64_t index;
      double w;
      if (!parse_u64(tokens[0], index) || index != model.weights.size() ||
          !parse_double(tokens[1], w)) {
        fail("classifier: malformed weight line: " + line);
      }
      model.weights.push_back(w);
    }
  }
  if (model.weights.size() != expected_weights) {
    fail("classifier: model file weight count mismatch");
  }
  return model;
}

}  // namespace ehrablate
