#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "wavekit/fwi/encoding.hpp"
#include "wavekit/fwi/regularizer.hpp"
#include "wavekit/fwi/survey.hpp"

namespace wavekit::fwi {

struct ObjectiveTolerances {
  double forward = kForwardTol;
  double sensitivity = kSensitivityTol;
};

/// Phi(m) = sum_j w / sigma_j^2 sum_k ||P^T H_j^-1 (G x_k) - D_j x_k||^2 + alpha R(m) over the
/// frequencies of one window. The model lives on `model_grid`; each frequency is solved on
/// its own grid after bilinear resampling. gradient() and hessian_vec() act at the point of
/// the last evaluate().
class Objective {
 public:
  Objective(const Survey& survey, std::vector<std::size_t> freqs, const RegularGrid2D& model_grid, Regularizer reg,
            SolverFactory factory, int threads = 1, ObjectiveTolerances tol = {})
      : survey_(&survey),
        freqs_(std::move(freqs)),
        grid_(model_grid),
        reg_(std::move(reg)),
        factory_(std::move(factory)),
        threads_(threads),
        tol_(tol) {
    if (freqs_.empty()) throw std::invalid_argument("Objective: no frequencies");
    for (std::size_t j : freqs_) {
      if (j >= survey.freqs.size()) throw std::out_of_range("Objective: frequency index");
      if (survey.freqs[j].d_obs.empty()) throw std::invalid_argument("Objective: frequency without observations");
      const RegularGrid2D& g = survey.freqs[j].grid();
      if (g == grid_) {
        resamplers_.emplace_back();
      } else {
        resamplers_.emplace_back(BilinearResampler(grid_, g));
      }
    }
    if (reg_.alpha > 0.0) require_same_grid(reg_.m_ref.grid, grid_, "Objective regularizer");
  }

  [[nodiscard]] const RegularGrid2D& model_grid() const { return grid_; }
  [[nodiscard]] const std::vector<std::size_t>& frequencies() const { return freqs_; }
  [[nodiscard]] const Regularizer& regularizer() const { return reg_; }
  void set_regularizer(Regularizer r) { reg_ = std::move(r); }

  /// Forward solves for every frequency and encoded source; returns Phi.
  double evaluate(const SlownessSquaredField& m, const SimSourceEncoding& enc, SolveStats* stats = nullptr) {
    require_same_grid(m.grid, grid_, "Objective::evaluate");
    if (static_cast<std::size_t>(enc.sources()) != survey_->sources())
      throw std::invalid_argument("Objective: encoding rows != sources");
    if (!have_model_ || m.values != m_.values) {
      m_ = m;
      have_model_ = true;
      build_solvers();
    }
    enc_ = enc;
    const std::size_t nk = static_cast<std::size_t>(enc.columns());
    for (auto& st : states_) {
      st.u.assign(nk, {});
      st.res.assign(nk, {});
    }
    std::vector<SolveReport> reports(states_.size() * nk);
    parallel_for(reports.size(), threads_, [&](std::size_t t) {
      const std::size_t q = t / nk, k = t % nk;
      State& st = states_[q];
      const FrequencyData& f = survey_->freqs[freqs_[q]];
      ComplexField rhs(f.grid());
      cvec dx(f.layout.receivers.size());
      for (std::size_t s = 0; s < f.layout.sources.size(); ++s) {
        const double w = enc.x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k));
        if (w == 0.0) continue;
        rhs.values[f.layout.sources[s]] += w / (f.grid().hx * f.grid().hy);
        for (std::size_t r = 0; r < dx.size(); ++r) dx[r] += w * f.d_obs[s][r];
      }
      auto [u, rep] = st.solver->forward(rhs, tol_.forward);
      reports[t] = rep;
      cvec pred = sample_at_receivers(u, f.layout);
      for (std::size_t r = 0; r < pred.size(); ++r) pred[r] -= dx[r];
      st.u[k] = std::move(u);
      st.res[k] = std::move(pred);
    });
    accumulate(reports, stats);
    data_ = 0.0;
    for (std::size_t q = 0; q < states_.size(); ++q) {
      const double c = enc.weight / (survey_->freqs[freqs_[q]].sigma * survey_->freqs[freqs_[q]].sigma);
      for (const auto& r : states_[q].res)
        for (const cplx& z : r) data_ += c * std::norm(z);
    }
    reg_value_ = reg_.alpha > 0.0 ? reg_.value(m_) : 0.0;
    return data_ + reg_value_;
  }

  [[nodiscard]] double data_value() const { return data_; }
  [[nodiscard]] double reg_value() const { return reg_value_; }

  /// Adjoint-state gradient: one adjoint solve per encoded source.
  std::vector<double> gradient(SolveStats* stats = nullptr) const {
    require_evaluated();
    const std::size_t nk = static_cast<std::size_t>(enc_.columns());
    std::vector<std::vector<double>> parts(states_.size() * nk);
    std::vector<SolveReport> reports(parts.size());
    parallel_for(parts.size(), threads_, [&](std::size_t t) {
      const std::size_t q = t / nk, k = t % nk;
      const State& st = states_[q];
      const FrequencyData& f = survey_->freqs[freqs_[q]];
      auto [lambda, rep] = st.solver->adjoint(scatter_from_receivers(st.res[k], f.layout), tol_.sensitivity);
      reports[t] = rep;
      const double c = 2.0 * enc_.weight * f.omega * f.omega / (f.sigma * f.sigma);
      std::vector<double> g(f.grid().size());
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = c * std::real(std::conj(cplx(1.0, -f.gamma.values[i]) * st.u[k].values[i]) * lambda.values[i]);
      parts[t] = std::move(g);
    });
    accumulate(reports, stats);
    std::vector<double> grad = reg_.alpha > 0.0 ? reg_.gradient(m_) : std::vector<double>(grid_.size(), 0.0);
    add_parts(parts, nk, grad);
    return grad;
  }

  /// Gauss-Newton Hessian times v: 2 w / sigma^2 Re(J^H J v) per frequency and column, plus
  /// alpha times the regularizer Hessian. One forward and one adjoint solve per column.
  std::vector<double> hessian_vec(std::span<const double> v, SolveStats* stats = nullptr) const {
    require_evaluated();
    if (v.size() != grid_.size()) throw std::invalid_argument("hessian_vec: length mismatch");
    const std::size_t nk = static_cast<std::size_t>(enc_.columns());
    std::vector<std::vector<double>> vq(states_.size());
    for (std::size_t q = 0; q < states_.size(); ++q)
      vq[q] = resamplers_[q] ? resamplers_[q]->apply(v) : std::vector<double>(v.begin(), v.end());
    std::vector<std::vector<double>> parts(states_.size() * nk);
    std::vector<SolveReport> reports(2 * parts.size());
    parallel_for(parts.size(), threads_, [&](std::size_t t) {
      const std::size_t q = t / nk, k = t % nk;
      const State& st = states_[q];
      const FrequencyData& f = survey_->freqs[freqs_[q]];
      const std::size_t n = f.grid().size();
      const double w2 = f.omega * f.omega;
      ComplexField rhs(f.grid());
      for (std::size_t i = 0; i < n; ++i) rhs.values[i] = w2 * cplx(1.0, -f.gamma.values[i]) * st.u[k].values[i] * vq[q][i];
      auto [du, r1] = st.solver->forward(rhs, tol_.sensitivity);
      auto [mu, r2] = st.solver->adjoint(scatter_from_receivers(sample_at_receivers(du, f.layout), f.layout),
                                         tol_.sensitivity);
      reports[2 * t] = r1;
      reports[2 * t + 1] = r2;
      const double c = 2.0 * enc_.weight * w2 / (f.sigma * f.sigma);
      std::vector<double> h(n);
      for (std::size_t i = 0; i < n; ++i)
        h[i] = c * std::real(std::conj(cplx(1.0, -f.gamma.values[i]) * st.u[k].values[i]) * mu.values[i]);
      parts[t] = std::move(h);
    });
    accumulate(reports, stats);
    std::vector<double> out = reg_.alpha > 0.0 ? reg_.hessian_vec(grid_, v) : std::vector<double>(grid_.size(), 0.0);
    add_parts(parts, nk, out);
    return out;
  }

 private:
  struct State {
    std::unique_ptr<FrequencySolver> solver;
    std::vector<ComplexField> u;
    std::vector<cvec> res;
  };

  void build_solvers() {
    states_.clear();
    states_.resize(freqs_.size());
    for (std::size_t q = 0; q < freqs_.size(); ++q) {
      const FrequencyData& f = survey_->freqs[freqs_[q]];
      SlownessSquaredField mq = resamplers_[q] ? SlownessSquaredField(f.grid(), resamplers_[q]->apply(m_.values)) : m_;
      states_[q].solver = factory_(HelmholtzProblem(std::move(mq), f.gamma, f.omega));
    }
  }

  void add_parts(const std::vector<std::vector<double>>& parts, std::size_t nk, std::vector<double>& out) const {
    for (std::size_t q = 0; q < states_.size(); ++q) {
      std::vector<double> sum(parts[q * nk].size(), 0.0);
      for (std::size_t k = 0; k < nk; ++k)
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += parts[q * nk + k][i];
      if (resamplers_[q]) sum = resamplers_[q]->apply_transpose(sum);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += sum[i];
    }
  }

  static void accumulate(const std::vector<SolveReport>& reports, SolveStats* stats) {
    if (!stats) return;
    for (const auto& r : reports) stats->add(r);
  }

  void require_evaluated() const {
    if (!have_model_ || states_.empty() || states_[0].u.empty())
      throw std::logic_error("Objective: evaluate() must be called first");
  }

  const Survey* survey_;
  std::vector<std::size_t> freqs_;
  RegularGrid2D grid_;
  Regularizer reg_;
  SolverFactory factory_;
  int threads_;
  ObjectiveTolerances tol_;
  std::vector<std::optional<BilinearResampler>> resamplers_;
  SlownessSquaredField m_;
  bool have_model_ = false;
  SimSourceEncoding enc_;
  std::vector<State> states_;
  double data_ = 0.0;
  double reg_value_ = 0.0;
};

}  // namespace wavekit::fwi
