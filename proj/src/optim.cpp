#include "driftfit/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace driftfit {

namespace {

Eigen::VectorXd project_box(Eigen::VectorXd x, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

OptimResult lbfgsb_minimize(const ObjectiveFn& f, const GradientFn& g,
                            const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const LbfgsbOptions& opts) {
  OptimResult res;
  Eigen::VectorXd x = project_box(x0, lower, upper);
  double fx = f(x);
  Eigen::VectorXd gx = g(x);
  res.evaluations = 1;
  res.x = x;
  res.f = fx;

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // Projected gradient stationarity check.
    const Eigen::VectorXd pg = x - project_box(x - gx, lower, upper);
    if (pg.lpNorm<Eigen::Infinity>() < opts.pg_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion on the full gradient; active bounds are handled by
    // the projected line search below.
    Eigen::VectorXd q = gx;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    if (dir.dot(gx) > -1e-16 * dir.norm() * gx.norm()) dir = -gx;  // safeguard

    // Backtracking Armijo search along the projected path.
    double step = 1.0;
    const double c1 = 1e-4;
    Eigen::VectorXd x_new;
    double f_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project_box(x + step * dir, lower, upper);
      const Eigen::VectorXd dx = x_new - x;
      if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
      f_new = f(x_new);
      ++res.evaluations;
      if (f_new <= fx + c1 * gx.dot(dx)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = true;  // no admissible descent step; treat as stationary
      break;
    }

    Eigen::VectorXd g_new = g(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - gx;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double decrease = fx - f_new;
    x = x_new;
    fx = f_new;
    gx = g_new;
    if (fx < res.f) {
      res.f = fx;
      res.x = x;
    }
    if (decrease < opts.f_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

OptimResult nelder_mead_minimize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                                 const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  OptimResult res;

  std::vector<Eigen::VectorXd> verts;
  std::vector<double> fv;
  verts.reserve(n + 1);
  verts.push_back(x0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = x0;
    v[i] += (v[i] != 0.0) ? 0.05 * v[i] : 0.00025;
    verts.push_back(v);
  }
  for (auto& v : verts) fv.push_back(f(v));
  res.evaluations = static_cast<int>(verts.size());

  const double scale_tol = opts.diameter_tol * (1.0 + x0.norm());

  auto order = [&] {
    std::vector<std::size_t> idx(verts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<Eigen::VectorXd> v2(verts.size());
    std::vector<double> f2(verts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      v2[i] = verts[idx[i]];
      f2[i] = fv[idx[i]];
    }
    verts.swap(v2);
    fv.swap(f2);
  };

  while (res.evaluations < opts.max_evals) {
    order();
    double diam = 0.0;
    for (std::size_t i = 1; i < verts.size(); ++i)
      diam = std::max(diam, (verts[i] - verts[0]).lpNorm<Eigen::Infinity>());
    if (diam < scale_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += verts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd& worst = verts[n];
    Eigen::VectorXd xr = centroid + opts.alpha * (centroid - worst);
    const double fr = f(xr);
    ++res.evaluations;

    if (fr < fv[0]) {
      Eigen::VectorXd xe = centroid + opts.gamma * (xr - centroid);
      const double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        verts[n] = xe;
        fv[n] = fe;
      } else {
        verts[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      verts[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      Eigen::VectorXd xc =
          outside ? (centroid + opts.rho * (xr - centroid)) : (centroid + opts.rho * (worst - centroid));
      const double fc = f(xc);
      ++res.evaluations;
      if (fc < (outside ? fr : fv[n])) {
        verts[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i < verts.size(); ++i) {
          verts[i] = verts[0] + opts.sigma * (verts[i] - verts[0]);
          fv[i] = f(verts[i]);
          ++res.evaluations;
        }
      }
    }
  }
  order();
  res.x = verts[0];
  res.f = fv[0];
  return res;
}

}  // namespace driftfit
