#include "nstab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace nstab {

namespace {

// QUADPACK dqk15 abscissae/weights, positive half of [-1, 1].
constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
constexpr double kWgk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.1047900103222502,
    0.1406532597155259,  0.1690047266392679,  0.1903505780647854,
    0.2044329400752989,  0.2094821410847278};
constexpr double kWg[4] = {0.1294849661688697, 0.2797053914892767,
                           0.3818300505051189, 0.4179591836734694};

struct Panel {
  double a, b;
  double value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel evaluate_panel(const std::function<double(double)>& f, double a,
                     double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = kWgk[7] * fc;
  double gauss = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double x = h * kXgk[i];
    const double fsum = f(c - x) + f(c + x);
    kronrod += kWgk[i] * fsum;
    if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
  }
  kronrod *= h;
  gauss *= h;
  // QUADPACK-style rescaled error estimate.
  const double diff = std::fabs(kronrod - gauss);
  double err = diff;
  if (diff > 0.0) err = std::min(diff, 200.0 * diff * std::sqrt(200.0 * diff));
  return {a, b, kronrod, err};
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, double abs_tol, double rel_tol,
                     int max_panels) {
  QuadResult res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  std::priority_queue<Panel> panels;
  panels.push(evaluate_panel(f, a, b));
  res.panels = 1;

  double total_value = panels.top().value;
  double total_error = panels.top().error;

  while (res.panels < max_panels) {
    const double tol = std::max(abs_tol, rel_tol * std::fabs(total_value));
    if (total_error <= tol) break;
    Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = evaluate_panel(f, worst.a, mid);
    Panel right = evaluate_panel(f, mid, worst.b);
    total_value += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++res.panels;
  }

  // Compensated re-summation of the final partition for the value.
  std::vector<Panel> all;
  all.reserve(panels.size());
  while (!panels.empty()) {
    all.push_back(panels.top());
    panels.pop();
  }
  std::sort(all.begin(), all.end(),
            [](const Panel& l, const Panel& r) { return l.a < r.a; });
  double sum = 0.0, comp = 0.0, err = 0.0;
  for (const Panel& p : all) {
    const double y = p.value - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    err += p.error;
  }
  res.value = sum;
  res.error_estimate = err;
  res.converged = err <= std::max(abs_tol, rel_tol * std::fabs(sum));
  return res;
}

double integrate_or_throw(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, double rel_tol,
                          int max_panels) {
  QuadResult r = integrate(f, a, b, abs_tol, rel_tol, max_panels);
  if (!r.converged)
    throw std::runtime_error("adaptive quadrature did not converge (err=" +
                             std::to_string(r.error_estimate) + ")");
  return r.value;
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::domain_error("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule rule = gauss_legendre(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) throw std::domain_error("gauss_hermite: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pi4 = std::pow(M_PI, -0.25);
  double x = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Stroud & Secrest style initial guesses.
    if (i == 0) {
      x = std::sqrt(2.0 * n + 1.0) -
          1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      x -= 1.14 * std::pow(n, 0.426) / x;
    } else if (i == 2) {
      x = 1.86 * x - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      x = 1.91 * x - 0.91 * rule.nodes[1];
    } else {
      x = 2.0 * x - rule.nodes[i - 2];
    }
    double dp = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      // Orthonormal Hermite recurrence (weight exp(-x^2)).
      double p0 = pi4, p1 = std::sqrt(2.0) * x * pi4;
      for (int k = 2; k <= n; ++k) {
        const double p2 =
            x * std::sqrt(2.0 / k) * p1 - std::sqrt((k - 1.0) / k) * p0;
        p0 = p1;
        p1 = p2;
      }
      dp = std::sqrt(2.0 * n) * p0;
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    rule.nodes[i] = x;
    rule.nodes[n - 1 - i] = -x;
    const double w = 2.0 / (dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  // Nodes were built descending in magnitude; sort ascending for callers.
  std::vector<std::pair<double, double>> nw(n);
  for (int i = 0; i < n; ++i) nw[i] = {rule.nodes[i], rule.weights[i]};
  std::sort(nw.begin(), nw.end());
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = nw[i].first;
    rule.weights[i] = nw[i].second;
  }
  return rule;
}

}  // namespace nstab
