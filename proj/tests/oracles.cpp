#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>
#include <random>

#include "support.hpp"

namespace psr::test {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace psr::test

namespace psr::oracle {
namespace {

// Explicit (i, j, ω_ij) triplets, built from coordinates rather than from the
// graph's offset bookkeeping.
struct Edge {
  std::size_t i, j;
  double w;
};

std::vector<std::vector<Edge>> edges_by_pixel(const WeightGraph& g) {
  const std::size_t w = g.width(), h = g.height(), n = w * h;
  const int nu = g.nu_r();
  std::vector<std::vector<Edge>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long xi = static_cast<long>(i % w), yi = static_cast<long>(i / w);
    for (int dy = -nu; dy <= nu; ++dy)
      for (int dx = -nu; dx <= nu; ++dx) {
        const long xj = xi + dx, yj = yi + dy;
        if (xj < 0 || yj < 0 || xj >= static_cast<long>(w) || yj >= static_cast<long>(h)) continue;
        const std::size_t k = static_cast<std::size_t>((dy + nu) * (2 * nu + 1) + (dx + nu));
        const std::size_t j = static_cast<std::size_t>(yj) * w + static_cast<std::size_t>(xj);
        out[i].push_back({i, j, g.plane(k)[i]});
      }
  }
  return out;
}

}  // namespace

std::vector<double> gradient_matrix(const WeightGraph& g) {
  const std::size_t n = g.pixels(), window = g.window_size();
  const std::size_t w = g.width(), h = g.height();
  const int nu = g.nu_r();
  std::vector<double> a(window * n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const long xi = static_cast<long>(i % w), yi = static_cast<long>(i / w);
    for (int dy = -nu; dy <= nu; ++dy)
      for (int dx = -nu; dx <= nu; ++dx) {
        const long xj = xi + dx, yj = yi + dy;
        if (xj < 0 || yj < 0 || xj >= static_cast<long>(w) || yj >= static_cast<long>(h)) continue;
        const std::size_t k = static_cast<std::size_t>((dy + nu) * (2 * nu + 1) + (dx + nu));
        const std::size_t j = static_cast<std::size_t>(yj) * w + static_cast<std::size_t>(xj);
        const double s = std::sqrt(g.plane(k)[i]);
        const std::size_t row = k * n + i;
        a[row * n + j] += s;
        a[row * n + i] -= s;
      }
  }
  return a;
}

double largest_singular_value(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> dist;
  std::vector<double> v(cols), av(rows);
  for (double& x : v) x = dist(rng);
  double value = 0.0;
  for (int iter = 0; iter < 5000; ++iter) {
    const double vn = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (double& x : v) x /= vn;
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += a[r * cols + c] * v[c];
      av[r] = s;
    }
    std::vector<double> next(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) next[c] += a[r * cols + c] * av[r];
    const double estimate = std::sqrt(std::sqrt(std::inner_product(next.begin(), next.end(), next.begin(), 0.0)));
    v = std::move(next);
    if (std::abs(estimate - value) <= 1e-14 * estimate) return estimate;
    value = estimate;
  }
  return value;
}

double energy(const std::vector<double>& u, const std::vector<double>& f, const WeightGraph& g, double lambda) {
  double tv = 0.0;
  for (const auto& row : edges_by_pixel(g)) {
    double s = 0.0;
    for (const Edge& e : row) s += e.w * (u[e.j] - u[e.i]) * (u[e.j] - u[e.i]);
    tv += std::sqrt(s);
  }
  double fid = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) fid += (u[i] - f[i]) * (u[i] - f[i]);
  return lambda * tv + 0.5 * fid;
}

Minimizer minimize_energy(const std::vector<double>& f, const WeightGraph& g, double lambda) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const auto rows = edges_by_pixel(g);
  const auto n = static_cast<Eigen::Index>(f.size());
  const VectorXd fv = Eigen::Map<const VectorXd>(f.data(), n);

  auto smoothed = [&](const VectorXd& u, double eps) {
    double tv = 0.0;
    for (const auto& row : rows) {
      double s = eps * eps;
      for (const Edge& e : row) s += e.w * (u[e.j] - u[e.i]) * (u[e.j] - u[e.i]);
      tv += std::sqrt(s);
    }
    return lambda * tv + 0.5 * (u - fv).squaredNorm();
  };
  auto exact = [&](const VectorXd& u) {
    return energy(std::vector<double>(u.data(), u.data() + n), f, g, lambda);
  };

  VectorXd u = fv;
  Minimizer best{f, exact(u)};
  const double range = fv.maxCoeff() - fv.minCoeff();
  for (double eps = std::max(range, 1e-3); eps > 1e-13 * std::max(range, 1.0); eps *= 0.3) {
    for (int step = 0; step < 100; ++step) {
      VectorXd grad = u - fv;
      MatrixXd hess = MatrixXd::Identity(n, n);
      for (const auto& row : rows) {
        // Local gradient g_e = sqrt(w)(u_j - u_i), D row = sqrt(w)(e_j - e_i).
        std::vector<double> gl(row.size());
        double s = eps * eps;
        for (std::size_t a = 0; a < row.size(); ++a) {
          gl[a] = std::sqrt(row[a].w) * (u[row[a].j] - u[row[a].i]);
          s += gl[a] * gl[a];
        }
        const double r = std::sqrt(s);
        // grad += λ Dᵀ g / r
        VectorXd dtg = VectorXd::Zero(n);
        for (std::size_t a = 0; a < row.size(); ++a) {
          const double c = std::sqrt(row[a].w);
          dtg[row[a].j] += c * gl[a];
          dtg[row[a].i] -= c * gl[a];
        }
        grad += lambda * dtg / r;
        // hess += λ (DᵀD / r - Dᵀg gᵀD / r³)
        for (const Edge& e : row) {
          const double c = lambda * e.w / r;
          hess(e.j, e.j) += c;
          hess(e.i, e.i) += c;
          hess(e.i, e.j) -= c;
          hess(e.j, e.i) -= c;
        }
        hess -= (lambda / (r * r * r)) * dtg * dtg.transpose();
      }
      const VectorXd dir = -hess.ldlt().solve(grad);
      const double e0 = smoothed(u, eps);
      double t = 1.0;
      VectorXd trial = u + dir;
      while (smoothed(trial, eps) > e0 + 1e-4 * t * grad.dot(dir) && t > 1e-12) {
        t *= 0.5;
        trial = u + t * dir;
      }
      if (smoothed(trial, eps) > e0) break;
      u = trial;
      const double e = exact(u);
      if (e < best.energy) best = {std::vector<double>(u.data(), u.data() + n), e};
      if (grad.norm() < 1e-13 * (1.0 + fv.norm()) || (t * dir).norm() < 1e-15 * (1.0 + u.norm())) break;
    }
  }
  return best;
}

void classical_jacobi(std::vector<double> a, std::size_t n, std::vector<double>& values,
                      std::vector<double>& vectors) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 10000; ++sweep) {
    std::size_t p = 0, q = 1;
    double biggest = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::abs(a[i * n + j]) > biggest) {
          biggest = std::abs(a[i * n + j]);
          p = i;
          q = j;
        }
    if (biggest < 1e-300) break;
    const double app = a[p * n + p], aqq = a[q * n + q], apq = a[p * n + q];
    const double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
    const double c = std::cos(phi), s = std::sin(phi);
    for (std::size_t k = 0; k < n; ++k) {
      const double akp = a[k * n + p], akq = a[k * n + q];
      a[k * n + p] = c * akp - s * akq;
      a[k * n + q] = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double apk = a[p * n + k], aqk = a[q * n + k];
      a[p * n + k] = c * apk - s * aqk;
      a[q * n + k] = s * apk + c * aqk;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double vkp = v[k * n + p], vkq = v[k * n + q];
      v[k * n + p] = c * vkp - s * vkq;
      v[k * n + q] = s * vkp + c * vkq;
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::sort(order, [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });
  values.assign(n, 0.0);
  vectors.assign(n * n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    values[c] = a[order[c] * n + order[c]];
    for (std::size_t r = 0; r < n; ++r) vectors[r * n + c] = v[r * n + order[c]];
  }
}

Quat operator+(Quat a, Quat b) { return {a.r + b.r, a.i + b.i, a.j + b.j, a.k + b.k}; }
Quat operator-(Quat a, Quat b) { return {a.r - b.r, a.i - b.i, a.j - b.j, a.k - b.k}; }
Quat operator*(Quat a, Quat b) {
  return {a.r * b.r - a.i * b.i - a.j * b.j - a.k * b.k, a.r * b.i + a.i * b.r + a.j * b.k - a.k * b.j,
          a.r * b.j - a.i * b.k + a.j * b.r + a.k * b.i, a.r * b.k + a.i * b.j - a.j * b.i + a.k * b.r};
}
Quat conj(Quat a) { return {a.r, -a.i, -a.j, -a.k}; }
double norm2(Quat a) { return a.r * a.r + a.i * a.i + a.j * a.j + a.k * a.k; }

double q4_block(const std::vector<std::array<double, 4>>& ref, const std::vector<std::array<double, 4>>& test) {
  const double count = static_cast<double>(ref.size());
  auto scale = [](Quat q, double s) { return Quat{q.r * s, q.i * s, q.j * s, q.k * s}; };
  Quat m1{}, m2{}, e12{}, e11{}, e22{};
  for (std::size_t p = 0; p < ref.size(); ++p) {
    const Quat z1{ref[p][0], ref[p][1], ref[p][2], ref[p][3]};
    const Quat z2{test[p][0], test[p][1], test[p][2], test[p][3]};
    m1 = m1 + z1;
    m2 = m2 + z2;
    e12 = e12 + z1 * conj(z2);
    e11 = e11 + z1 * conj(z1);
    e22 = e22 + z2 * conj(z2);
  }
  m1 = scale(m1, 1.0 / count);
  m2 = scale(m2, 1.0 / count);
  // Raw-moment forms: cov = E[z1 z2*] - m1 m2*, var = E|z|² - |m|².
  const Quat cov = scale(e12, 1.0 / count) - m1 * conj(m2);
  const double var1 = e11.r / count - norm2(m1);
  const double var2 = e22.r / count - norm2(m2);
  const double mod1 = std::sqrt(norm2(m1)), mod2 = std::sqrt(norm2(m2));
  const double sd1 = std::sqrt(var1), sd2 = std::sqrt(var2);
  return std::sqrt(norm2(cov)) / (sd1 * sd2) * (2.0 * sd1 * sd2 / (var1 + var2)) *
         (2.0 * mod1 * mod2 / (mod1 * mod1 + mod2 * mod2));
}

double uiqi_block(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    ma += a[p] / n;
    mb += b[p] / n;
  }
  double vaa = 0.0, vbb = 0.0, vab = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    vaa += (a[p] - ma) * (a[p] - ma) / n;
    vbb += (b[p] - mb) * (b[p] - mb) / n;
    vab += (a[p] - ma) * (b[p] - mb) / n;
  }
  // Product of correlation, luminance and contrast factors.
  const double corr = vab / std::sqrt(vaa * vbb);
  const double lum = 2.0 * ma * mb / (ma * ma + mb * mb);
  const double con = 2.0 * std::sqrt(vaa) * std::sqrt(vbb) / (vaa + vbb);
  return corr * lum * con;
}

}  // namespace psr::oracle
