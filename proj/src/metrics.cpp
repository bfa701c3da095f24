#include "psr/metrics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "psr/error.hpp"
#include "psr/parallel.hpp"
#include "psr/pipeline.hpp"

namespace psr {
namespace {

constexpr double kDegenerate = 1e-12;

void check_same(const MultiBandImage& a, const MultiBandImage& b) {
  if (!a.same_shape(b))
    throw DimensionMismatch("images differ in shape: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                            "x" + std::to_string(a.bands()) + " vs " + std::to_string(b.width()) + "x" +
                            std::to_string(b.height()) + "x" + std::to_string(b.bands()));
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::vector<std::size_t> block_origins(std::size_t extent, std::size_t block, std::size_t stride) {
  std::vector<std::size_t> origins;
  for (std::size_t o = 0; o + block <= extent; o += stride) origins.push_back(o);
  return origins;
}

void check_blocks(std::size_t width, std::size_t height, std::size_t block, std::size_t stride) {
  if (block < 1 || stride < 1) throw InvalidArgument("block size and stride must be >= 1");
  if (width < block || height < block)
    throw InvalidArgument("image " + std::to_string(width) + "x" + std::to_string(height) + " is smaller than the " +
                          std::to_string(block) + "-pixel block");
}

/// Averages per-block values in block row-major order; NaN marks a skipped block.
IndexSummary summarize(const std::vector<double>& per_block, const char* what) {
  IndexSummary s;
  double sum = 0.0;
  for (double v : per_block) {
    if (std::isnan(v)) {
      ++s.skipped;
      continue;
    }
    sum += v;
    ++s.used;
  }
  if (s.used == 0) throw DegenerateInput(std::string(what) + ": every block is degenerate");
  s.value = sum / static_cast<double>(s.used);
  return s;
}

double uiqi_block(std::span<const double> a, std::span<const double> b, std::size_t width, std::size_t x0,
                  std::size_t y0, std::size_t block) {
  const double count = static_cast<double>(block * block);
  double sa = 0.0, sb = 0.0;
  for (std::size_t y = y0; y < y0 + block; ++y)
    for (std::size_t x = x0; x < x0 + block; ++x) {
      sa += a[y * width + x];
      sb += b[y * width + x];
    }
  const double ma = sa / count, mb = sb / count;
  double vaa = 0.0, vbb = 0.0, vab = 0.0;
  for (std::size_t y = y0; y < y0 + block; ++y)
    for (std::size_t x = x0; x < x0 + block; ++x) {
      const double da = a[y * width + x] - ma;
      const double db = b[y * width + x] - mb;
      vaa += da * da;
      vbb += db * db;
      vab += da * db;
    }
  vaa /= count;
  vbb /= count;
  vab /= count;
  const double denominator = (vaa + vbb) * (ma * ma + mb * mb);
  if (!(denominator >= kDegenerate)) return std::nan("");
  return (4.0 * vab) * (ma * mb) / denominator;
}

struct Quaternion {
  double r = 0.0, i = 0.0, j = 0.0, k = 0.0;

  Quaternion operator-(const Quaternion& o) const { return {r - o.r, i - o.i, j - o.j, k - o.k}; }
  Quaternion& operator+=(const Quaternion& o) {
    r += o.r;
    i += o.i;
    j += o.j;
    k += o.k;
    return *this;
  }
  Quaternion operator/(double s) const { return {r / s, i / s, j / s, k / s}; }
  Quaternion conj() const { return {r, -i, -j, -k}; }
  friend Quaternion operator*(const Quaternion& p, const Quaternion& q) {
    return {p.r * q.r - p.i * q.i - p.j * q.j - p.k * q.k, p.r * q.i + p.i * q.r + p.j * q.k - p.k * q.j,
            p.r * q.j - p.i * q.k + p.j * q.r + p.k * q.i, p.r * q.k + p.i * q.j - p.j * q.i + p.k * q.r};
  }
  double norm2() const { return r * r + i * i + j * j + k * k; }
};

double q4_block(const MultiBandImage& ref, const MultiBandImage& test, std::size_t x0, std::size_t y0,
                std::size_t block) {
  const std::size_t width = ref.width();
  const double count = static_cast<double>(block * block);
  auto pixel = [&](const MultiBandImage& img, std::size_t x, std::size_t y) {
    const std::size_t n = img.pixels(), p = y * width + x;
    const auto s = img.samples();
    return Quaternion{s[p], s[n + p], s[2 * n + p], s[3 * n + p]};
  };
  Quaternion m1, m2;
  for (std::size_t y = y0; y < y0 + block; ++y)
    for (std::size_t x = x0; x < x0 + block; ++x) {
      m1 += pixel(ref, x, y);
      m2 += pixel(test, x, y);
    }
  m1 = m1 / count;
  m2 = m2 / count;
  Quaternion c11, c22, c12;
  for (std::size_t y = y0; y < y0 + block; ++y)
    for (std::size_t x = x0; x < x0 + block; ++x) {
      const Quaternion d1 = pixel(ref, x, y) - m1;
      const Quaternion d2 = pixel(test, x, y) - m2;
      c11 += d1 * d1.conj();
      c22 += d2 * d2.conj();
      c12 += d1 * d2.conj();
    }
  const double var1 = c11.r / count;
  const double var2 = c22.r / count;
  const double cov = std::sqrt((c12 / count).norm2());
  const double n1 = m1.norm2(), n2 = m2.norm2();
  const double denominator = (var1 + var2) * (n1 + n2);
  if (!(denominator >= kDegenerate)) return std::nan("");
  // |m1||m2| as sqrt(n1 n2) keeps the identity case exactly 1.
  return (4.0 * cov) * std::sqrt(n1 * n2) / denominator;
}

}  // namespace

double MetricReport::at(std::string_view name) const {
  for (const auto& [k, v] : values)
    if (k == name) return v;
  throw InvalidArgument("metric '" + std::string(name) + "' is not in the report");
}

bool MetricReport::contains(std::string_view name) const {
  return std::ranges::any_of(values, [&](const auto& kv) { return kv.first == name; });
}

std::string to_key_value(const MetricReport& report) {
  std::string out;
  for (const auto& [k, v] : report.values) out += k + "=" + shortest(v) + "\n";
  for (const auto& [k, v] : report.parameters) out += "param." + k + "=" + shortest(v) + "\n";
  return out;
}

std::string to_table(const MetricReport& report) {
  std::ostringstream os;
  std::size_t wide = 6;
  for (const auto& [k, v] : report.values) wide = std::max(wide, k.size());
  char line[128];
  std::snprintf(line, sizeof line, "%-*s  %12s\n", static_cast<int>(wide), "metric", "value");
  os << line << std::string(wide + 14, '-') << "\n";
  for (const auto& [k, v] : report.values) {
    std::snprintf(line, sizeof line, "%-*s  %12.6f\n", static_cast<int>(wide), k.c_str(), v);
    os << line;
  }
  return os.str();
}

std::string to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  for (const auto& [k, v] : report.values) j["metrics"][k] = v;
  for (const auto& [k, v] : report.parameters) j["parameters"][k] = v;
  return j.dump(2);
}

double rmse(const MultiBandImage& ref, const MultiBandImage& test) {
  check_same(ref, test);
  const auto a = ref.samples(), b = test.samples();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double ergas(const MultiBandImage& ref, const MultiBandImage& test, double ratio) {
  check_same(ref, test);
  if (!(ratio > 0.0)) throw InvalidArgument("ERGAS ratio must be positive");
  const double n = static_cast<double>(ref.pixels());
  double acc = 0.0;
  for (std::size_t m = 0; m < ref.bands(); ++m) {
    const auto a = ref.band(m), b = test.band(m);
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / n;
    if (mean == 0.0) throw DegenerateInput("ERGAS: reference band " + std::to_string(m) + " has zero mean");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    const double rel = std::sqrt(sum / n) / mean;
    acc += rel * rel;
  }
  return 100.0 / ratio * std::sqrt(acc / static_cast<double>(ref.bands()));
}

IndexSummary sam_summary(const MultiBandImage& ref, const MultiBandImage& test) {
  check_same(ref, test);
  const std::size_t n = ref.pixels();
  const auto a = ref.samples(), b = test.samples();
  IndexSummary s;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t m = 0; m < ref.bands(); ++m) {
      const double x = a[m * n + i], y = b[m * n + i];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) {
      ++s.skipped;
      continue;
    }
    sum += std::acos(std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0));
    ++s.used;
  }
  if (s.used == 0) throw DegenerateInput("SAM: every pixel has a zero spectrum");
  s.value = sum / static_cast<double>(s.used) * 180.0 / std::numbers::pi;
  return s;
}

double sam(const MultiBandImage& ref, const MultiBandImage& test) { return sam_summary(ref, test).value; }

IndexSummary uiqi_summary(const Field& a, const Field& b, std::size_t block, std::size_t stride) {
  if (!a.same_shape(b)) throw DimensionMismatch("UIQI inputs differ in shape");
  check_blocks(a.width(), a.height(), block, stride);
  const auto xs = block_origins(a.width(), block, stride);
  const auto ys = block_origins(a.height(), block, stride);
  std::vector<double> per_block(xs.size() * ys.size());
  parallel::for_range(ys.size(), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t by = y0; by < y1; ++by)
      for (std::size_t bx = 0; bx < xs.size(); ++bx)
        per_block[by * xs.size() + bx] = uiqi_block(a.values(), b.values(), a.width(), xs[bx], ys[by], block);
  });
  return summarize(per_block, "UIQI");
}

double uiqi(const Field& a, const Field& b, std::size_t block, std::size_t stride) {
  return uiqi_summary(a, b, block, stride).value;
}

IndexSummary q2n_summary(const MultiBandImage& ref, const MultiBandImage& test, std::size_t block,
                         std::size_t stride) {
  check_same(ref, test);
  if (ref.bands() != 4)
    throw InvalidArgument("Q2^n is implemented for 4 bands (Q4) only, got " + std::to_string(ref.bands()));
  check_blocks(ref.width(), ref.height(), block, stride);
  const auto xs = block_origins(ref.width(), block, stride);
  const auto ys = block_origins(ref.height(), block, stride);
  std::vector<double> per_block(xs.size() * ys.size());
  parallel::for_range(ys.size(), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t by = y0; by < y1; ++by)
      for (std::size_t bx = 0; bx < xs.size(); ++bx)
        per_block[by * xs.size() + bx] = q4_block(ref, test, xs[bx], ys[by], block);
  });
  return summarize(per_block, "Q4");
}

double q2n(const MultiBandImage& ref, const MultiBandImage& test, std::size_t block, std::size_t stride) {
  return q2n_summary(ref, test, block, stride).value;
}

QnrResult qnr(const MultiBandImage& fused, const MultiBandImage& ms, const PanImage& pan, std::size_t ratio,
              std::size_t block, std::size_t stride) {
  if (ratio < 1) throw InvalidArgument("QNR ratio must be >= 1");
  if (fused.bands() != ms.bands()) throw DimensionMismatch("fused and MS band counts differ");
  if (fused.bands() < 2) throw InvalidArgument("QNR needs at least two bands");
  if (fused.width() != ms.width() * ratio || fused.height() != ms.height() * ratio)
    throw DimensionMismatch("fused image must be ratio times the MS size");
  if (pan.width() != fused.width() || pan.height() != fused.height())
    throw DimensionMismatch("PAN and fused image differ in size");

  const std::size_t bands = fused.bands();
  std::vector<Field> f, l;
  for (std::size_t m = 0; m < bands; ++m) {
    f.push_back(fused.band_field(m));
    l.push_back(ms.band_field(m));
  }

  double spectral = 0.0;
  for (std::size_t m = 0; m < bands; ++m)
    for (std::size_t n = m + 1; n < bands; ++n)
      spectral += 2.0 * std::abs(uiqi(f[m], f[n], block, stride) - uiqi(l[m], l[n], block, stride));
  const double d_lambda = spectral / static_cast<double>(bands * (bands - 1));

  const Field pan_low = ratio == 1 ? Field(pan) : mtf_downsample(pan, ratio, 0.15);
  double spatial = 0.0;
  for (std::size_t m = 0; m < bands; ++m)
    spatial += std::abs(uiqi(f[m], pan, block, stride) - uiqi(l[m], pan_low, block, stride));
  const double d_s = spatial / static_cast<double>(bands);

  return {d_lambda, d_s, (1.0 - d_lambda) * (1.0 - d_s)};
}

MetricReport evaluate_full_reference(const MultiBandImage& ref, const MultiBandImage& test, double ratio,
                                     std::size_t block) {
  MetricReport report;
  report.values = {{"RMSE", rmse(ref, test)},
                   {"ERGAS", ergas(ref, test, ratio)},
                   {"SAM", sam(ref, test)},
                   {"Q4", q2n(ref, test, block, block)}};
  report.parameters = {{"ratio", ratio},
                       {"block", static_cast<double>(block)},
                       {"stride", static_cast<double>(block)}};
  return report;
}

MetricReport evaluate_no_reference(const MultiBandImage& fused, const MultiBandImage& ms, const PanImage& pan,
                                   std::size_t ratio, std::size_t block) {
  const QnrResult r = qnr(fused, ms, pan, ratio, block, 1);
  MetricReport report;
  report.values = {{"D_lambda", r.d_lambda}, {"D_s", r.d_s}, {"QNR", r.qnr}};
  report.parameters = {{"ratio", static_cast<double>(ratio)},
                       {"block", static_cast<double>(block)},
                       {"stride", 1.0},
                       {"p", 1.0},
                       {"q", 1.0},
                       {"alpha", 1.0},
                       {"beta", 1.0}};
  return report;
}

}  // namespace psr
