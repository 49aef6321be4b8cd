#include "reachpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace reachpred {

double accuracy(std::span<const TrajectoryPrediction> preds) {
  if (preds.empty()) throw std::invalid_argument("accuracy: no trajectories");
  std::size_t hit = 0, total = 0;
  for (const auto& t : preds) {
    if (t.predicted.size() != t.truth.size()) throw std::invalid_argument("accuracy: length mismatch");
    for (std::size_t l = 0; l < t.truth.size(); ++l) hit += (t.predicted[l] == t.truth[l]);
    total += t.truth.size();
  }
  if (total == 0) throw std::invalid_argument("accuracy: empty trajectories");
  return 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

namespace {

template <bool First>
double avoid_step_error(std::span<const TrajectoryPrediction> preds, int avoid_class) {
  if (preds.empty()) throw std::invalid_argument("d_start/d_end: no trajectories");
  auto locate = [&](const std::vector<int>& seq) -> long {
    if constexpr (First) {
      auto it = std::find(seq.begin(), seq.end(), avoid_class);
      return it == seq.end() ? -1 : static_cast<long>(it - seq.begin());
    } else {
      auto it = std::find(seq.rbegin(), seq.rend(), avoid_class);
      return it == seq.rend() ? -1 : static_cast<long>(seq.rend() - it) - 1;
    }
  };
  double sum = 0.0;
  for (const auto& t : preds) {
    if (t.predicted.size() != t.truth.size()) throw std::invalid_argument("d_start/d_end: length mismatch");
    const long p = locate(t.predicted), q = locate(t.truth);
    if (p < 0 && q < 0) continue;
    sum += (p < 0 || q < 0) ? static_cast<double>(t.truth.size()) : static_cast<double>(std::labs(p - q));
  }
  return sum / static_cast<double>(preds.size());
}

}  // namespace

double d_start(std::span<const TrajectoryPrediction> preds, int avoid_class) {
  return avoid_step_error<true>(preds, avoid_class);
}

double d_end(std::span<const TrajectoryPrediction> preds, int avoid_class) {
  return avoid_step_error<false>(preds, avoid_class);
}

namespace {

struct Ranked {
  std::vector<double> ranks;  // pooled mid-ranks, a first then b
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

Ranked midranks(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() + b.size();
  std::vector<std::pair<double, std::size_t>> v;
  v.reserve(n);
  for (std::size_t i = 0; i < a.size(); ++i) v.push_back({a[i], i});
  for (std::size_t i = 0; i < b.size(); ++i) v.push_back({b[i], a.size() + i});
  std::sort(v.begin(), v.end());
  Ranked r;
  r.ranks.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[j + 1].first == v[i].first) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r.ranks[v[k].second] = mid;
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

// Visits every size-k subset of the pooled ranks; returns the fraction whose
// U deviates from the mean at least as far as the observed one.
double exact_two_sided(const std::vector<double>& ranks, std::size_t k, double u_obs) {
  const std::size_t n = ranks.size();
  const double n1 = static_cast<double>(k), n2 = static_cast<double>(n - k);
  const double centre = 0.5 * n1 * n2;
  const double dev_obs = std::abs(u_obs - centre) - 1e-9;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  double extreme = 0.0, total = 0.0;
  while (true) {
    double rs = 0.0;
    for (auto i : idx) rs += ranks[i];
    const double u = rs - n1 * (n1 + 1.0) / 2.0;
    total += 1.0;
    if (std::abs(u - centre) >= dev_obs) extreme += 1.0;
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t q = pos; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  return std::min(1.0, extreme / total);
}

}  // namespace

MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 3 || b.size() < 3) throw std::invalid_argument("mann_whitney_u: need at least 3 samples per side");
  const Ranked r = midranks(a, b);
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double n = n1 + n2;
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum += r.ranks[i];

  MannWhitney out;
  out.u = rank_sum - n1 * (n1 + 1.0) / 2.0;
  if (r.tie_term == n * n * n - n) {  // every value tied
    out.p = 1.0;
    out.exact = true;
    return out;
  }
  // Exact enumeration unless both sides are large or the subset count explodes.
  double subsets = 1.0;
  for (std::size_t i = 1; i <= a.size(); ++i) subsets = subsets * (n - n1 + static_cast<double>(i)) / static_cast<double>(i);
  if ((a.size() <= 8 || b.size() <= 8) && subsets <= 5e6) {
    out.exact = true;
    out.p = exact_two_sided(r.ranks, a.size(), out.u);
    return out;
  }
  const double mean = 0.5 * n1 * n2;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  const double dev = std::max(0.0, std::abs(out.u - mean) - 0.5);
  const double z = dev / std::sqrt(var);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

}  // namespace reachpred
