#pragma once

// Independent reference implementations used only by the tests. They favour
// directness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <tuple>
#include <vector>

#include "acrst/types.hpp"

namespace oracle {

constexpr double kSentinel = 1e9;

inline std::vector<double> pseudo_recall(const std::vector<std::int64_t>& nu,
                                         const std::vector<std::int64_t>& nl, double r) {
  std::vector<double> pr;
  for (std::size_t k = 0; k < nl.size(); ++k) {
    pr.push_back(nl[k] == 0 ? kSentinel : double(nu[k]) / (r * double(nl[k])));
  }
  return pr;
}

// Rank of class k in the descending order (ties: lower id first), counted
// directly instead of sorted.
inline std::size_t descending_rank(const std::vector<double>& pr, const std::vector<bool>& use,
                                   std::size_t k) {
  std::size_t rank = 0;
  for (std::size_t j = 0; j < pr.size(); ++j) {
    if (!use[j] || j == k) continue;
    if (pr[j] > pr[k] || (pr[j] == pr[k] && j < k)) ++rank;
  }
  return rank;
}

inline std::vector<double> affr_mu(const std::vector<double>& pr, double beta) {
  const std::size_t n_all = pr.size();
  std::vector<bool> use(n_all);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < n_all; ++k) {
    use[k] = pr[k] < kSentinel;
    if (use[k]) {
      sum += pr[k];
      ++n;
    }
  }
  if (n == 0 || sum == 0.0) return std::vector<double>(n_all, 1.0 / double(n_all));

  std::vector<double> at_rank(n);
  for (std::size_t k = 0; k < n_all; ++k) {
    if (use[k]) at_rank[descending_rank(pr, use, k)] = pr[k];
  }
  std::vector<double> raw(n_all);
  double lowest = INFINITY;
  for (std::size_t k = 0; k < n_all; ++k) {
    if (!use[k]) continue;
    raw[k] = std::pow(at_rank[n - 1 - descending_rank(pr, use, k)] / sum, beta);
    lowest = std::min(lowest, raw[k]);
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n_all; ++k) {
    if (!use[k]) raw[k] = lowest;
    total += raw[k];
  }
  for (auto& w : raw) w /= total;
  return raw;
}

// Visible fraction by counting unit cells; boxes must have integer coordinates.
inline double raster_visible(const acrst::BBox& inst, const std::vector<acrst::BBox>& occ) {
  const auto x0 = static_cast<long>(inst.x), y0 = static_cast<long>(inst.y);
  const auto x1 = static_cast<long>(inst.right()), y1 = static_cast<long>(inst.bottom());
  long visible = 0;
  for (long x = x0; x < x1; ++x) {
    for (long y = y0; y < y1; ++y) {
      const double cx = x + 0.5, cy = y + 0.5;
      bool covered = false;
      for (const auto& o : occ) {
        if (cx > o.x && cx < o.right() && cy > o.y && cy < o.bottom()) {
          covered = true;
          break;
        }
      }
      if (!covered) ++visible;
    }
  }
  return double(visible) / double((x1 - x0) * (y1 - y0));
}

inline double iou(const acrst::BBox& a, const acrst::BBox& b) {
  const double iw = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
  const double ih = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct Pair {
  std::size_t pred;
  std::size_t gt;
  bool operator==(const Pair&) const = default;
};

// Enumerates every one-to-one assignment (each prediction takes a gt or
// nothing) and returns the one that is lexicographically best when
// predictions are visited in `order`: prefer matched over unmatched, then
// higher IoU, then lower gt index.
inline std::vector<Pair> exhaustive_match(const std::vector<acrst::Prediction>& preds,
                                          const std::vector<acrst::Instance>& gts,
                                          const std::vector<std::size_t>& order, double thr,
                                          bool class_aware) {
  const std::size_t np = preds.size(), ng = gts.size();
  std::vector<long> assign(np, -1), best;
  std::vector<bool> used(ng, false);

  // Key per prediction in visiting order: (matched, iou, -gt).
  using Key = std::vector<std::tuple<int, double, long>>;
  Key best_key;
  bool have_best = false;
  auto key_of = [&](const std::vector<long>& a) {
    Key key;
    for (std::size_t i : order) {
      if (a[i] < 0) {
        key.emplace_back(0, 0.0, 0);
      } else {
        key.emplace_back(1, oracle::iou(preds[i].bbox, gts[a[i]].bbox), -a[i]);
      }
    }
    return key;
  };

  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == np) {
      Key key = key_of(assign);
      if (!have_best || key > best_key) {
        best_key = key;
        best = assign;
        have_best = true;
      }
      return;
    }
    assign[i] = -1;
    rec(i + 1);
    for (std::size_t g = 0; g < ng; ++g) {
      if (used[g]) continue;
      if (class_aware && preds[i].class_id != gts[g].class_id) continue;
      if (oracle::iou(preds[i].bbox, gts[g].bbox) < thr) continue;
      used[g] = true;
      assign[i] = static_cast<long>(g);
      rec(i + 1);
      used[g] = false;
    }
    assign[i] = -1;
  };
  rec(0);

  std::vector<Pair> pairs;
  for (std::size_t i : order) {
    if (best[i] >= 0) pairs.push_back({i, static_cast<std::size_t>(best[i])});
  }
  return pairs;
}

// Teacher after n EMA steps toward a constant student.
inline double ema_closed_form(double t0, double s, double alpha, int n) {
  const double an = std::pow(alpha, n);
  return an * t0 + (1.0 - an) * s;
}

// Upper 0.001 critical values of the chi-square distribution, df = 1..9.
inline double chi2_critical_001(int df) {
  static const double table[] = {10.828, 13.816, 16.266, 18.467, 20.515,
                                 22.458, 24.322, 26.124, 27.877};
  return table[df - 1];
}

}  // namespace oracle
