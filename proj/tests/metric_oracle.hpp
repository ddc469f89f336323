#pragma once

// Brute-force clustering metrics for cross-checking the library: per-item
// enumeration for B-cubed, all item pairs for ARI, direct entropy sums for
// V-measure. Quadratic on purpose.

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

namespace oracle {

struct Scores {
  double b3_p, b3_r, b3_f1, h, c, v_f1, ari;
};

inline double hm(double a, double b) { return a + b == 0.0 ? 0.0 : 2.0 * a * b / (a + b); }

inline Scores brute_force(const std::vector<std::size_t>& pred,
                          const std::vector<std::size_t>& gold) {
  const std::size_t n = pred.size();
  Scores s{};

  double p = 0.0, r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double same_pred = 0, same_gold = 0, both = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool sp = pred[j] == pred[i];
      const bool sg = gold[j] == gold[i];
      same_pred += sp;
      same_gold += sg;
      both += sp && sg;
    }
    p += both / same_pred;
    r += both / same_gold;
  }
  s.b3_p = p / n;
  s.b3_r = r / n;
  s.b3_f1 = hm(s.b3_p, s.b3_r);

  auto entropy = [&](const std::vector<std::size_t>& x) {
    std::map<std::size_t, double> count;
    for (std::size_t v : x) count[v] += 1;
    double h = 0.0;
    for (const auto& [v, c] : count) h -= c / n * std::log(c / n);
    return h;
  };
  // H(a | b) = -sum p(a, b) log p(a | b)
  auto conditional = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> marginal;
    for (std::size_t i = 0; i < n; ++i) {
      joint[{a[i], b[i]}] += 1;
      marginal[b[i]] += 1;
    }
    double h = 0.0;
    for (const auto& [key, c] : joint) h -= c / n * std::log(c / marginal[key.second]);
    return h;
  };
  const double hg = entropy(gold);
  const double hp = entropy(pred);
  s.h = hg == 0.0 ? 1.0 : 1.0 - conditional(gold, pred) / hg;
  s.c = hp == 0.0 ? 1.0 : 1.0 - conditional(pred, gold) / hp;
  s.v_f1 = hm(s.h, s.c);

  double a = 0, sp = 0, sg = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool x = pred[i] == pred[j];
      const bool y = gold[i] == gold[j];
      a += x && y;
      sp += x;
      sg += y;
      pairs += 1;
    }
  }
  const double expected = sp * sg / pairs;
  const double top = 0.5 * (sp + sg);
  if (top == expected) {
    // Degenerate: both partitions all-singletons or all-one-cluster.
    s.ari = (a == sp && a == sg) ? 1.0 : 0.0;
  } else {
    s.ari = (a - expected) / (top - expected);
  }
  return s;
}

}  // namespace oracle
