#include "reachpred/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace reachpred {

int num_classes(Task task) { return task == Task::exact ? 3 : 2; }

int class_of(Action a, Task task) {
  if (task == Task::exact) return static_cast<int>(a);
  return a == Action::straight ? 0 : 1;
}

std::string_view task_name(Task task) { return task == Task::exact ? "I" : "II"; }

Task parse_task(std::string_view name) {
  if (name == "I" || name == "1" || name == "exact") return Task::exact;
  if (name == "II" || name == "2" || name == "avoid") return Task::avoid;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

void Dataset::validate() const {
  if (y.empty()) throw std::invalid_argument("dataset is empty");
  if (x.size() != y.size() || traj.size() != y.size())
    throw std::invalid_argument("dataset columns have different lengths");
  const std::size_t d = feature_count(layout);
  for (const auto& row : x)
    if (row.size() != d) throw std::invalid_argument("dataset row does not match its layout");
  for (int label : y)
    if (label < 0 || label >= classes()) throw std::invalid_argument("dataset label out of range");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.layout = layout;
  out.task = task;
  out.subject_id = subject_id;
  for (std::size_t r : rows) {
    out.x.push_back(x[r]);
    out.y.push_back(y[r]);
    out.traj.push_back(traj[r]);
  }
  return out;
}

Standardization Standardization::fit(const Dataset& d) {
  const std::size_t dims = d.dims();
  Standardization s;
  s.mean.assign(dims, 0.0);
  s.scale.assign(dims, 0.0);
  const double n = static_cast<double>(d.size());
  for (const auto& row : d.x)
    for (std::size_t f = 0; f < dims; ++f) s.mean[f] += row[f];
  for (auto& m : s.mean) m /= n;
  for (const auto& row : d.x)
    for (std::size_t f = 0; f < dims; ++f) s.scale[f] += (row[f] - s.mean[f]) * (row[f] - s.mean[f]);
  for (auto& v : s.scale) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;
  }
  return s;
}

std::vector<double> Standardization::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("feature vector length mismatch");
  std::vector<double> out(x.size());
  for (std::size_t f = 0; f < x.size(); ++f) out[f] = (x[f] - mean[f]) / scale[f];
  return out;
}

namespace {

std::vector<std::vector<double>> standardize_all(const Dataset& d, const Standardization& s) {
  std::vector<std::vector<double>> out;
  out.reserve(d.size());
  for (const auto& row : d.x) out.push_back(s.apply(row));
  return out;
}

void require_two_classes(const Dataset& d, const char* who) {
  std::set<int> seen(d.y.begin(), d.y.end());
  if (seen.size() < 2) throw TrainingError(std::string(who) + ": need at least two distinct labels");
}

double dot_with_bias(const double* w, std::span<const double> x) {
  double s = w[x.size()];
  for (std::size_t f = 0; f < x.size(); ++f) s += w[f] * x[f];
  return s;
}

void softmax_inplace(std::vector<double>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (auto& v : s) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : s) v /= z;
}

// Largest eigenvalue of mean(x~ x~^T) with x~ = [x, 1], by power iteration.
double second_moment_eigenvalue(const std::vector<std::vector<double>>& x) {
  const std::size_t d = x.front().size() + 1;
  std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d))), w(d);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    std::fill(w.begin(), w.end(), 0.0);
    for (const auto& row : x) {
      const double proj = dot_with_bias(v.data(), row);
      for (std::size_t f = 0; f + 1 < d; ++f) w[f] += proj * row[f];
      w[d - 1] += proj;
    }
    double norm = 0.0;
    for (auto& e : w) {
      e /= static_cast<double>(x.size());
      norm += e * e;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (std::size_t f = 0; f < d; ++f) v[f] = w[f] / norm;
  }
  return lambda;
}

}  // namespace

double logistic_objective(std::span<const double> weights, const std::vector<std::vector<double>>& x,
                          std::span<const int> y, int classes, double l2) {
  const std::size_t d = x.front().size();
  double ll = 0.0;
  std::vector<double> s(classes);
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (int c = 0; c < classes; ++c) s[c] = dot_with_bias(weights.data() + c * (d + 1), x[n]);
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - m);
    ll += s[y[n]] - m - std::log(z);
  }
  ll /= static_cast<double>(x.size());
  double pen = 0.0;
  for (int c = 0; c < classes; ++c)
    for (std::size_t f = 0; f < d; ++f) pen += weights[c * (d + 1) + f] * weights[c * (d + 1) + f];
  return ll - 0.5 * l2 * pen;
}

std::vector<double> logistic_gradient(std::span<const double> weights,
                                      const std::vector<std::vector<double>>& x, std::span<const int> y,
                                      int classes, double l2) {
  const std::size_t d = x.front().size();
  std::vector<double> g(weights.size(), 0.0);
  std::vector<double> p(classes);
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (int c = 0; c < classes; ++c) p[c] = dot_with_bias(weights.data() + c * (d + 1), x[n]);
    softmax_inplace(p);
    for (int c = 0; c < classes; ++c) {
      const double r = (c == y[n] ? 1.0 : 0.0) - p[c];
      double* gc = g.data() + c * (d + 1);
      for (std::size_t f = 0; f < d; ++f) gc[f] += r * x[n][f];
      gc[d] += r;
    }
  }
  const double inv = 1.0 / static_cast<double>(x.size());
  for (int c = 0; c < classes; ++c)
    for (std::size_t f = 0; f <= d; ++f) {
      double& gv = g[c * (d + 1) + f];
      gv *= inv;
      if (f < d) gv -= l2 * weights[c * (d + 1) + f];
    }
  return g;
}

LogisticModel train_logistic(const Dataset& data, double l2, double lr, int epochs, std::uint64_t seed) {
  data.validate();
  require_two_classes(data, "train_logistic");
  if (!(l2 >= 0.0) || !(lr > 0.0) || epochs < 1) throw std::invalid_argument("train_logistic: bad hyperparameters");

  LogisticModel m;
  m.layout = data.layout;
  m.classes = data.classes();
  m.dims = data.dims();
  m.l2 = l2;
  m.epochs = epochs;
  m.seed = seed;
  m.standardization = Standardization::fit(data);
  const auto xs = standardize_all(data, m.standardization);

  // The log-likelihood Hessian is bounded by 1/2 * mean(x~ x~^T) in operator norm.
  const double smooth = 0.5 * second_moment_eigenvalue(xs) * 1.05 + l2;
  m.stability_bound = 1.0 / smooth;
  m.lr = std::min(lr, m.stability_bound);

  m.weights.assign(static_cast<std::size_t>(m.classes) * (m.dims + 1), 0.0);
  for (int e = 0; e < epochs; ++e) {
    const auto g = logistic_gradient(m.weights, xs, data.y, m.classes, l2);
    for (std::size_t i = 0; i < g.size(); ++i) m.weights[i] += m.lr * g[i];
    const double obj = logistic_objective(m.weights, xs, data.y, m.classes, l2);
    if (!std::isfinite(obj)) throw TrainingError("train_logistic: objective diverged (NaN)");
    m.objective_trace.push_back(obj);
  }
  m.final_loglik = logistic_objective(m.weights, xs, data.y, m.classes, 0.0);
  return m;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int best = 0;
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[n].feature >= 0) {
      stack.push_back({nodes[n].left, d + 1});
      stack.push_back({nodes[n].right, d + 1});
    }
  }
  return best;
}

namespace {

double gini(std::span<const double> counts, double n) {
  if (n <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += (c / n) * (c / n);
  return 1.0 - s;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& d, DecisionTree& tree) : d_(d), tree_(tree) {}

  int build(std::vector<std::size_t> idx, int depth) {
    const int classes = tree_.classes;
    std::vector<double> counts(classes, 0.0);
    for (auto r : idx) counts[d_.y[r]] += 1.0;
    const double n = static_cast<double>(idx.size());

    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    {
      TreeNode& node = tree_.nodes.back();
      node.freq.resize(classes);
      for (int c = 0; c < classes; ++c) node.freq[c] = counts[c] / n;
    }
    const bool pure = *std::max_element(counts.begin(), counts.end()) == n;
    const auto min_leaf = static_cast<std::size_t>(tree_.min_leaf);
    if (pure || depth >= tree_.max_depth || idx.size() < 2 * min_leaf) return id;

    int best_f = -1;
    double best_thr = 0.0;
    // Zero-gain splits are accepted (XOR-like data has no informative first split).
    double best_imp = gini(counts, n) + 2e-12;
    const std::size_t dims = d_.dims();
    std::vector<std::size_t> order = idx;
    std::vector<double> left(classes), right(classes);
    for (std::size_t f = 0; f < dims; ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return d_.x[a][f] < d_.x[b][f]; });
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      for (std::size_t p = 0; p + 1 < order.size(); ++p) {
        const int label = d_.y[order[p]];
        left[label] += 1.0;
        right[label] -= 1.0;
        const double lo = d_.x[order[p]][f];
        const double hi = d_.x[order[p + 1]][f];
        if (!(lo < hi)) continue;
        const std::size_t nl = p + 1, nr = order.size() - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double imp = (static_cast<double>(nl) * gini(left, static_cast<double>(nl)) +
                            static_cast<double>(nr) * gini(right, static_cast<double>(nr))) / n;
        if (imp < best_imp - 1e-12) {
          double thr = lo + 0.5 * (hi - lo);
          if (!(thr < hi)) thr = lo;
          best_f = static_cast<int>(f);
          best_thr = thr;
          best_imp = imp;
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<std::size_t> li, ri;
    for (auto r : idx) (d_.x[r][best_f] <= best_thr ? li : ri).push_back(r);
    const int l = build(std::move(li), depth + 1);
    const int r = build(std::move(ri), depth + 1);
    TreeNode& node = tree_.nodes[id];
    node.feature = best_f;
    node.threshold = best_thr;
    node.left = l;
    node.right = r;
    return id;
  }

 private:
  const Dataset& d_;
  DecisionTree& tree_;
};

}  // namespace

DecisionTree train_tree(const Dataset& data, int max_depth, int min_leaf, std::uint64_t seed) {
  data.validate();
  if (max_depth < 0 || min_leaf < 1) throw std::invalid_argument("train_tree: bad hyperparameters");
  DecisionTree t;
  t.layout = data.layout;
  t.classes = data.classes();
  t.max_depth = max_depth;
  t.min_leaf = min_leaf;
  t.seed = seed;
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  TreeBuilder(data, t).build(std::move(idx), 0);
  return t;
}

namespace {

// (1/(2C))|w|^2 + mean hinge for one binary problem; bias unpenalized.
double svm_objective(std::span<const double> w, const std::vector<std::vector<double>>& x,
                     std::span<const double> sign, double lambda) {
  const std::size_t d = x.front().size();
  double hinge = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) hinge += std::max(0.0, 1.0 - sign[n] * dot_with_bias(w.data(), x[n]));
  double pen = 0.0;
  for (std::size_t f = 0; f < d; ++f) pen += w[f] * w[f];
  return 0.5 * lambda * pen + hinge / static_cast<double>(x.size());
}

std::vector<double> fit_hinge(const std::vector<std::vector<double>>& x, std::span<const double> sign,
                              double lambda, int epochs) {
  const std::size_t d = x.front().size();
  std::vector<double> w(d + 1, 0.0), avg(d + 1, 0.0), g(d + 1);
  const int burn = epochs / 2;
  int averaged = 0;
  const double inv_n = 1.0 / static_cast<double>(x.size());
  for (int t = 1; t <= epochs; ++t) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
      if (sign[n] * dot_with_bias(w.data(), x[n]) < 1.0) {
        for (std::size_t f = 0; f < d; ++f) g[f] -= sign[n] * x[n][f];
        g[d] -= sign[n];
      }
    }
    for (auto& v : g) v *= inv_n;
    for (std::size_t f = 0; f < d; ++f) g[f] += lambda * w[f];
    const double eta = 1.0 / (lambda * t + 2.0);
    for (std::size_t f = 0; f <= d; ++f) w[f] -= eta * g[f];
    if (t > burn) {
      ++averaged;
      for (std::size_t f = 0; f <= d; ++f) avg[f] += (w[f] - avg[f]) / averaged;
    }
  }
  return avg;
}

}  // namespace

LinearSvm train_svm(const Dataset& data, double c, int epochs, std::uint64_t seed) {
  data.validate();
  require_two_classes(data, "train_svm");
  if (!(c > 0.0) || epochs < 2) throw std::invalid_argument("train_svm: bad hyperparameters");
  LinearSvm m;
  m.layout = data.layout;
  m.classes = data.classes();
  m.dims = data.dims();
  m.c = c;
  m.epochs = epochs;
  m.seed = seed;
  m.standardization = Standardization::fit(data);
  const auto xs = standardize_all(data, m.standardization);
  const double lambda = 1.0 / c;

  const int rows = m.classes == 2 ? 1 : m.classes;
  std::vector<double> sign(data.size());
  m.final_objective = 0.0;
  for (int k = 0; k < rows; ++k) {
    const int positive = m.classes == 2 ? 1 : k;
    for (std::size_t n = 0; n < data.size(); ++n) sign[n] = data.y[n] == positive ? 1.0 : -1.0;
    const auto w = fit_hinge(xs, sign, lambda, epochs);
    m.final_objective += svm_objective(w, xs, sign, lambda);
    m.weights.insert(m.weights.end(), w.begin(), w.end());
  }
  return m;
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::logistic: return "LR";
    case Family::tree: return "DT";
    case Family::svm: return "SVM";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "LR") return Family::logistic;
  if (name == "DT") return Family::tree;
  if (name == "SVM") return Family::svm;
  throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

std::vector<Hyper> default_grid(Family f) {
  std::vector<Hyper> g;
  switch (f) {
    case Family::logistic:
      for (double l2 : {1.0, 0.1, 0.01, 0.001}) g.push_back({.l2 = l2});
      break;
    case Family::tree:
      for (int depth = 2; depth <= 10; ++depth)
        for (int leaf : {10, 5, 1}) g.push_back({.max_depth = depth, .min_leaf = leaf});
      break;
    case Family::svm:
      for (double c : {0.01, 0.1, 1.0, 10.0}) g.push_back({.c = c});
      break;
  }
  return g;
}

namespace {

// Leaf-only tree: the fallback when a training fold holds a single class.
DecisionTree constant_model(const Dataset& data, std::uint64_t seed) { return train_tree(data, 0, 1, seed); }

bool single_class(const Dataset& d) {
  return std::all_of(d.y.begin(), d.y.end(), [&](int v) { return v == d.y.front(); });
}

}  // namespace

Classifier train(const Dataset& data, Family f, const Hyper& h, std::uint64_t seed,
                 const TrainSettings& settings) {
  if (f != Family::tree && single_class(data)) return constant_model(data, seed);
  switch (f) {
    case Family::logistic: return train_logistic(data, h.l2, settings.lr, settings.lr_epochs, seed);
    case Family::tree: return train_tree(data, h.max_depth, h.min_leaf, seed);
    case Family::svm: return train_svm(data, h.c, settings.svm_epochs, seed);
  }
  throw std::invalid_argument("unknown family");
}

FeatureSetId layout_of(const Classifier& m) {
  return std::visit([](const auto& v) { return v.layout; }, m);
}

int classes_of(const Classifier& m) {
  return std::visit([](const auto& v) { return v.classes; }, m);
}

Family family_of(const Classifier& m) {
  if (std::holds_alternative<LogisticModel>(m)) return Family::logistic;
  if (std::holds_alternative<DecisionTree>(m)) return Family::tree;
  return Family::svm;
}

namespace {

struct ProbaVisitor {
  std::span<const double> x;

  std::vector<double> operator()(const LogisticModel& m) const {
    const auto xs = m.standardization.apply(x);
    std::vector<double> s(m.classes);
    for (int c = 0; c < m.classes; ++c) s[c] = dot_with_bias(m.weights.data() + c * (m.dims + 1), xs);
    softmax_inplace(s);
    return s;
  }

  std::vector<double> operator()(const DecisionTree& t) const {
    int n = 0;
    while (t.nodes[n].feature >= 0) {
      const auto& node = t.nodes[n];
      if (static_cast<std::size_t>(node.feature) >= x.size())
        throw std::invalid_argument("feature vector too short for tree");
      n = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return t.nodes[n].freq;
  }

  std::vector<double> operator()(const LinearSvm& m) const {
    const auto xs = m.standardization.apply(x);
    std::vector<double> s;
    if (m.classes == 2) {
      const double margin = dot_with_bias(m.weights.data(), xs);
      s = {-margin, margin};
    } else {
      s.resize(m.classes);
      for (int c = 0; c < m.classes; ++c) s[c] = dot_with_bias(m.weights.data() + c * (m.dims + 1), xs);
    }
    softmax_inplace(s);
    return s;
  }
};

}  // namespace

std::vector<double> predict_proba(const Classifier& m, std::span<const double> features) {
  return std::visit(ProbaVisitor{features}, m);
}

std::vector<double> predict_proba(const Classifier& m, const FeatureVector& f) {
  if (f.layout != layout_of(m))
    throw std::invalid_argument("feature layout " + std::string(feature_set_name(f.layout)) +
                                " does not match model layout " +
                                std::string(feature_set_name(layout_of(m))));
  return predict_proba(m, std::span<const double>(f.values));
}

int predict(const Classifier& m, std::span<const double> features) {
  const auto p = predict_proba(m, features);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

CvResult cross_validate(const Dataset& data, Family f, const std::vector<Hyper>& grid, int folds,
                        std::uint64_t seed, const TrainSettings& settings) {
  data.validate();
  if (grid.empty()) throw std::invalid_argument("cross_validate: empty hyperparameter grid");
  if (folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
  std::vector<int> trajs(data.traj.begin(), data.traj.end());
  std::sort(trajs.begin(), trajs.end());
  trajs.erase(std::unique(trajs.begin(), trajs.end()), trajs.end());
  const std::size_t k = trajs.size();
  if (k < static_cast<std::size_t>(folds))
    throw std::invalid_argument("cross_validate: fewer trajectories than folds");

  // Contiguous blocks of whole trajectories.
  std::vector<int> fold_of_row(data.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto pos = static_cast<std::size_t>(std::lower_bound(trajs.begin(), trajs.end(), data.traj[r]) - trajs.begin());
    fold_of_row[r] = static_cast<int>(pos * static_cast<std::size_t>(folds) / k);
  }

  CvResult best;
  bool have = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CvResult cur;
    cur.best = grid[g];
    cur.best_index = g;
    cur.oof_prediction.assign(data.size(), -1);
    for (int fold = 0; fold < folds; ++fold) {
      std::vector<std::size_t> tr, te;
      for (std::size_t r = 0; r < data.size(); ++r) (fold_of_row[r] == fold ? te : tr).push_back(r);
      const Dataset train_set = data.subset(tr);
      const Classifier model = train(train_set, f, grid[g], seed + static_cast<std::uint64_t>(fold), settings);
      std::size_t hit = 0;
      for (auto r : te) {
        const int p = predict(model, data.x[r]);
        cur.oof_prediction[r] = p;
        hit += (p == data.y[r]);
      }
      cur.fold_accuracy.push_back(100.0 * static_cast<double>(hit) / static_cast<double>(te.size()));
    }
    cur.mean_accuracy = std::accumulate(cur.fold_accuracy.begin(), cur.fold_accuracy.end(), 0.0) / folds;
    best.grid_mean_accuracy.push_back(cur.mean_accuracy);
    // Grid runs from low to high capacity; ties keep the earlier entry.
    if (!have || cur.mean_accuracy > best.mean_accuracy) {
      auto means = std::move(best.grid_mean_accuracy);
      best = std::move(cur);
      best.grid_mean_accuracy = std::move(means);
      have = true;
    }
  }
  return best;
}

namespace {

nlohmann::json standardization_json(const Standardization& s) {
  return {{"mean", s.mean}, {"scale", s.scale}};
}

Standardization standardization_from(const nlohmann::json& j) {
  return {j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
}

}  // namespace

nlohmann::json to_json(const Classifier& m) {
  nlohmann::json j;
  j["family"] = std::string(family_name(family_of(m)));
  j["layout"] = std::string(feature_set_name(layout_of(m)));
  j["classes"] = classes_of(m);
  if (const auto* lr = std::get_if<LogisticModel>(&m)) {
    j["standardization"] = standardization_json(lr->standardization);
    j["parameters"] = {{"dims", lr->dims}, {"weights", lr->weights}};
    j["training_meta"] = {{"seed", lr->seed},
                          {"hypers", {{"l2", lr->l2}, {"lr", lr->lr}, {"epochs", lr->epochs}}},
                          {"stability_bound", lr->stability_bound},
                          {"final_loss", -lr->final_loglik}};
  } else if (const auto* dt = std::get_if<DecisionTree>(&m)) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : dt->nodes)
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                       {"right", n.right}, {"freq", n.freq}});
    j["standardization"] = nullptr;
    j["parameters"] = {{"nodes", nodes}};
    j["training_meta"] = {{"seed", dt->seed},
                          {"hypers", {{"max_depth", dt->max_depth}, {"min_leaf", dt->min_leaf}}},
                          {"final_loss", nullptr}};
  } else {
    const auto& svm = std::get<LinearSvm>(m);
    j["standardization"] = standardization_json(svm.standardization);
    j["parameters"] = {{"dims", svm.dims}, {"weights", svm.weights}};
    j["training_meta"] = {{"seed", svm.seed},
                          {"hypers", {{"c", svm.c}, {"epochs", svm.epochs}}},
                          {"final_loss", svm.final_objective}};
  }
  return j;
}

Classifier classifier_from_json(const nlohmann::json& j) {
  const Family f = parse_family(j.at("family").get<std::string>());
  const FeatureSetId layout = parse_feature_set(j.at("layout").get<std::string>());
  const int classes = j.at("classes").get<int>();
  if (classes != 2 && classes != 3) throw std::invalid_argument("model: classes must be 2 or 3");
  const auto& meta = j.at("training_meta");
  const auto& params = j.at("parameters");
  switch (f) {
    case Family::logistic: {
      LogisticModel m;
      m.layout = layout;
      m.classes = classes;
      m.dims = params.at("dims").get<std::size_t>();
      m.weights = params.at("weights").get<std::vector<double>>();
      m.standardization = standardization_from(j.at("standardization"));
      m.seed = meta.at("seed").get<std::uint64_t>();
      m.l2 = meta.at("hypers").at("l2").get<double>();
      m.lr = meta.at("hypers").at("lr").get<double>();
      m.epochs = meta.at("hypers").at("epochs").get<int>();
      m.stability_bound = meta.at("stability_bound").get<double>();
      m.final_loglik = -meta.at("final_loss").get<double>();
      if (m.weights.size() != static_cast<std::size_t>(classes) * (m.dims + 1))
        throw std::invalid_argument("model: parameters.weights has the wrong length");
      return m;
    }
    case Family::tree: {
      DecisionTree t;
      t.layout = layout;
      t.classes = classes;
      t.seed = meta.at("seed").get<std::uint64_t>();
      t.max_depth = meta.at("hypers").at("max_depth").get<int>();
      t.min_leaf = meta.at("hypers").at("min_leaf").get<int>();
      for (const auto& n : params.at("nodes")) {
        TreeNode node{n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                      n.at("right").get<int>(), n.at("freq").get<std::vector<double>>()};
        if (node.freq.size() != static_cast<std::size_t>(classes))
          throw std::invalid_argument("model: parameters.nodes[].freq has the wrong length");
        t.nodes.push_back(std::move(node));
      }
      const int count = static_cast<int>(t.nodes.size());
      for (const auto& n : t.nodes)
        if (n.feature >= 0 && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count))
          throw std::invalid_argument("model: parameters.nodes[] child index out of range");
      if (t.nodes.empty()) throw std::invalid_argument("model: parameters.nodes is empty");
      return t;
    }
    case Family::svm: {
      LinearSvm m;
      m.layout = layout;
      m.classes = classes;
      m.dims = params.at("dims").get<std::size_t>();
      m.weights = params.at("weights").get<std::vector<double>>();
      m.standardization = standardization_from(j.at("standardization"));
      m.seed = meta.at("seed").get<std::uint64_t>();
      m.c = meta.at("hypers").at("c").get<double>();
      m.epochs = meta.at("hypers").at("epochs").get<int>();
      m.final_objective = meta.at("final_loss").get<double>();
      const std::size_t rows = classes == 2 ? 1 : static_cast<std::size_t>(classes);
      if (m.weights.size() != rows * (m.dims + 1))
        throw std::invalid_argument("model: parameters.weights has the wrong length");
      return m;
    }
  }
  throw std::invalid_argument("unknown family");
}

}  // namespace reachpred
