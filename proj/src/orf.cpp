#include "ltl/orf.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <ostream>
#include <istream>
#include <sstream>
#include <string>

namespace ltl {

namespace {

constexpr std::string_view kMagic = "ltl-orf";
constexpr int kFormatVersion = 1;

std::mt19937_64 tree_rng(std::uint64_t seed, std::size_t tree) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree), 0x6f72u};
  return std::mt19937_64(seq);
}

std::mt19937_64 shuffle_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x73687566u};
  return std::mt19937_64(seq);
}

void add_to(std::vector<double>& acc, std::span<const double> v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

// Distinct features when possible, so a leaf does not waste candidates on repeats.
std::vector<std::size_t> pick_features(std::size_t count, std::size_t dim, std::mt19937_64& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  if (count <= dim) {
    std::vector<std::size_t> all(dim);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, dim - 1);
      std::swap(all[i], all[pick(rng)]);
      out.push_back(all[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, dim - 1);
    for (std::size_t i = 0; i < count; ++i) out.push_back(pick(rng));
  }
  return out;
}

double uniform_between(double lo, double hi, std::mt19937_64& rng) {
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

double gini(std::span<const double> histogram) {
  const double n = std::accumulate(histogram.begin(), histogram.end(), 0.0);
  if (n <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double h : histogram) sum_sq += (h / n) * (h / n);
  return 1.0 - sum_sq;
}

double split_gain(std::span<const double> left, std::span<const double> right) {
  if (left.size() != right.size()) throw ContractError("split_gain: histogram size mismatch");
  std::vector<double> parent(left.begin(), left.end());
  add_to(parent, right);
  const double nl = std::accumulate(left.begin(), left.end(), 0.0);
  const double nr = std::accumulate(right.begin(), right.end(), 0.0);
  const double n = nl + nr;
  if (n <= 0.0) return 0.0;
  return gini(parent) - nl / n * gini(left) - nr / n * gini(right);
}

OnlineRandomForest::OnlineRandomForest(ForestParams params)
    : params_(params), shuffle_rng_(shuffle_rng(params.seed)) {
  if (params_.num_trees == 0) throw ContractError("forest needs at least one tree");
  if (params_.class_count < 2) throw ContractError("forest needs at least two classes");
  if (params_.feature_dim == 0) throw ContractError("forest needs at least one feature");
  trees_.resize(params_.num_trees);
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    auto& tree = trees_[t];
    tree.rng = tree_rng(params_.seed, t);
    tree.nodes.emplace_back();
    init_leaf(tree, tree.nodes.back());
  }
}

void OnlineRandomForest::init_leaf(Tree& tree, TreeNode& node) {
  node.is_leaf = true;
  node.sample_count = 0.0;
  node.histogram.assign(params_.class_count, 0.0);
  if (node.prior.empty()) node.prior.assign(params_.class_count, 0.0);
  node.thresholds_drawn = false;
  node.warmup.clear();
  node.candidates.clear();
  for (auto f : pick_features(params_.candidates_per_leaf, params_.feature_dim, tree.rng)) {
    CandidateSplit c;
    c.feature = f;
    c.left.assign(params_.class_count, 0.0);
    c.right.assign(params_.class_count, 0.0);
    node.candidates.push_back(std::move(c));
  }
}

void OnlineRandomForest::check_sample(std::span<const double> sample) const {
  if (sample.size() != params_.feature_dim)
    throw ContractError("sample has " + std::to_string(sample.size()) + " features, forest expects " +
                        std::to_string(params_.feature_dim));
}

std::size_t OnlineRandomForest::route(const Tree& tree, std::span<const double> sample) const {
  std::size_t i = 0;
  while (!tree.nodes[i].is_leaf) {
    const auto& n = tree.nodes[i];
    i = sample[n.split_feature] < n.split_threshold ? n.left : n.right;
  }
  return i;
}

void OnlineRandomForest::draw_thresholds(TreeNode& leaf, Tree& tree) {
  for (std::size_t c = 0; c < leaf.candidates.size(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& b : leaf.warmup) {
      lo = std::min(lo, b.values[c]);
      hi = std::max(hi, b.values[c]);
    }
    leaf.candidates[c].threshold = uniform_between(lo, hi, tree.rng);
  }
  for (const auto& b : leaf.warmup) {
    for (std::size_t c = 0; c < leaf.candidates.size(); ++c) {
      auto& cand = leaf.candidates[c];
      (b.values[c] < cand.threshold ? cand.left : cand.right)[b.label] += b.weight;
    }
  }
  leaf.warmup.clear();
  leaf.warmup.shrink_to_fit();
  leaf.thresholds_drawn = true;
}

void OnlineRandomForest::apply(Tree& tree, std::span<const double> sample, std::size_t label,
                               double weight) {
  const std::size_t idx = route(tree, sample);
  auto& leaf = tree.nodes[idx];
  tree.arrivals += weight;
  leaf.sample_count += weight;
  leaf.histogram[label] += weight;
  if (!leaf.thresholds_drawn) {
    TreeNode::Buffered b;
    b.label = label;
    b.weight = weight;
    b.values.reserve(leaf.candidates.size());
    for (const auto& c : leaf.candidates) b.values.push_back(sample[c.feature]);
    leaf.warmup.push_back(std::move(b));
    if (leaf.warmup.size() >= params_.threshold_warmup || leaf.sample_count > params_.split_threshold)
      draw_thresholds(leaf, tree);
  } else {
    for (auto& c : leaf.candidates) (sample[c.feature] < c.threshold ? c.left : c.right)[label] += weight;
  }
  if (leaf.thresholds_drawn) try_split(tree, idx);
}

void OnlineRandomForest::try_split(Tree& tree, std::size_t node_index) {
  {
    const auto& node = tree.nodes[node_index];
    if (node.sample_count <= params_.split_threshold || node.depth >= params_.max_depth) return;
  }
  const auto& cands = tree.nodes[node_index].candidates;
  std::size_t best = cands.size();
  double best_gain = params_.min_gain;
  for (std::size_t c = 0; c < cands.size(); ++c) {
    const double g = split_gain(cands[c].left, cands[c].right);
    if (g > best_gain) {
      best_gain = g;
      best = c;
    }
  }
  if (best == cands.size()) return;

  CandidateSplit winner = std::move(tree.nodes[node_index].candidates[best]);
  const std::size_t depth = tree.nodes[node_index].depth;
  const std::size_t left = tree.nodes.size();
  const std::size_t right = left + 1;
  for (auto* side : {&winner.left, &winner.right}) {
    TreeNode child;
    child.depth = depth + 1;
    child.prior = *side;
    tree.nodes.push_back(std::move(child));
    init_leaf(tree, tree.nodes.back());
  }
  auto& node = tree.nodes[node_index];
  node.is_leaf = false;
  node.split_feature = winner.feature;
  node.split_threshold = winner.threshold;
  node.left = left;
  node.right = right;
  node.candidates.clear();
  node.candidates.shrink_to_fit();
  node.warmup.clear();
}

void OnlineRandomForest::update(std::span<const double> sample, std::size_t label) {
  check_sample(sample);
  if (label >= params_.class_count) throw ContractError("label out of range");
  std::poisson_distribution<int> poisson(1.0);
  for (auto& tree : trees_) {
    const int k = poisson(tree.rng);
    if (k > 0) apply(tree, sample, label, static_cast<double>(k));
  }
}

void OnlineRandomForest::update_batch(std::span<const std::vector<double>> samples,
                                      std::span<const std::size_t> labels) {
  if (samples.empty()) throw ContractError("update_batch: empty batch");
  if (samples.size() != labels.size()) throw ContractError("update_batch: samples/labels length mismatch");
  for (const auto& s : samples) check_sample(s);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t epoch = 0; epoch < params_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (auto i : order) update(samples[i], labels[i]);
  }
}

std::vector<double> OnlineRandomForest::predict(std::span<const double> sample) const {
  check_sample(sample);
  std::vector<double> out(params_.class_count, 0.0);
  const double uniform = 1.0 / static_cast<double>(params_.class_count);
  for (const auto& tree : trees_) {
    const auto& leaf = tree.nodes[route(tree, sample)];
    double total = 0.0;
    for (std::size_t c = 0; c < out.size(); ++c) total += leaf.histogram[c] + leaf.prior[c];
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] += total > 0.0 ? (leaf.histogram[c] + leaf.prior[c]) / total : uniform;
  }
  for (auto& p : out) p /= static_cast<double>(trees_.size());
  return out;
}

std::size_t OnlineRandomForest::predict_label(std::span<const double> sample) const {
  const auto p = predict(sample);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

TreeStats OnlineRandomForest::tree_stats(std::size_t tree) const {
  const auto& t = trees_.at(tree);
  TreeStats s;
  s.nodes = t.nodes.size();
  s.arrivals = t.arrivals;
  for (const auto& n : t.nodes) {
    if (n.is_leaf) ++s.leaves;
    s.max_depth = std::max(s.max_depth, n.depth);
    s.node_sample_sum += n.sample_count;
  }
  return s;
}

OnlineRandomForest OnlineRandomForest::train_batch_reference(std::span<const std::vector<double>> samples,
                                                             std::span<const std::size_t> labels,
                                                             ForestParams params) {
  if (samples.empty()) throw ContractError("train_batch_reference: empty training set");
  if (samples.size() != labels.size()) throw ContractError("train_batch_reference: length mismatch");
  OnlineRandomForest forest(params);
  for (const auto& s : samples) forest.check_sample(s);
  for (auto l : labels)
    if (l >= params.class_count) throw ContractError("label out of range");

  const std::size_t n = samples.size();
  // Each bootstrap member counts `epochs` times, matching the replay weight the online learner sees.
  const double weight = static_cast<double>(std::max<std::size_t>(params.epochs, 1));
  for (auto& tree : forest.trees_) {
    tree.nodes.clear();
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::vector<std::size_t> bag(n);
    for (auto& b : bag) b = draw(tree.rng);
    tree.arrivals = weight * static_cast<double>(n);

    struct Pending {
      std::size_t node;
      std::vector<std::size_t> members;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack;
    stack.push_back({0, std::move(bag)});
    while (!stack.empty()) {
      Pending job = std::move(stack.back());
      stack.pop_back();
      std::vector<double> hist(params.class_count, 0.0);
      for (auto i : job.members) hist[labels[i]] += weight;
      const double count = weight * static_cast<double>(job.members.size());
      const std::size_t depth = tree.nodes[job.node].depth;

      bool split = false;
      CandidateSplit best;
      if (count > params.split_threshold && depth < params.max_depth) {
        double best_gain = params.min_gain;
        for (auto f : pick_features(params.candidates_per_leaf, params.feature_dim, tree.rng)) {
          double lo = std::numeric_limits<double>::infinity();
          double hi = -std::numeric_limits<double>::infinity();
          for (auto i : job.members) {
            lo = std::min(lo, samples[i][f]);
            hi = std::max(hi, samples[i][f]);
          }
          CandidateSplit c;
          c.feature = f;
          c.threshold = uniform_between(lo, hi, tree.rng);
          c.left.assign(params.class_count, 0.0);
          c.right.assign(params.class_count, 0.0);
          for (auto i : job.members) (samples[i][f] < c.threshold ? c.left : c.right)[labels[i]] += weight;
          const double g = split_gain(c.left, c.right);
          if (g > best_gain) {
            best_gain = g;
            best = std::move(c);
            split = true;
          }
        }
      }

      if (!split) {
        auto& leaf = tree.nodes[job.node];
        leaf.prior.assign(params.class_count, 0.0);
        forest.init_leaf(tree, leaf);
        leaf.histogram = hist;
        leaf.sample_count = count;
        leaf.thresholds_drawn = false;
        continue;
      }

      std::vector<std::size_t> left_members, right_members;
      for (auto i : job.members)
        (samples[i][best.feature] < best.threshold ? left_members : right_members).push_back(i);
      const std::size_t left = tree.nodes.size();
      for (int k = 0; k < 2; ++k) {
        TreeNode child;
        child.depth = depth + 1;
        child.prior.assign(params.class_count, 0.0);
        tree.nodes.push_back(std::move(child));
      }
      auto& node = tree.nodes[job.node];
      node.is_leaf = false;
      node.histogram = hist;
      node.prior.assign(params.class_count, 0.0);
      node.sample_count = 0.0;
      node.split_feature = best.feature;
      node.split_threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, std::move(right_members)});
      stack.push_back({left, std::move(left_members)});
    }
  }
  return forest;
}

// ---- persistence ----------------------------------------------------------

namespace {

class TokenWriter {
 public:
  explicit TokenWriter(std::ostream& out) : out_(out) {}

  TokenWriter& word(std::string_view w) {
    sep();
    out_ << w;
    return *this;
  }
  TokenWriter& num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    sep();
    out_.write(buf, res.ptr - buf);
    return *this;
  }
  TokenWriter& num(std::uint64_t v) {
    sep();
    out_ << v;
    return *this;
  }
  TokenWriter& nums(std::span<const double> v) {
    for (double x : v) num(x);
    return *this;
  }
  void endl() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ' ';
    first_ = false;
  }
  std::ostream& out_;
  bool first_ = true;
};

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw FormatError("model file truncated");
    return w;
  }
  void expect(std::string_view w) {
    if (word() != w) throw FormatError("model file corrupt: expected '" + std::string(w) + "'");
  }
  double real() {
    const auto w = word();
    double v = 0.0;
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size())
      throw FormatError("model file corrupt: bad number '" + w + "'");
    return v;
  }
  std::uint64_t count() {
    const auto w = word();
    std::uint64_t v = 0;
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc() || res.ptr != w.data() + w.size())
      throw FormatError("model file corrupt: bad integer '" + w + "'");
    return v;
  }
  std::vector<double> reals(std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = real();
    return v;
  }
  void rng(std::mt19937_64& engine) {
    if (!(in_ >> engine)) throw FormatError("model file corrupt: generator state");
  }

 private:
  std::istream& in_;
};

}  // namespace

void OnlineRandomForest::save(std::ostream& out) const {
  TokenWriter w(out);
  w.word(kMagic).num(static_cast<std::uint64_t>(kFormatVersion)).endl();
  w.word("params")
      .num(static_cast<std::uint64_t>(params_.num_trees))
      .num(static_cast<std::uint64_t>(params_.max_depth))
      .num(static_cast<std::uint64_t>(params_.epochs))
      .num(params_.split_threshold)
      .num(params_.min_gain)
      .num(static_cast<std::uint64_t>(params_.candidates_per_leaf))
      .num(static_cast<std::uint64_t>(params_.threshold_warmup))
      .num(static_cast<std::uint64_t>(params_.class_count))
      .num(static_cast<std::uint64_t>(params_.feature_dim))
      .num(params_.seed)
      .endl();
  out << "shuffle " << shuffle_rng_ << '\n';
  for (const auto& tree : trees_) {
    w.word("tree").num(tree.arrivals).num(static_cast<std::uint64_t>(tree.nodes.size())).endl();
    out << "rng " << tree.rng << '\n';
    for (const auto& n : tree.nodes) {
      w.word(n.is_leaf ? "L" : "I").num(static_cast<std::uint64_t>(n.depth)).num(n.sample_count);
      w.nums(n.histogram).nums(n.prior);
      if (n.is_leaf) {
        w.num(static_cast<std::uint64_t>(n.thresholds_drawn)).num(static_cast<std::uint64_t>(n.candidates.size()));
        for (const auto& c : n.candidates)
          w.num(static_cast<std::uint64_t>(c.feature)).num(c.threshold).nums(c.left).nums(c.right);
        w.num(static_cast<std::uint64_t>(n.warmup.size()));
        for (const auto& b : n.warmup) w.num(static_cast<std::uint64_t>(b.label)).num(b.weight).nums(b.values);
      } else {
        w.num(static_cast<std::uint64_t>(n.split_feature))
            .num(n.split_threshold)
            .num(static_cast<std::uint64_t>(n.left))
            .num(static_cast<std::uint64_t>(n.right));
      }
      w.endl();
    }
  }
  w.word("end").endl();
}

void OnlineRandomForest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  save(out);
  if (!out) throw FormatError("write failed: " + path.string());
}

OnlineRandomForest OnlineRandomForest::load(std::istream& in) {
  TokenReader r(in);
  std::string magic;
  if (!(in >> magic)) throw FormatError("model file is empty");
  if (magic != kMagic) throw FormatError("not a forest model file");
  if (const auto version = r.count(); version != kFormatVersion)
    throw FormatError("unsupported model version " + std::to_string(version));

  r.expect("params");
  ForestParams p;
  p.num_trees = r.count();
  p.max_depth = r.count();
  p.epochs = r.count();
  p.split_threshold = r.real();
  p.min_gain = r.real();
  p.candidates_per_leaf = r.count();
  p.threshold_warmup = r.count();
  p.class_count = r.count();
  p.feature_dim = r.count();
  p.seed = r.count();
  if (p.num_trees == 0 || p.num_trees > (1u << 20) || p.class_count < 2 || p.class_count > 4096 ||
      p.feature_dim == 0 || p.feature_dim > (1u << 20))
    throw FormatError("model file corrupt: implausible parameters");

  OnlineRandomForest forest(p);
  r.expect("shuffle");
  r.rng(forest.shuffle_rng_);
  const std::size_t k = p.class_count;
  for (auto& tree : forest.trees_) {
    r.expect("tree");
    tree.arrivals = r.real();
    const auto node_count = r.count();
    if (node_count == 0 || node_count > (1u << 26)) throw FormatError("model file corrupt: node count");
    r.expect("rng");
    r.rng(tree.rng);
    tree.nodes.assign(node_count, TreeNode{});
    for (std::size_t idx = 0; idx < tree.nodes.size(); ++idx) {
      auto& n = tree.nodes[idx];
      const auto kind = r.word();
      if (kind != "L" && kind != "I") throw FormatError("model file corrupt: node kind");
      n.is_leaf = kind == "L";
      n.depth = r.count();
      n.sample_count = r.real();
      n.histogram = r.reals(k);
      n.prior = r.reals(k);
      if (n.is_leaf) {
        n.thresholds_drawn = r.count() != 0;
        const auto nc = r.count();
        if (nc > (1u << 16)) throw FormatError("model file corrupt: candidate count");
        n.candidates.resize(nc);
        for (auto& c : n.candidates) {
          c.feature = r.count();
          if (c.feature >= p.feature_dim) throw FormatError("model file corrupt: feature index");
          c.threshold = r.real();
          c.left = r.reals(k);
          c.right = r.reals(k);
        }
        const auto nb = r.count();
        if (nb > (1u << 20)) throw FormatError("model file corrupt: buffer size");
        n.warmup.resize(nb);
        for (auto& b : n.warmup) {
          b.label = r.count();
          if (b.label >= k) throw FormatError("model file corrupt: label");
          b.weight = r.real();
          b.values = r.reals(nc);
        }
      } else {
        n.split_feature = r.count();
        n.split_threshold = r.real();
        n.left = r.count();
        n.right = r.count();
        if (n.split_feature >= p.feature_dim || n.left <= idx || n.right <= idx || n.left >= node_count ||
            n.right >= node_count)
          throw FormatError("model file corrupt: split");
      }
    }
  }
  r.expect("end");
  return forest;
}

OnlineRandomForest OnlineRandomForest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load(in);
}

}  // namespace ltl
