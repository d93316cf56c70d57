#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "ltl/types.hpp"

namespace ltl {

struct ForestParams {
  std::size_t num_trees = 100;
  std::size_t max_depth = 50;
  std::size_t epochs = 20;
  double split_threshold = 50.0;      // alpha: samples a leaf must exceed before splitting
  double min_gain = 0.1;              // beta
  std::size_t candidates_per_leaf = 10;
  std::size_t threshold_warmup = 10;  // arrivals buffered before candidate thresholds are drawn
  std::size_t class_count = kNumClasses;
  std::size_t feature_dim = 61;
  std::uint64_t seed = 0;

  bool operator==(const ForestParams&) const = default;
};

double gini(std::span<const double> histogram);

// Impurity decrease of splitting `left + right` into the two sides, weighted by side size.
double split_gain(std::span<const double> left, std::span<const double> right);

struct CandidateSplit {
  std::size_t feature = 0;
  double threshold = 0.0;  // x < threshold goes left
  std::vector<double> left;
  std::vector<double> right;
};

struct TreeNode {
  std::size_t depth = 0;
  bool is_leaf = true;

  // Weighted arrivals routed to this node while it was a leaf.
  double sample_count = 0.0;
  std::vector<double> histogram;
  // Partition statistics inherited from the parent split; only used for prediction.
  std::vector<double> prior;
  std::vector<CandidateSplit> candidates;
  bool thresholds_drawn = false;
  struct Buffered {
    std::vector<double> values;  // one per candidate
    std::size_t label = 0;
    double weight = 0.0;
  };
  std::vector<Buffered> warmup;

  std::size_t split_feature = 0;
  double split_threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
};

struct TreeStats {
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::size_t max_depth = 0;
  double arrivals = 0.0;       // total weight applied to the tree
  double node_sample_sum = 0.0;
};

// Multi-class online random forest with Poisson(1) online bagging.
class OnlineRandomForest {
 public:
  explicit OnlineRandomForest(ForestParams params = {});

  const ForestParams& params() const { return params_; }
  std::size_t tree_count() const { return trees_.size(); }
  TreeStats tree_stats(std::size_t tree) const;
  const std::vector<TreeNode>& tree_nodes(std::size_t tree) const { return trees_.at(tree).nodes; }

  void update(std::span<const double> sample, std::size_t label);
  void update_batch(std::span<const std::vector<double>> samples, std::span<const std::size_t> labels);

  std::vector<double> predict(std::span<const double> sample) const;
  std::size_t predict_label(std::span<const double> sample) const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static OnlineRandomForest load(std::istream& in);
  static OnlineRandomForest load(const std::filesystem::path& path);

  // Offline forest (bootstrap per tree, exhaustive recursive growth) over the same node type.
  static OnlineRandomForest train_batch_reference(std::span<const std::vector<double>> samples,
                                                  std::span<const std::size_t> labels,
                                                  ForestParams params);

 private:
  struct Tree {
    std::vector<TreeNode> nodes;
    std::mt19937_64 rng;
    double arrivals = 0.0;
  };

  void init_leaf(Tree& tree, TreeNode& node);
  void apply(Tree& tree, std::span<const double> sample, std::size_t label, double weight);
  void draw_thresholds(TreeNode& leaf, Tree& tree);
  void try_split(Tree& tree, std::size_t node_index);
  std::size_t route(const Tree& tree, std::span<const double> sample) const;
  void check_sample(std::span<const double> sample) const;

  ForestParams params_;
  std::vector<Tree> trees_;
  std::mt19937_64 shuffle_rng_;
};

}  // namespace ltl
