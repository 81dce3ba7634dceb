#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "edasum/pipeline.hpp"
#include "edasum/random.hpp"

namespace edasum {

// Flattened factorized action space:
//   index = (slot * 4 + operator) * |A| + attribute
// Attribute-free operators use attribute 0 only; their other entries are
// never valid.
class ActionSpaceLayout {
 public:
  ActionSpaceLayout() = default;
  ActionSpaceLayout(std::size_t k, std::size_t attributes) : k_(k), attributes_(attributes) {}

  std::size_t k() const { return k_; }
  std::size_t attributes() const { return attributes_; }
  std::size_t size() const { return k_ * kOperatorCount * attributes_; }

  // Slot-based (position in summary) encoding; nullopt if the action's
  // itemset is not in `summary` or the layout cannot hold it.
  std::optional<std::size_t> encode(const Action& action, const Summary& summary) const;
  // nullopt for indices with no action (empty slot, stray attribute).
  std::optional<Action> decode(std::size_t index, const Summary& summary) const;

  friend bool operator==(const ActionSpaceLayout&, const ActionSpaceLayout&) = default;

 private:
  std::size_t k_ = 0;
  std::size_t attributes_ = 0;
};

inline constexpr std::size_t kStateWindow = 3;
inline constexpr std::size_t kSlotFeatures = 6;
inline constexpr std::size_t kGlobalFeatures = 8;

constexpr std::size_t state_dimension(std::size_t k) {
  return kStateWindow * (k * kSlotFeatures + kGlobalFeatures);
}

// Window of the three most recent summaries, newest last; missing history is
// zero at the oldest end.
Eigen::VectorXd encode_state(const Session& session);

// Structurally valid entries of the layout for the session's next step.
std::vector<char> action_mask(const Session& session, const ActionSpaceLayout& layout);

struct RlTrainConfig {
  std::size_t workers = 6;
  std::size_t update_interval = 20;
  std::size_t episodes = 4000;
  // Summaries per episode, bootstrap included.
  std::size_t steps_per_episode = 50;
  double discount = 0.99;
  double lr = 1e-4;
  double entropy = 0.01;
  double value_coeff = 0.5;
  std::size_t hidden = 128;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const RlTrainConfig&, const RlTrainConfig&) = default;
};

// Parameters of the actor-critic MLP as one flat vector. Layer order:
// trunk layers (W then b, column-major), policy head (W, b), value head (w, b).
class PolicyNetwork {
 public:
  PolicyNetwork() = default;
  // trunk_dims = {input, hidden...}; `actions` policy outputs plus one value output.
  PolicyNetwork(std::vector<std::size_t> trunk_dims, std::size_t actions);

  const std::vector<std::size_t>& trunk_dims() const { return dims_; }
  std::size_t input_size() const { return dims_.front(); }
  std::size_t action_count() const { return actions_; }
  std::size_t parameter_count() const { return static_cast<std::size_t>(theta_.size()); }

  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }

  // Glorot-uniform weights, zero biases; policy head scaled down so the
  // initial policy is near uniform.
  void initialize(Rng& rng);

  struct Output {
    Eigen::MatrixXd logits;  // actions x batch
    Eigen::RowVectorXd values;
  };
  Output forward(const Eigen::MatrixXd& states) const;

  // Bitwise equality of shape and parameters.
  friend bool operator==(const PolicyNetwork& a, const PolicyNetwork& b);

 private:
  std::vector<std::size_t> dims_;
  std::size_t actions_ = 0;
  Eigen::VectorXd theta_;
};

// Probabilities over unmasked entries; masked entries are exactly 0.
// Throws PreconditionError when nothing is valid.
Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const std::vector<char>& mask);

struct ReturnAdvantage {
  double ret = 0.0;
  double advantage = 0.0;
};

// Backward n-step returns from `bootstrap`; advantage = return - value.
std::vector<ReturnAdvantage> advantages(const std::vector<double>& rewards,
                                        const std::vector<double>& values, double bootstrap,
                                        double discount);

// One transition batch for the combined actor-critic loss.
struct LossBatch {
  Eigen::MatrixXd states;  // input x batch
  std::vector<std::vector<char>> masks;
  std::vector<std::size_t> actions;
  std::vector<double> advantages;
  std::vector<double> returns;
};

struct LossTerms {
  double policy = 0.0;
  double entropy = 0.0;
  double value = 0.0;
  double total = 0.0;
};

// Mean over the batch of -log pi(a|s) * A - entropy_coeff * H + value_coeff * (R - V)^2.
// Advantages are constants. Fills `grad` (same layout as the parameters) when given.
LossTerms actor_critic_loss(const PolicyNetwork& net, const LossBatch& batch, double entropy_coeff,
                            double value_coeff, Eigen::VectorXd* grad = nullptr);

struct GradCheckReport {
  double max_relative_error = 0.0;
  double value_head_error = 0.0;
  std::size_t checked = 0;
};

// Central differences (h = 1e-5) on a random network and batch.
GradCheckReport grad_check(const std::vector<std::size_t>& trunk_dims, std::size_t actions,
                           std::size_t batch, std::uint64_t seed);
// |a - b| / max(|a|, |b|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-8);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PolicyCheckpoint {
  static constexpr std::uint32_t kVersion = 1;

  PolicyNetwork network;
  ActionSpaceLayout layout;
  RlTrainConfig train;
  // Episodes already trained into the weights.
  std::size_t episodes_trained = 0;

  friend bool operator==(const PolicyCheckpoint&, const PolicyCheckpoint&) = default;
};

// Fresh network sized for (k, |A|) with weights drawn from train.seed.
PolicyCheckpoint initial_checkpoint(std::size_t k, std::size_t attributes, const RlTrainConfig& train);

void save_checkpoint(const PolicyCheckpoint& checkpoint, std::ostream& os);
PolicyCheckpoint load_checkpoint(std::istream& is);

enum class SelectMode { greedy, sample };

struct ActionChoice {
  std::size_t index = 0;
  double probability = 0.0;
};

ActionChoice select_action(const PolicyNetwork& net, const Eigen::VectorXd& state,
                           const std::vector<char>& mask, SelectMode mode, Rng* rng = nullptr);

struct TrainResult {
  PolicyCheckpoint checkpoint;
  // Cumulated utility of each episode, in completion order.
  std::vector<double> episode_rewards;
};

using EpisodeCallback = std::function<void(std::size_t episode, double reward)>;

// Asynchronous actor-critic training. Each worker owns a session over the
// shared catalog and merges gradients into the shared parameters every
// `update_interval` steps. One worker is bit-deterministic for a seed.
TrainResult train_policy(std::shared_ptr<const PatternCatalog> catalog, const ComponentScales& scales,
                         const SessionConfig& env, const RlTrainConfig& train,
                         const EpisodeCallback& on_episode = {});
// Continues from an existing checkpoint.
TrainResult train_policy(PolicyCheckpoint start, std::shared_ptr<const PatternCatalog> catalog,
                         const ComponentScales& scales, const SessionConfig& env,
                         const EpisodeCallback& on_episode = {});

// Policy-driven planner. An action the policy picks that turns out empty is
// masked and the choice is redrawn.
class RlPlanner : public Planner {
 public:
  explicit RlPlanner(std::shared_ptr<const PolicyCheckpoint> checkpoint,
                     SelectMode mode = SelectMode::greedy, std::uint64_t seed = 0);
  std::string name() const override { return "rlsum"; }
  std::optional<PipelineStep> next(const Session& session) override;
  // Policy probability of each valid candidate.
  std::vector<ScoredAction> score(const Session& session, const std::vector<Action>& candidates) override;

 private:
  void check_layout(const Session& session) const;
  std::shared_ptr<const PolicyCheckpoint> checkpoint_;
  SelectMode mode_;
  Rng rng_;
};

struct PolicyEvaluation {
  std::vector<double> cumulated;  // per episode
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  // Per-episode, per-step raw components, bootstrap first.
  std::vector<std::vector<Components>> traces;
};

PolicyEvaluation evaluate_policy(const PolicyCheckpoint& checkpoint,
                                 std::shared_ptr<const PatternCatalog> catalog,
                                 const ComponentScales& scales, const SessionConfig& config,
                                 std::size_t episodes, std::uint64_t seed,
                                 SelectMode mode = SelectMode::greedy);

// Same protocol with a uniformly random planner, for baselines.
PolicyEvaluation evaluate_random(std::shared_ptr<const PatternCatalog> catalog,
                                 const ComponentScales& scales, const SessionConfig& config,
                                 std::size_t episodes, std::uint64_t seed);

}  // namespace edasum
