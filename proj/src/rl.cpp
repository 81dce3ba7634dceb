#include "edasum/rl.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "edasum/binary_io.hpp"
#include "edasum/error.hpp"

namespace edasum {

// --- Action layout ---------------------------------------------------------

std::optional<std::size_t> ActionSpaceLayout::encode(const Action& action, const Summary& summary) const {
  const auto pos = std::find(summary.begin(), summary.end(), action.itemset);
  if (pos == summary.end()) return std::nullopt;
  const auto slot = static_cast<std::size_t>(pos - summary.begin());
  if (slot >= k_) return std::nullopt;
  std::size_t attr = 0;
  if (needs_attribute(action.op)) {
    if (!action.attribute || *action.attribute >= attributes_) return std::nullopt;
    attr = *action.attribute;
  } else if (action.attribute) {
    return std::nullopt;
  }
  return (slot * kOperatorCount + static_cast<std::size_t>(action.op)) * attributes_ + attr;
}

std::optional<Action> ActionSpaceLayout::decode(std::size_t index, const Summary& summary) const {
  if (index >= size()) return std::nullopt;
  const std::size_t attr = index % attributes_;
  const std::size_t op = (index / attributes_) % kOperatorCount;
  const std::size_t slot = index / (attributes_ * kOperatorCount);
  if (slot >= summary.size()) return std::nullopt;
  Action a{summary[slot], static_cast<Operator>(op), std::nullopt};
  if (needs_attribute(a.op)) {
    a.attribute = static_cast<std::uint32_t>(attr);
  } else if (attr != 0) {
    return std::nullopt;
  }
  return a;
}

// --- State encoding --------------------------------------------------------

namespace {

void encode_summary(const Session& session, const Summary& summary, const SeenSet& seen_before,
                    std::size_t seen_after, std::size_t position, const ResolvedWeights& weights,
                    const UtilityBreakdown& breakdown, Eigen::Ref<Eigen::VectorXd> out) {
  const auto& cat = session.catalog();
  const auto& cfg = session.config();
  const double rows = static_cast<double>(std::max<std::size_t>(1, cat.data().rows()));
  const double uni_cap = std::log1p(static_cast<double>(cat.attribute_count()) / kUniformityEpsilon);
  const double span = cat.bin_count() > 1 ? static_cast<double>(cat.bin_count() - 1) : 1.0;
  for (std::size_t p = 0; p < cfg.k && p < summary.size(); ++p) {
    const auto id = summary[p];
    const auto v = cat.vector(id);
    auto slot = out.segment(static_cast<Eigen::Index>(p * kSlotFeatures), kSlotFeatures);
    slot[0] = std::log1p(static_cast<double>(cat.itemset(id).size())) / std::log1p(rows);
    slot[1] = std::log1p(cat.uniformity(id)) / uni_cap;
    slot[2] = v.mean() / span;
    slot[3] = (v.maxCoeff() - v.minCoeff()) / span;
    slot[4] = seen_before.contains(id) ? 1.0 : 0.0;
    slot[5] = 1.0;
  }
  auto g = out.tail(kGlobalFeatures);
  const double t = static_cast<double>(cfg.t_total);
  g[0] = static_cast<double>(position + 1) / t;
  g[1] = static_cast<double>(seen_after) / (static_cast<double>(cfg.k) * t);
  g[2] = weights.alpha;
  g[3] = weights.beta;
  g[4] = weights.gamma;
  g[5] = std::tanh(breakdown.scaled.uniformity);
  g[6] = std::tanh(breakdown.scaled.diversity);
  g[7] = std::tanh(breakdown.scaled.novelty);
}

}  // namespace

Eigen::VectorXd encode_state(const Session& session) {
  const std::size_t k = session.config().k;
  const std::size_t block = k * kSlotFeatures + kGlobalFeatures;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dimension(k)));
  const auto& history = session.history();
  const std::size_t newest = history.size();
  const std::size_t oldest = newest >= kStateWindow - 1 ? newest - (kStateWindow - 1) : 0;

  SeenSet seen;
  for (std::size_t j = 0; j <= newest; ++j) {
    const Summary& summary = j == 0 ? session.bootstrap() : history[j - 1].result;
    if (j >= oldest) {
      SeenSet after = seen;
      after.add(summary);
      const std::size_t slot = kStateWindow - 1 - (newest - j);
      const auto& w = j == 0 ? session.bootstrap_weights() : history[j - 1].weights;
      const auto& b = j == 0 ? session.bootstrap_breakdown() : history[j - 1].breakdown;
      encode_summary(session, summary, seen, after.size(), j, w, b,
                     x.segment(static_cast<Eigen::Index>(slot * block), static_cast<Eigen::Index>(block)));
    }
    seen.add(summary);
  }
  return x;
}

std::vector<char> action_mask(const Session& session, const ActionSpaceLayout& layout) {
  std::vector<char> mask(layout.size(), 0);
  if (session.terminal()) return mask;
  for (const auto& a : session.candidate_actions()) {
    if (auto idx = layout.encode(a, session.current())) mask[*idx] = 1;
  }
  return mask;
}

// --- Network ---------------------------------------------------------------

void RlTrainConfig::validate() const {
  if (workers < 1) throw ConfigError("rl.workers", "workers must be >= 1");
  if (update_interval < 1) throw ConfigError("rl.update_interval", "update interval must be >= 1");
  if (steps_per_episode < 2) throw ConfigError("rl.steps_per_episode", "episodes need at least 2 summaries");
  if (!(discount >= 0.0 && discount <= 1.0)) throw ConfigError("rl.discount", "discount must be in [0, 1]");
  if (!(lr > 0.0)) throw ConfigError("rl.lr", "learning rate must be > 0");
  if (!(entropy >= 0.0)) throw ConfigError("rl.entropy", "entropy coefficient must be >= 0");
  if (!(value_coeff >= 0.0)) throw ConfigError("rl.value_coeff", "value coefficient must be >= 0");
  if (hidden < 1) throw ConfigError("rl.hidden", "hidden width must be >= 1");
}

namespace {

// Offsets of each tensor inside the flat parameter vector.
struct ParamLayout {
  struct Dense {
    Eigen::Index w, b, rows, cols;
  };
  std::vector<Dense> trunk;
  Dense policy{};
  Dense value{};
  Eigen::Index total = 0;

  ParamLayout(const std::vector<std::size_t>& dims, std::size_t actions) {
    auto add = [&](std::size_t rows, std::size_t cols) {
      Dense d{total, total + static_cast<Eigen::Index>(rows * cols), static_cast<Eigen::Index>(rows),
              static_cast<Eigen::Index>(cols)};
      total = d.b + d.rows;
      return d;
    };
    for (std::size_t l = 1; l < dims.size(); ++l) trunk.push_back(add(dims[l], dims[l - 1]));
    policy = add(actions, dims.back());
    value = add(1, dims.back());
  }
};

using MapMat = Eigen::Map<Eigen::MatrixXd>;
using CMapMat = Eigen::Map<const Eigen::MatrixXd>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

CMapMat weights(const Eigen::VectorXd& theta, const ParamLayout::Dense& d) {
  return {theta.data() + d.w, d.rows, d.cols};
}
CMapVec bias(const Eigen::VectorXd& theta, const ParamLayout::Dense& d) {
  return {theta.data() + d.b, d.rows};
}

struct Activations {
  std::vector<Eigen::MatrixXd> h;  // h[0] = input
  Eigen::MatrixXd logits;
  Eigen::RowVectorXd values;
};

Activations run_forward(const ParamLayout& lay, const Eigen::VectorXd& theta, const Eigen::MatrixXd& x) {
  Activations act;
  act.h.push_back(x);
  for (const auto& d : lay.trunk) {
    Eigen::MatrixXd z = weights(theta, d) * act.h.back();
    z.colwise() += bias(theta, d);
    act.h.push_back(z.array().tanh().matrix());
  }
  act.logits = weights(theta, lay.policy) * act.h.back();
  act.logits.colwise() += bias(theta, lay.policy);
  act.values = weights(theta, lay.value) * act.h.back();
  act.values.array() += theta[lay.value.b];
  return act;
}

}  // namespace

PolicyNetwork::PolicyNetwork(std::vector<std::size_t> trunk_dims, std::size_t actions)
    : dims_(std::move(trunk_dims)), actions_(actions) {
  if (dims_.size() < 2 || actions_ == 0) throw PreconditionError("network needs an input, a hidden layer and actions");
  for (const auto d : dims_) {
    if (d == 0) throw PreconditionError("layer widths must be positive");
  }
  theta_ = Eigen::VectorXd::Zero(ParamLayout(dims_, actions_).total);
}

void PolicyNetwork::initialize(Rng& rng) {
  const ParamLayout lay(dims_, actions_);
  theta_.setZero();
  auto glorot = [&](const ParamLayout::Dense& d, double scale) {
    const double limit = scale * std::sqrt(6.0 / static_cast<double>(d.rows + d.cols));
    for (Eigen::Index i = 0; i < d.rows * d.cols; ++i) theta_[d.w + i] = (2.0 * rng.unit() - 1.0) * limit;
  };
  for (const auto& d : lay.trunk) glorot(d, 1.0);
  glorot(lay.policy, 0.01);
  glorot(lay.value, 1.0);
}

PolicyNetwork::Output PolicyNetwork::forward(const Eigen::MatrixXd& states) const {
  if (static_cast<std::size_t>(states.rows()) != input_size()) {
    throw PreconditionError("state dimension " + std::to_string(states.rows()) + " does not match network input " +
                            std::to_string(input_size()));
  }
  auto act = run_forward(ParamLayout(dims_, actions_), theta_, states);
  return {std::move(act.logits), std::move(act.values)};
}

bool operator==(const PolicyNetwork& a, const PolicyNetwork& b) {
  if (a.dims_ != b.dims_ || a.actions_ != b.actions_ || a.theta_.size() != b.theta_.size()) return false;
  return std::equal(a.theta_.data(), a.theta_.data() + a.theta_.size(), b.theta_.data(),
                    [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); });
}

Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits, const std::vector<char>& mask) {
  if (mask.size() != static_cast<std::size_t>(logits.size())) throw PreconditionError("mask size mismatch");
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) top = std::max(top, logits[i]);
  }
  if (top == -std::numeric_limits<double>::infinity()) throw PreconditionError("every action is masked");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(logits.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)]) sum += p[i] = std::exp(logits[i] - top);
  }
  return p / sum;
}

std::vector<ReturnAdvantage> advantages(const std::vector<double>& rewards,
                                        const std::vector<double>& values, double bootstrap,
                                        double discount) {
  if (rewards.empty()) throw PreconditionError("trajectory is empty");
  if (values.size() != rewards.size()) throw PreconditionError("one value estimate per reward is required");
  std::vector<ReturnAdvantage> out(rewards.size());
  double ret = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    ret = rewards[i] + discount * ret;
    out[i] = {ret, ret - values[i]};
  }
  return out;
}

LossTerms actor_critic_loss(const PolicyNetwork& net, const LossBatch& batch, double entropy_coeff,
                            double value_coeff, Eigen::VectorXd* grad) {
  const ParamLayout lay(net.trunk_dims(), net.action_count());
  const auto& theta = net.parameters();
  const auto n = batch.states.cols();
  if (n == 0) throw PreconditionError("empty batch");
  const auto un = static_cast<std::size_t>(n);
  if (batch.masks.size() != un || batch.actions.size() != un || batch.advantages.size() != un ||
      batch.returns.size() != un) {
    throw PreconditionError("batch fields disagree in length");
  }
  const auto act = run_forward(lay, theta, batch.states);
  const double inv = 1.0 / static_cast<double>(n);

  LossTerms terms;
  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(act.logits.rows(), n);
  Eigen::RowVectorXd dvalues(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Eigen::VectorXd p = masked_softmax(act.logits.col(i), batch.masks[ui]);
    const auto a = static_cast<Eigen::Index>(batch.actions[ui]);
    if (!batch.masks[ui][batch.actions[ui]]) throw PreconditionError("batch action is masked");
    double h = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
    }
    const double adv = batch.advantages[ui];
    terms.policy -= std::log(p[a]) * adv * inv;
    terms.entropy += h * inv;
    const double err = batch.returns[ui] - act.values[i];
    terms.value += err * err * inv;
    if (grad) {
      for (Eigen::Index j = 0; j < p.size(); ++j) {
        if (!batch.masks[ui][static_cast<std::size_t>(j)]) continue;
        double g = adv * (p[j] - (j == a ? 1.0 : 0.0));
        if (p[j] > 0.0) g += entropy_coeff * p[j] * (std::log(p[j]) + h);
        dlogits(j, i) = g * inv;
      }
      dvalues[i] = -2.0 * value_coeff * err * inv;
    }
  }
  terms.total = terms.policy - entropy_coeff * terms.entropy + value_coeff * terms.value;
  if (!grad) return terms;

  grad->setZero(lay.total);
  auto dense_grad = [&](const ParamLayout::Dense& d, const Eigen::MatrixXd& delta, const Eigen::MatrixXd& input) {
    MapMat(grad->data() + d.w, d.rows, d.cols).noalias() = delta * input.transpose();
    grad->segment(d.b, d.rows) = delta.rowwise().sum();
  };
  const auto& top = act.h.back();
  dense_grad(lay.policy, dlogits, top);
  dense_grad(lay.value, dvalues, top);
  Eigen::MatrixXd dh = weights(theta, lay.policy).transpose() * dlogits +
                       weights(theta, lay.value).transpose() * dvalues;
  for (std::size_t l = lay.trunk.size(); l-- > 0;) {
    const Eigen::MatrixXd& h = act.h[l + 1];
    const Eigen::MatrixXd delta = dh.array() * (1.0 - h.array().square());
    dense_grad(lay.trunk[l], delta, act.h[l]);
    if (l > 0) dh = weights(theta, lay.trunk[l]).transpose() * delta;
  }
  return terms;
}

// --- Gradient check --------------------------------------------------------

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckReport grad_check(const std::vector<std::size_t>& trunk_dims, std::size_t actions,
                           std::size_t batch, std::uint64_t seed) {
  Rng rng(seed);
  PolicyNetwork net(trunk_dims, actions);
  // Larger than the training initialization so every term is exercised.
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) net.parameters()[i] = 0.5 * rng.normal();

  LossBatch b;
  b.states = Eigen::MatrixXd(static_cast<Eigen::Index>(trunk_dims.front()), static_cast<Eigen::Index>(batch));
  for (Eigen::Index i = 0; i < b.states.size(); ++i) b.states.data()[i] = rng.normal();
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<char> mask(actions);
    for (auto& m : mask) m = rng.unit() < 0.7;
    const auto a = static_cast<std::size_t>(rng.index(actions));
    mask[a] = 1;
    b.masks.push_back(std::move(mask));
    b.actions.push_back(a);
    b.advantages.push_back(rng.normal());
    b.returns.push_back(rng.normal());
  }
  const double entropy = 0.01, value = 0.5, h = 1e-5;
  Eigen::VectorXd analytic;
  actor_critic_loss(net, b, entropy, value, &analytic);

  const ParamLayout lay(trunk_dims, actions);
  GradCheckReport report;
  auto& theta = net.parameters();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    const double up = actor_critic_loss(net, b, entropy, value).total;
    theta[i] = keep - h;
    const double down = actor_critic_loss(net, b, entropy, value).total;
    theta[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double err = relative_error(analytic[i], numeric);
    report.max_relative_error = std::max(report.max_relative_error, err);
    if (i >= lay.value.w) report.value_head_error = std::max(report.value_head_error, err);
    ++report.checked;
  }
  return report;
}

// --- Checkpoints -----------------------------------------------------------

namespace {

constexpr const char* kCheckpointMagic = "E4SRL";

std::vector<std::size_t> trunk_for(std::size_t k, const RlTrainConfig& train) {
  return {state_dimension(k), train.hidden, train.hidden};
}

}  // namespace

PolicyCheckpoint initial_checkpoint(std::size_t k, std::size_t attributes, const RlTrainConfig& train) {
  train.validate();
  if (k == 0 || attributes == 0) throw PreconditionError("layout needs k >= 1 and at least one attribute");
  PolicyCheckpoint ck;
  ck.layout = ActionSpaceLayout(k, attributes);
  ck.train = train;
  ck.network = PolicyNetwork(trunk_for(k, train), ck.layout.size());
  Rng rng(train.seed);
  ck.network.initialize(rng);
  return ck;
}

void save_checkpoint(const PolicyCheckpoint& ck, std::ostream& os) {
  bin::put_magic(os, kCheckpointMagic);
  bin::put<std::uint32_t>(os, PolicyCheckpoint::kVersion);
  bin::put<std::uint64_t>(os, ck.layout.k());
  bin::put<std::uint64_t>(os, ck.layout.attributes());
  const auto& dims = ck.network.trunk_dims();
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
  for (const auto d : dims) bin::put<std::uint64_t>(os, d);
  bin::put<std::uint64_t>(os, ck.network.action_count());
  const auto& t = ck.train;
  for (const std::size_t v : {t.workers, t.update_interval, t.episodes, t.steps_per_episode, t.hidden}) {
    bin::put<std::uint64_t>(os, v);
  }
  for (const double v : {t.discount, t.lr, t.entropy, t.value_coeff}) bin::put_f64(os, v);
  bin::put<std::uint64_t>(os, t.seed);
  bin::put<std::uint64_t>(os, ck.episodes_trained);
  const auto& theta = ck.network.parameters();
  bin::put<std::uint64_t>(os, static_cast<std::uint64_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) bin::put_f64(os, theta[i]);
  if (!os) throw InputError("failed writing checkpoint");
}

PolicyCheckpoint load_checkpoint(std::istream& is) {
  bin::expect_magic(is, kCheckpointMagic);
  const auto version = bin::get<std::uint32_t>(is);
  if (version != PolicyCheckpoint::kVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  PolicyCheckpoint ck;
  const auto k = bin::get<std::uint64_t>(is);
  const auto attrs = bin::get<std::uint64_t>(is);
  ck.layout = ActionSpaceLayout(k, attrs);
  const auto ndims = bin::get<std::uint32_t>(is);
  if (ndims < 2 || ndims > 16) throw InputError("corrupt checkpoint: layer count");
  std::vector<std::size_t> dims(ndims);
  for (auto& d : dims) {
    d = bin::get<std::uint64_t>(is);
    if (d == 0 || d > (1u << 20)) throw InputError("corrupt checkpoint: layer width");
  }
  const auto actions = bin::get<std::uint64_t>(is);
  if (actions != ck.layout.size() || dims.front() != state_dimension(k)) {
    throw InputError("checkpoint network does not match its action layout");
  }
  auto& t = ck.train;
  t.workers = bin::get<std::uint64_t>(is);
  t.update_interval = bin::get<std::uint64_t>(is);
  t.episodes = bin::get<std::uint64_t>(is);
  t.steps_per_episode = bin::get<std::uint64_t>(is);
  t.hidden = bin::get<std::uint64_t>(is);
  t.discount = bin::get_f64(is);
  t.lr = bin::get_f64(is);
  t.entropy = bin::get_f64(is);
  t.value_coeff = bin::get_f64(is);
  t.seed = bin::get<std::uint64_t>(is);
  ck.episodes_trained = bin::get<std::uint64_t>(is);
  ck.network = PolicyNetwork(dims, actions);
  const auto count = bin::get<std::uint64_t>(is);
  if (count != ck.network.parameter_count()) throw InputError("corrupt checkpoint: parameter count");
  auto& theta = ck.network.parameters();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] = bin::get_f64(is);
  return ck;
}

// --- Action selection ------------------------------------------------------

namespace {

std::size_t pick_index(const Eigen::VectorXd& p, const std::vector<char>& mask, SelectMode mode, Rng* rng) {
  std::size_t pick = mask.size();
  if (mode == SelectMode::greedy) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i] && (pick == mask.size() || p[static_cast<Eigen::Index>(i)] > p[static_cast<Eigen::Index>(pick)])) {
        pick = i;
      }
    }
    return pick;
  }
  if (!rng) throw PreconditionError("sampling needs a random generator");
  const double u = rng->unit();
  double acc = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    pick = i;
    acc += p[static_cast<Eigen::Index>(i)];
    if (u < acc) break;
  }
  return pick;
}

}  // namespace

ActionChoice select_action(const PolicyNetwork& net, const Eigen::VectorXd& state,
                           const std::vector<char>& mask, SelectMode mode, Rng* rng) {
  const auto out = net.forward(state);
  const Eigen::VectorXd p = masked_softmax(out.logits.col(0), mask);
  const std::size_t pick = pick_index(p, mask, mode, rng);
  return {pick, p[static_cast<Eigen::Index>(pick)]};
}

namespace {

// Picks and plans an action, masking picks whose result is empty.
struct Decision {
  std::optional<PipelineStep> step;
  std::size_t index = 0;
  std::vector<char> mask;
  std::size_t structural = 0;
};

Decision decide(const PolicyNetwork& net, const ActionSpaceLayout& layout, const Session& session,
                const Eigen::VectorXd& state, SelectMode mode, Rng& rng) {
  Decision d;
  d.mask = action_mask(session, layout);
  d.structural = static_cast<std::size_t>(std::count(d.mask.begin(), d.mask.end(), 1));
  const auto logits = net.forward(state).logits.col(0).eval();
  for (std::size_t left = d.structural; left > 0; --left) {
    const Eigen::VectorXd p = masked_softmax(logits, d.mask);
    const std::size_t pick = pick_index(p, d.mask, mode, &rng);
    const auto action = layout.decode(pick, session.current());
    if (action) {
      if (auto step = session.plan(*action)) {
        d.step = std::move(step);
        d.index = pick;
        return d;
      }
    }
    d.mask[pick] = 0;
  }
  return d;
}

}  // namespace

// --- Training --------------------------------------------------------------

namespace {

class Adam {
 public:
  Adam(Eigen::Index n, double lr) : lr_(lr), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& g) {
    ++t_;
    m_ = b1_ * m_ + (1.0 - b1_) * g;
    v_ = b2_ * v_ + (1.0 - b2_) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
  }

 private:
  double lr_;
  double b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  Eigen::VectorXd m_, v_;
  std::uint64_t t_ = 0;
};

// Shared parameters; worker gradients are applied whole, in arrival order.
class ParameterStore {
 public:
  ParameterStore(PolicyNetwork net, double lr) : net_(std::move(net)), adam_(net_.parameters().size(), lr) {}

  void apply(const Eigen::VectorXd& grad) {
    std::lock_guard lock(mu_);
    adam_.step(net_.parameters(), grad);
  }
  void snapshot(PolicyNetwork& out) const {
    std::lock_guard lock(mu_);
    out = net_;
  }
  PolicyNetwork take() { return std::move(net_); }

 private:
  mutable std::mutex mu_;
  PolicyNetwork net_;
  Adam adam_;
};

}  // namespace

TrainResult train_policy(std::shared_ptr<const PatternCatalog> catalog, const ComponentScales& scales,
                         const SessionConfig& env, const RlTrainConfig& train,
                         const EpisodeCallback& on_episode) {
  if (!catalog) throw PreconditionError("training needs a catalog");
  auto start = initial_checkpoint(env.k, catalog->attribute_count(), train);
  return train_policy(std::move(start), std::move(catalog), scales, env, on_episode);
}

TrainResult train_policy(PolicyCheckpoint start, std::shared_ptr<const PatternCatalog> catalog,
                         const ComponentScales& scales, const SessionConfig& env,
                         const EpisodeCallback& on_episode) {
  const RlTrainConfig& cfg = start.train;
  cfg.validate();
  if (!catalog) throw PreconditionError("training needs a catalog");
  if (start.layout != ActionSpaceLayout(env.k, catalog->attribute_count())) {
    throw PreconditionError("checkpoint layout does not match the environment");
  }
  SessionConfig episode_env = env;
  episode_env.t_total = cfg.steps_per_episode;
  episode_env.workers = 1;
  const Session prototype(catalog, scales, episode_env);
  const ActionSpaceLayout layout = start.layout;

  ParameterStore store(start.network, cfg.lr);
  std::atomic<std::size_t> next_episode{0};
  std::mutex log_mu;
  TrainResult result;
  std::string failure;

  auto worker = [&](std::size_t w) {
    Rng rng(cfg.seed ^ (0x9E3779B97F4A7C15ull * (w + 1 + start.episodes_trained)));
    PolicyNetwork local;
    store.snapshot(local);
    for (;;) {
      const std::size_t episode = next_episode.fetch_add(1);
      if (episode >= cfg.episodes) return;
      Session session = prototype;
      bool dead_end = false;
      while (!session.terminal() && !dead_end) {
        LossBatch batch;
        std::vector<double> rewards, values;
        std::vector<Eigen::VectorXd> states;
        while (rewards.size() < cfg.update_interval && !session.terminal()) {
          Eigen::VectorXd x = encode_state(session);
          auto d = decide(local, layout, session, x, SelectMode::sample, rng);
          if (!d.step) {
            dead_end = true;
            break;
          }
          values.push_back(local.forward(x).values[0]);
          rewards.push_back(d.step->breakdown.utility);
          states.push_back(std::move(x));
          batch.masks.push_back(std::move(d.mask));
          batch.actions.push_back(d.index);
          session.apply(*d.step);
        }
        if (rewards.empty()) break;
        const double bootstrap =
            session.terminal() || dead_end ? 0.0 : local.forward(encode_state(session)).values[0];
        const auto ra = advantages(rewards, values, bootstrap, cfg.discount);
        batch.states.resize(static_cast<Eigen::Index>(states.front().size()),
                            static_cast<Eigen::Index>(states.size()));
        for (std::size_t i = 0; i < states.size(); ++i) {
          batch.states.col(static_cast<Eigen::Index>(i)) = states[i];
          batch.advantages.push_back(ra[i].advantage);
          batch.returns.push_back(ra[i].ret);
        }
        Eigen::VectorXd grad;
        const auto loss = actor_critic_loss(local, batch, cfg.entropy, cfg.value_coeff, &grad);
        if (!std::isfinite(loss.total) || !grad.allFinite()) {
          std::lock_guard lock(log_mu);
          failure = "non-finite loss in episode " + std::to_string(episode) + " (policy " +
                    std::to_string(loss.policy) + ", value " + std::to_string(loss.value) + ")";
          next_episode.store(cfg.episodes);
          return;
        }
        store.apply(grad);
        store.snapshot(local);
      }
      const double reward = session.cumulated_utility();
      std::lock_guard lock(log_mu);
      result.episode_rewards.push_back(reward);
      if (on_episode) on_episode(episode, reward);
    }
  };

  if (cfg.workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < cfg.workers; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  if (!failure.empty()) throw TrainingError(failure);

  result.checkpoint = std::move(start);
  result.checkpoint.network = store.take();
  result.checkpoint.episodes_trained += result.episode_rewards.size();
  return result;
}

// --- Planner and evaluation ------------------------------------------------

RlPlanner::RlPlanner(std::shared_ptr<const PolicyCheckpoint> checkpoint, SelectMode mode, std::uint64_t seed)
    : checkpoint_(std::move(checkpoint)), mode_(mode), rng_(seed) {
  if (!checkpoint_) throw PreconditionError("planner needs a checkpoint");
}

void RlPlanner::check_layout(const Session& session) const {
  const ActionSpaceLayout want(session.config().k, session.catalog().attribute_count());
  if (checkpoint_->layout != want) {
    throw PreconditionError("checkpoint layout (k=" + std::to_string(checkpoint_->layout.k()) +
                            ", attributes=" + std::to_string(checkpoint_->layout.attributes()) +
                            ") does not match the session (k=" + std::to_string(want.k()) +
                            ", attributes=" + std::to_string(want.attributes()) + ")");
  }
}

std::optional<PipelineStep> RlPlanner::next(const Session& session) {
  check_layout(session);
  if (session.terminal()) return std::nullopt;
  const auto start = std::chrono::steady_clock::now();
  auto d = decide(checkpoint_->network, checkpoint_->layout, session, encode_state(session), mode_, rng_);
  if (!d.step) return std::nullopt;
  const double exec_ms = d.step->wall_ms;
  d.step->candidates = d.structural;
  d.step->wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  d.step->decide_ms = std::max(0.0, d.step->wall_ms - exec_ms);
  return std::move(d.step);
}

std::vector<ScoredAction> RlPlanner::score(const Session& session, const std::vector<Action>& candidates) {
  check_layout(session);
  std::vector<ScoredAction> out;
  if (session.terminal()) return out;
  const auto mask = action_mask(session, checkpoint_->layout);
  if (std::count(mask.begin(), mask.end(), 1) == 0) return out;
  const auto logits = checkpoint_->network.forward(encode_state(session)).logits.col(0).eval();
  const Eigen::VectorXd p = masked_softmax(logits, mask);
  for (const auto& a : candidates) {
    const auto idx = checkpoint_->layout.encode(a, session.current());
    if (!idx || !mask[*idx] || !session.plan(a)) continue;
    out.push_back({a, p[static_cast<Eigen::Index>(*idx)]});
  }
  return out;
}

namespace {

PolicyEvaluation evaluate_with(const std::function<std::unique_ptr<Planner>(std::size_t)>& make,
                               std::shared_ptr<const PatternCatalog> catalog, const ComponentScales& scales,
                               const SessionConfig& config, std::size_t episodes) {
  if (episodes == 0) throw PreconditionError("evaluation needs at least one episode");
  PolicyEvaluation ev;
  for (std::size_t e = 0; e < episodes; ++e) {
    Session session(catalog, scales, config);
    auto planner = make(e);
    run_full_pipeline(session, *planner);
    ev.cumulated.push_back(session.cumulated_utility());
    std::vector<Components> trace{session.bootstrap_breakdown().raw};
    for (const auto& s : session.history()) trace.push_back(s.breakdown.raw);
    ev.traces.push_back(std::move(trace));
  }
  ev.min = *std::min_element(ev.cumulated.begin(), ev.cumulated.end());
  ev.max = *std::max_element(ev.cumulated.begin(), ev.cumulated.end());
  double sum = 0.0;
  for (const double c : ev.cumulated) sum += c;
  ev.mean = sum / static_cast<double>(episodes);
  return ev;
}

}  // namespace

PolicyEvaluation evaluate_policy(const PolicyCheckpoint& checkpoint,
                                 std::shared_ptr<const PatternCatalog> catalog,
                                 const ComponentScales& scales, const SessionConfig& config,
                                 std::size_t episodes, std::uint64_t seed, SelectMode mode) {
  auto shared = std::make_shared<const PolicyCheckpoint>(checkpoint);
  return evaluate_with(
      [&](std::size_t e) { return std::make_unique<RlPlanner>(shared, mode, seed + e); },
      std::move(catalog), scales, config, episodes);
}

PolicyEvaluation evaluate_random(std::shared_ptr<const PatternCatalog> catalog,
                                 const ComponentScales& scales, const SessionConfig& config,
                                 std::size_t episodes, std::uint64_t seed) {
  return evaluate_with([&](std::size_t e) { return std::make_unique<RandomPlanner>(seed + e); },
                       std::move(catalog), scales, config, episodes);
}

}  // namespace edasum
