#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wsnopt/layers.hpp"
#include "wsnopt/params.hpp"

namespace wsnopt {

// Policy/value network over encoded topology states. Trunk: stem conv then
// conv_blocks residual conv blocks (relu(bn(conv(x)) + x)). Heads: 1x1 conv +
// dense to n^2 policy logits (masked softmax), and 1x1 conv + two dense
// layers to a scalar value. All math is double precision with handwritten
// backward passes; Adam is the only optimizer.
struct NetConfig {
    int channels = 4;
    int n = 0;
    int conv_blocks = 3;
    int filters = 32;
    int kernel = 3;
    bool use_residual = true;
    bool use_batchnorm = true;
    int value_hidden = 64;
    uint64_t weight_init_seed = 1;
    double l2_lambda = 1e-4;

    int plane() const { return n * n; }
    int policy_dim() const { return n * n; }
    void validate() const;
    bool operator==(const NetConfig&) const = default;
};

struct EpisodeSample {
    std::vector<double> encoded_state;  // channels * n * n
    std::vector<uint8_t> valid_mask;    // n * n flat action entries
    std::vector<double> target_policy;  // n * n, zero on invalid entries
    double target_value = 0.0;
};

struct LoadedNet;

class PolicyValueNet {
  public:
    explicit PolicyValueNet(const NetConfig& cfg);

    const NetConfig& config() const { return cfg_; }
    size_t param_count() const { return ps_.size(); }

    // Inference with running batchnorm statistics. policy_out gets n^2
    // probabilities (exact zeros on masked entries), value_out one scalar.
    void forward(const double* encoded, const uint8_t* valid_mask, double* policy_out, double* value_out) const;
    std::pair<std::vector<double>, double> forward(const std::vector<double>& encoded,
                                                   const std::vector<uint8_t>& valid_mask) const;

    // Batch loss under training-mode batchnorm (batch statistics), without
    // touching running averages:
    //   mean over batch[(value - target_value)^2 - sum target_policy*log(policy + 1e-10)] + l2_lambda*|params|^2
    double loss(const std::vector<EpisodeSample>& batch) const;

    // Full backward pass + one Adam update (beta1 0.9, beta2 0.999, eps 1e-8,
    // bias correction). Returns the pre-update loss.
    double train_step(const std::vector<EpisodeSample>& batch, double lr);

    // All parameters to zero: uniform policy over valid actions, value 0.
    void zero_weights();

    void save(const std::string& path, uint64_t spec_fingerprint) const;
    static LoadedNet load(const std::string& path);

    ParamStore& store() { return ps_; }
    const ParamStore& store() const { return ps_; }
    Adam& adam() { return adam_; }
    const Adam& adam() const { return adam_; }
    const std::vector<double>& bn_state() const { return bn_state_; }

  private:
    struct Flow;
    double run_batch(const std::vector<EpisodeSample>& batch, double* running, Flow* flow) const;
    void backward_batch(const std::vector<EpisodeSample>& batch, Flow& flow);

    NetConfig cfg_;
    ParamStore ps_;
    Adam adam_;
    std::vector<double> bn_state_;

    Conv2d stem_;
    BatchNorm stem_bn_;
    std::vector<Conv2d> block_conv_;
    std::vector<BatchNorm> block_bn_;
    Conv2d pol_conv_;
    BatchNorm pol_bn_;
    Dense pol_fc_;
    Conv2d val_conv_;
    BatchNorm val_bn_;
    Dense val_fc1_;
    Dense val_fc2_;

    static constexpr double kBnMomentum = 0.9;
    static constexpr double kLogEps = 1e-10;
};

// Checkpoint payload: the restored net plus the fingerprint of the instance
// it was trained on.
struct LoadedNet {
    PolicyValueNet net;
    uint64_t spec_fingerprint = 0;
};

}  // namespace wsnopt
