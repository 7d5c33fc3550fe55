#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsnopt/rng.hpp"

namespace wsnopt {

// All trainable parameters live in one flat double vector, carved into named
// segments registered in construction order. Gradients and Adam moments are
// parallel vectors of the same length, so the optimizer is a single loop and
// checkpoints are a single contiguous dump.
class ParamStore {
  public:
    struct Segment {
        std::string name;
        size_t offset = 0;
        size_t count = 0;
    };

    // Returns the segment handle (index into segments()).
    size_t add(const std::string& name, size_t count);

    size_t size() const { return params_.size(); }
    const std::vector<Segment>& segments() const { return segments_; }
    const Segment& segment(size_t handle) const { return segments_[handle]; }

    double* param(size_t handle) { return params_.data() + segments_[handle].offset; }
    const double* param(size_t handle) const { return params_.data() + segments_[handle].offset; }
    double* grad(size_t handle) { return grads_.data() + segments_[handle].offset; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& grads() { return grads_; }
    const std::vector<double>& grads() const { return grads_; }

    void zero_grads();
    void zero_params();

    // He-style init: every segment named "*.w" gets N(0, 2/fan_in) draws where
    // fan_in is supplied per segment at add time via set_fan_in; "*.gamma"
    // segments get 1.0; everything else 0.0. Draw order is segment order, so
    // init is reproducible from the seed alone.
    void set_fan_in(size_t handle, size_t fan_in);
    void init_he(uint64_t seed);

    double l2_sum() const;

  private:
    std::vector<Segment> segments_;
    std::vector<size_t> fan_in_;
    std::vector<double> params_;
    std::vector<double> grads_;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
  public:
    explicit Adam(size_t n = 0, AdamConfig cfg = {}) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grads, double lr);

    uint64_t step_count() const { return t_; }
    const std::vector<double>& m() const { return m_; }
    const std::vector<double>& v() const { return v_; }
    std::vector<double>& m() { return m_; }
    std::vector<double>& v() { return v_; }
    void set_step_count(uint64_t t) { t_ = t; }
    const AdamConfig& config() const { return cfg_; }

  private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    uint64_t t_ = 0;
};

}  // namespace wsnopt
