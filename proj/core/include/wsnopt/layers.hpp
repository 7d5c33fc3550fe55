#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsnopt/params.hpp"

namespace wsnopt {

// Layers operate on contiguous double buffers in (B, C, H, W) row-major
// order, with parameters resident in a ParamStore. backward() accumulates
// parameter gradients into the store and writes input gradients to dx (which
// may be null for the first layer).

// Square-input 2D convolution, stride 1, same padding, odd kernel. Bias is
// optional (left out when a batchnorm follows).
struct Conv2d {
    int in_c = 0, out_c = 0, k = 3, n = 0;
    bool has_bias = false;
    size_t w_seg = 0, b_seg = 0;

    void build(ParamStore& ps, const std::string& name);
    void forward(const ParamStore& ps, const double* x, int batch, double* y) const;
    void backward(ParamStore& ps, const double* x, int batch, const double* dy, double* dx) const;

    size_t out_size(int batch) const { return static_cast<size_t>(batch) * out_c * n * n; }
};

// Per-channel batchnorm over (B, C, S). Batch statistics in training, running
// averages in inference; the running variance uses the same biased estimator
// as normalization. Running state lives outside the ParamStore (it is not
// trained) in a flat [mean(C), var(C)] block owned by the caller.
struct BatchNorm {
    int channels = 0, spatial = 0;
    double eps = 1e-5;
    size_t gamma_seg = 0, beta_seg = 0;
    size_t state_offset = 0;

    struct Cache {
        std::vector<double> xhat;
        std::vector<double> inv_std;
    };

    void build(ParamStore& ps, const std::string& name, size_t state_off);
    static size_t state_size(int channels) { return 2 * static_cast<size_t>(channels); }
    void init_state(double* state) const;

    void forward_train(const ParamStore& ps, const double* x, int batch, double* y, Cache& cache, double* state,
                       double momentum) const;
    void forward_eval(const ParamStore& ps, const double* x, int batch, double* y, const double* state) const;
    void backward(ParamStore& ps, const double* dy, int batch, const Cache& cache, double* dx) const;
};

// y = x W^T + b with W stored row-major (out, in).
struct Dense {
    int in_dim = 0, out_dim = 0;
    size_t w_seg = 0, b_seg = 0;

    void build(ParamStore& ps, const std::string& name);
    void forward(const ParamStore& ps, const double* x, int batch, double* y) const;
    void backward(ParamStore& ps, const double* x, int batch, const double* dy, double* dx) const;
};

void relu_forward(const double* x, size_t count, double* y);
// Uses the forward output: d/dx = dy where y > 0.
void relu_backward(const double* y, const double* dy, size_t count, double* dx);

// Softmax over the masked entries of each row; masked-out entries are exactly
// zero in the output. Rows must have at least one valid entry.
void masked_softmax(const double* logits, const uint8_t* mask, int batch, int dim, double* p);
// dlogits_i = p_i (dp_i - sum_j p_j dp_j), restricted to valid entries.
void masked_softmax_backward(const double* p, const uint8_t* mask, const double* dp, int batch, int dim,
                             double* dlogits);

}  // namespace wsnopt
