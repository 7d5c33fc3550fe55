#include "wsnopt/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wsnopt {

void Conv2d::build(ParamStore& ps, const std::string& name) {
    if (k % 2 == 0 || k < 1) throw std::invalid_argument("Conv2d: kernel must be odd");
    w_seg = ps.add(name + ".w", static_cast<size_t>(out_c) * in_c * k * k);
    ps.set_fan_in(w_seg, static_cast<size_t>(in_c) * k * k);
    if (has_bias) b_seg = ps.add(name + ".b", static_cast<size_t>(out_c));
}

void Conv2d::forward(const ParamStore& ps, const double* x, int batch, double* y) const {
    const int pad = k / 2;
    const size_t plane = static_cast<size_t>(n) * n;
    const double* w = ps.param(w_seg);
    const double* b = has_bias ? ps.param(b_seg) : nullptr;
    for (int bi = 0; bi < batch; ++bi) {
        for (int oc = 0; oc < out_c; ++oc) {
            double* yp = y + (static_cast<size_t>(bi) * out_c + oc) * plane;
            const double bias = b ? b[oc] : 0.0;
            std::fill(yp, yp + plane, bias);
            for (int ic = 0; ic < in_c; ++ic) {
                const double* xp = x + (static_cast<size_t>(bi) * in_c + ic) * plane;
                const double* wp = w + (static_cast<size_t>(oc) * in_c + ic) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const double wv = wp[ky * k + kx];
                        const int dy0 = ky - pad, dx0 = kx - pad;
                        const int y_lo = std::max(0, -dy0), y_hi = std::min(n, n - dy0);
                        const int x_lo = std::max(0, -dx0), x_hi = std::min(n, n - dx0);
                        for (int yy = y_lo; yy < y_hi; ++yy) {
                            double* yrow = yp + static_cast<size_t>(yy) * n;
                            const double* xrow = xp + static_cast<size_t>(yy + dy0) * n + dx0;
                            for (int xx = x_lo; xx < x_hi; ++xx) yrow[xx] += wv * xrow[xx];
                        }
                    }
                }
            }
        }
    }
}

void Conv2d::backward(ParamStore& ps, const double* x, int batch, const double* dy, double* dx) const {
    const int pad = k / 2;
    const size_t plane = static_cast<size_t>(n) * n;
    const double* w = ps.param(w_seg);
    double* dw = ps.grad(w_seg);
    double* db = has_bias ? ps.grad(b_seg) : nullptr;

    for (int bi = 0; bi < batch; ++bi) {
        for (int oc = 0; oc < out_c; ++oc) {
            const double* dyp = dy + (static_cast<size_t>(bi) * out_c + oc) * plane;
            if (db)
                for (size_t i = 0; i < plane; ++i) db[oc] += dyp[i];
            for (int ic = 0; ic < in_c; ++ic) {
                const double* xp = x + (static_cast<size_t>(bi) * in_c + ic) * plane;
                double* dxp = dx ? dx + (static_cast<size_t>(bi) * in_c + ic) * plane : nullptr;
                const double* wp = w + (static_cast<size_t>(oc) * in_c + ic) * k * k;
                double* dwp = dw + (static_cast<size_t>(oc) * in_c + ic) * k * k;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const int dy0 = ky - pad, dx0 = kx - pad;
                        const int y_lo = std::max(0, -dy0), y_hi = std::min(n, n - dy0);
                        const int x_lo = std::max(0, -dx0), x_hi = std::min(n, n - dx0);
                        const double wv = wp[ky * k + kx];
                        double dw_acc = 0.0;
                        for (int yy = y_lo; yy < y_hi; ++yy) {
                            const double* dyrow = dyp + static_cast<size_t>(yy) * n;
                            const double* xrow = xp + static_cast<size_t>(yy + dy0) * n + dx0;
                            for (int xx = x_lo; xx < x_hi; ++xx) dw_acc += dyrow[xx] * xrow[xx];
                            if (dxp) {
                                double* dxrow = dxp + static_cast<size_t>(yy + dy0) * n + dx0;
                                for (int xx = x_lo; xx < x_hi; ++xx) dxrow[xx] += wv * dyrow[xx];
                            }
                        }
                        dwp[ky * k + kx] += dw_acc;
                    }
                }
            }
        }
    }
}

void BatchNorm::build(ParamStore& ps, const std::string& name, size_t state_off) {
    gamma_seg = ps.add(name + ".gamma", static_cast<size_t>(channels));
    beta_seg = ps.add(name + ".beta", static_cast<size_t>(channels));
    state_offset = state_off;
}

void BatchNorm::init_state(double* state) const {
    for (int c = 0; c < channels; ++c) {
        state[c] = 0.0;
        state[channels + c] = 1.0;
    }
}

void BatchNorm::forward_train(const ParamStore& ps, const double* x, int batch, double* y, Cache& cache,
                              double* state, double momentum) const {
    const double* gamma = ps.param(gamma_seg);
    const double* beta = ps.param(beta_seg);
    const size_t s = static_cast<size_t>(spatial);
    const double m_count = static_cast<double>(batch) * spatial;
    cache.xhat.resize(static_cast<size_t>(batch) * channels * s);
    cache.inv_std.resize(static_cast<size_t>(channels));

    for (int c = 0; c < channels; ++c) {
        double mean = 0.0;
        for (int bi = 0; bi < batch; ++bi) {
            const double* xp = x + (static_cast<size_t>(bi) * channels + c) * s;
            for (size_t i = 0; i < s; ++i) mean += xp[i];
        }
        mean /= m_count;
        double var = 0.0;
        for (int bi = 0; bi < batch; ++bi) {
            const double* xp = x + (static_cast<size_t>(bi) * channels + c) * s;
            for (size_t i = 0; i < s; ++i) {
                const double d = xp[i] - mean;
                var += d * d;
            }
        }
        var /= m_count;
        const double inv_std = 1.0 / std::sqrt(var + eps);
        cache.inv_std[static_cast<size_t>(c)] = inv_std;
        for (int bi = 0; bi < batch; ++bi) {
            const double* xp = x + (static_cast<size_t>(bi) * channels + c) * s;
            double* xhp = cache.xhat.data() + (static_cast<size_t>(bi) * channels + c) * s;
            double* yp = y + (static_cast<size_t>(bi) * channels + c) * s;
            for (size_t i = 0; i < s; ++i) {
                xhp[i] = (xp[i] - mean) * inv_std;
                yp[i] = gamma[c] * xhp[i] + beta[c];
            }
        }
        if (state) {
            state[c] = momentum * state[c] + (1.0 - momentum) * mean;
            state[channels + c] = momentum * state[channels + c] + (1.0 - momentum) * var;
        }
    }
}

void BatchNorm::forward_eval(const ParamStore& ps, const double* x, int batch, double* y, const double* state) const {
    const double* gamma = ps.param(gamma_seg);
    const double* beta = ps.param(beta_seg);
    const size_t s = static_cast<size_t>(spatial);
    for (int c = 0; c < channels; ++c) {
        const double inv_std = 1.0 / std::sqrt(state[channels + c] + eps);
        const double scale = gamma[c] * inv_std;
        const double shift = beta[c] - scale * state[c];
        for (int bi = 0; bi < batch; ++bi) {
            const double* xp = x + (static_cast<size_t>(bi) * channels + c) * s;
            double* yp = y + (static_cast<size_t>(bi) * channels + c) * s;
            for (size_t i = 0; i < s; ++i) yp[i] = scale * xp[i] + shift;
        }
    }
}

void BatchNorm::backward(ParamStore& ps, const double* dy, int batch, const Cache& cache, double* dx) const {
    const double* gamma = ps.param(gamma_seg);
    double* dgamma = ps.grad(gamma_seg);
    double* dbeta = ps.grad(beta_seg);
    const size_t s = static_cast<size_t>(spatial);
    const double m_count = static_cast<double>(batch) * spatial;

    for (int c = 0; c < channels; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int bi = 0; bi < batch; ++bi) {
            const double* dyp = dy + (static_cast<size_t>(bi) * channels + c) * s;
            const double* xhp = cache.xhat.data() + (static_cast<size_t>(bi) * channels + c) * s;
            for (size_t i = 0; i < s; ++i) {
                sum_dy += dyp[i];
                sum_dy_xhat += dyp[i] * xhp[i];
            }
        }
        dgamma[c] += sum_dy_xhat;
        dbeta[c] += sum_dy;
        if (!dx) continue;
        const double inv_std = cache.inv_std[static_cast<size_t>(c)];
        const double g = gamma[c];
        for (int bi = 0; bi < batch; ++bi) {
            const double* dyp = dy + (static_cast<size_t>(bi) * channels + c) * s;
            const double* xhp = cache.xhat.data() + (static_cast<size_t>(bi) * channels + c) * s;
            double* dxp = dx + (static_cast<size_t>(bi) * channels + c) * s;
            for (size_t i = 0; i < s; ++i)
                dxp[i] = g * inv_std / m_count * (m_count * dyp[i] - sum_dy - xhp[i] * sum_dy_xhat);
        }
    }
}

void Dense::build(ParamStore& ps, const std::string& name) {
    w_seg = ps.add(name + ".w", static_cast<size_t>(out_dim) * in_dim);
    ps.set_fan_in(w_seg, static_cast<size_t>(in_dim));
    b_seg = ps.add(name + ".b", static_cast<size_t>(out_dim));
}

void Dense::forward(const ParamStore& ps, const double* x, int batch, double* y) const {
    const double* w = ps.param(w_seg);
    const double* b = ps.param(b_seg);
    for (int bi = 0; bi < batch; ++bi) {
        const double* xp = x + static_cast<size_t>(bi) * in_dim;
        double* yp = y + static_cast<size_t>(bi) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wp = w + static_cast<size_t>(o) * in_dim;
            double acc = b[o];
            for (int i = 0; i < in_dim; ++i) acc += wp[i] * xp[i];
            yp[o] = acc;
        }
    }
}

void Dense::backward(ParamStore& ps, const double* x, int batch, const double* dy, double* dx) const {
    const double* w = ps.param(w_seg);
    double* dw = ps.grad(w_seg);
    double* db = ps.grad(b_seg);
    for (int bi = 0; bi < batch; ++bi) {
        const double* xp = x + static_cast<size_t>(bi) * in_dim;
        const double* dyp = dy + static_cast<size_t>(bi) * out_dim;
        double* dxp = dx ? dx + static_cast<size_t>(bi) * in_dim : nullptr;
        for (int o = 0; o < out_dim; ++o) {
            const double g = dyp[o];
            double* dwp = dw + static_cast<size_t>(o) * in_dim;
            const double* wp = w + static_cast<size_t>(o) * in_dim;
            db[o] += g;
            for (int i = 0; i < in_dim; ++i) dwp[i] += g * xp[i];
            if (dxp)
                for (int i = 0; i < in_dim; ++i) dxp[i] += g * wp[i];
        }
    }
}

void relu_forward(const double* x, size_t count, double* y) {
    for (size_t i = 0; i < count; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* y, const double* dy, size_t count, double* dx) {
    for (size_t i = 0; i < count; ++i) dx[i] = y[i] > 0.0 ? dy[i] : 0.0;
}

void masked_softmax(const double* logits, const uint8_t* mask, int batch, int dim, double* p) {
    for (int bi = 0; bi < batch; ++bi) {
        const double* lp = logits + static_cast<size_t>(bi) * dim;
        const uint8_t* mp = mask + static_cast<size_t>(bi) * dim;
        double* pp = p + static_cast<size_t>(bi) * dim;
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < dim; ++i)
            if (mp[i] && lp[i] > mx) mx = lp[i];
        if (!std::isfinite(mx)) throw std::invalid_argument("masked_softmax: row has no valid entry");
        double z = 0.0;
        for (int i = 0; i < dim; ++i) {
            pp[i] = mp[i] ? std::exp(lp[i] - mx) : 0.0;
            z += pp[i];
        }
        for (int i = 0; i < dim; ++i) pp[i] /= z;
    }
}

void masked_softmax_backward(const double* p, const uint8_t* mask, const double* dp, int batch, int dim,
                             double* dlogits) {
    for (int bi = 0; bi < batch; ++bi) {
        const double* pp = p + static_cast<size_t>(bi) * dim;
        const uint8_t* mp = mask + static_cast<size_t>(bi) * dim;
        const double* dpp = dp + static_cast<size_t>(bi) * dim;
        double* dlp = dlogits + static_cast<size_t>(bi) * dim;
        double dot = 0.0;
        for (int i = 0; i < dim; ++i)
            if (mp[i]) dot += pp[i] * dpp[i];
        for (int i = 0; i < dim; ++i) dlp[i] = mp[i] ? pp[i] * (dpp[i] - dot) : 0.0;
    }
}

}  // namespace wsnopt
