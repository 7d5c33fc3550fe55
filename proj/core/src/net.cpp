#include "wsnopt/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wsnopt {

void NetConfig::validate() const {
    if (n < 2) throw std::invalid_argument("NetConfig: n must be >= 2");
    if (channels < 1) throw std::invalid_argument("NetConfig: channels must be >= 1");
    if (conv_blocks < 1) throw std::invalid_argument("NetConfig: conv_blocks must be >= 1");
    if (filters < 1) throw std::invalid_argument("NetConfig: filters must be >= 1");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("NetConfig: kernel must be odd and positive");
    if (value_hidden < 1) throw std::invalid_argument("NetConfig: value_hidden must be >= 1");
    if (l2_lambda < 0.0) throw std::invalid_argument("NetConfig: l2_lambda must be >= 0");
}

struct PolicyValueNet::Flow {
    int batch = 0;
    std::vector<double> x;
    std::vector<uint8_t> mask;
    std::vector<std::vector<double>> trunk;
    BatchNorm::Cache stem_cache;
    std::vector<BatchNorm::Cache> block_caches;
    std::vector<double> pol_relu, logits, p;
    BatchNorm::Cache pol_cache;
    std::vector<double> val_relu, v1_relu, v;
    BatchNorm::Cache val_cache;
};

PolicyValueNet::PolicyValueNet(const NetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int f = cfg_.filters, k = cfg_.kernel, n = cfg_.n, p = cfg_.plane();
    const bool bias = !cfg_.use_batchnorm;

    size_t state_off = 0;
    stem_ = Conv2d{cfg_.channels, f, k, n, bias};
    stem_.build(ps_, "stem");
    if (cfg_.use_batchnorm) {
        stem_bn_ = BatchNorm{f, p};
        stem_bn_.build(ps_, "stem.bn", state_off);
        state_off += BatchNorm::state_size(f);
    }
    for (int i = 0; i < cfg_.conv_blocks; ++i) {
        const std::string name = "block" + std::to_string(i + 1);
        Conv2d c{f, f, k, n, bias};
        c.build(ps_, name);
        block_conv_.push_back(c);
        if (cfg_.use_batchnorm) {
            BatchNorm b{f, p};
            b.build(ps_, name + ".bn", state_off);
            state_off += BatchNorm::state_size(f);
            block_bn_.push_back(b);
        }
    }
    pol_conv_ = Conv2d{f, 2, 1, n, bias};
    pol_conv_.build(ps_, "policy.conv");
    if (cfg_.use_batchnorm) {
        pol_bn_ = BatchNorm{2, p};
        pol_bn_.build(ps_, "policy.bn", state_off);
        state_off += BatchNorm::state_size(2);
    }
    pol_fc_ = Dense{2 * p, cfg_.policy_dim()};
    pol_fc_.build(ps_, "policy.fc");

    val_conv_ = Conv2d{f, 1, 1, n, bias};
    val_conv_.build(ps_, "value.conv");
    if (cfg_.use_batchnorm) {
        val_bn_ = BatchNorm{1, p};
        val_bn_.build(ps_, "value.bn", state_off);
        state_off += BatchNorm::state_size(1);
    }
    val_fc1_ = Dense{p, cfg_.value_hidden};
    val_fc1_.build(ps_, "value.fc1");
    val_fc2_ = Dense{cfg_.value_hidden, 1};
    val_fc2_.build(ps_, "value.fc2");

    bn_state_.assign(state_off, 0.0);
    if (cfg_.use_batchnorm) {
        stem_bn_.init_state(bn_state_.data() + stem_bn_.state_offset);
        for (auto& b : block_bn_) b.init_state(bn_state_.data() + b.state_offset);
        pol_bn_.init_state(bn_state_.data() + pol_bn_.state_offset);
        val_bn_.init_state(bn_state_.data() + val_bn_.state_offset);
    }
    ps_.init_he(cfg_.weight_init_seed);
    adam_ = Adam(ps_.size());
}

void PolicyValueNet::forward(const double* encoded, const uint8_t* valid_mask, double* policy_out,
                             double* value_out) const {
    const int f = cfg_.filters, p = cfg_.plane(), a = cfg_.policy_dim(), r = cfg_.conv_blocks;
    const bool bn = cfg_.use_batchnorm;
    const size_t trunk_sz = static_cast<size_t>(f) * p;

    std::vector<double> z(trunk_sz), h(bn ? trunk_sz : 0), t_prev(trunk_sz), t_cur(trunk_sz);

    stem_.forward(ps_, encoded, 1, z.data());
    const double* cur = z.data();
    if (bn) {
        stem_bn_.forward_eval(ps_, z.data(), 1, h.data(), bn_state_.data() + stem_bn_.state_offset);
        cur = h.data();
    }
    relu_forward(cur, trunk_sz, t_prev.data());

    for (int i = 0; i < r; ++i) {
        block_conv_[static_cast<size_t>(i)].forward(ps_, t_prev.data(), 1, z.data());
        cur = z.data();
        if (bn) {
            block_bn_[static_cast<size_t>(i)].forward_eval(ps_, z.data(), 1, h.data(),
                                                           bn_state_.data() +
                                                               block_bn_[static_cast<size_t>(i)].state_offset);
            cur = h.data();
        }
        if (cfg_.use_residual) {
            for (size_t j = 0; j < trunk_sz; ++j) t_cur[j] = std::max(0.0, cur[j] + t_prev[j]);
        } else {
            relu_forward(cur, trunk_sz, t_cur.data());
        }
        t_prev.swap(t_cur);
    }

    std::vector<double> pz(static_cast<size_t>(2) * p), ph(bn ? static_cast<size_t>(2) * p : 0);
    pol_conv_.forward(ps_, t_prev.data(), 1, pz.data());
    cur = pz.data();
    if (bn) {
        pol_bn_.forward_eval(ps_, pz.data(), 1, ph.data(), bn_state_.data() + pol_bn_.state_offset);
        cur = ph.data();
    }
    std::vector<double> pr(static_cast<size_t>(2) * p);
    relu_forward(cur, static_cast<size_t>(2) * p, pr.data());
    std::vector<double> logits(static_cast<size_t>(a));
    pol_fc_.forward(ps_, pr.data(), 1, logits.data());
    masked_softmax(logits.data(), valid_mask, 1, a, policy_out);

    std::vector<double> vz(static_cast<size_t>(p)), vh(bn ? static_cast<size_t>(p) : 0);
    val_conv_.forward(ps_, t_prev.data(), 1, vz.data());
    cur = vz.data();
    if (bn) {
        val_bn_.forward_eval(ps_, vz.data(), 1, vh.data(), bn_state_.data() + val_bn_.state_offset);
        cur = vh.data();
    }
    std::vector<double> vr(static_cast<size_t>(p));
    relu_forward(cur, static_cast<size_t>(p), vr.data());
    std::vector<double> v1(static_cast<size_t>(cfg_.value_hidden));
    val_fc1_.forward(ps_, vr.data(), 1, v1.data());
    std::vector<double> v1r(static_cast<size_t>(cfg_.value_hidden));
    relu_forward(v1.data(), v1.size(), v1r.data());
    val_fc2_.forward(ps_, v1r.data(), 1, value_out);
}

std::pair<std::vector<double>, double> PolicyValueNet::forward(const std::vector<double>& encoded,
                                                               const std::vector<uint8_t>& valid_mask) const {
    if (encoded.size() != static_cast<size_t>(cfg_.channels) * cfg_.plane())
        throw std::invalid_argument("forward: encoded state has wrong size");
    if (valid_mask.size() != static_cast<size_t>(cfg_.policy_dim()))
        throw std::invalid_argument("forward: mask has wrong size");
    std::vector<double> policy(valid_mask.size());
    double value = 0.0;
    forward(encoded.data(), valid_mask.data(), policy.data(), &value);
    return {std::move(policy), value};
}

double PolicyValueNet::run_batch(const std::vector<EpisodeSample>& batch, double* running, Flow* flow) const {
    const int b = static_cast<int>(batch.size());
    if (b < 1) throw std::invalid_argument("loss: empty batch");
    const int c = cfg_.channels, f = cfg_.filters, p = cfg_.plane(), a = cfg_.policy_dim(), r = cfg_.conv_blocks;
    const bool bn = cfg_.use_batchnorm;
    const size_t in_sz = static_cast<size_t>(c) * p;
    const size_t trunk_sz = static_cast<size_t>(b) * f * p;

    flow->batch = b;
    flow->x.resize(static_cast<size_t>(b) * in_sz);
    flow->mask.resize(static_cast<size_t>(b) * a);
    for (int bi = 0; bi < b; ++bi) {
        const EpisodeSample& s = batch[static_cast<size_t>(bi)];
        if (s.encoded_state.size() != in_sz || s.valid_mask.size() != static_cast<size_t>(a) ||
            s.target_policy.size() != static_cast<size_t>(a))
            throw std::invalid_argument("loss: sample shape mismatch");
        std::memcpy(flow->x.data() + static_cast<size_t>(bi) * in_sz, s.encoded_state.data(),
                    in_sz * sizeof(double));
        std::memcpy(flow->mask.data() + static_cast<size_t>(bi) * a, s.valid_mask.data(), static_cast<size_t>(a));
    }

    flow->trunk.assign(static_cast<size_t>(r) + 1, {});
    for (auto& t : flow->trunk) t.resize(trunk_sz);
    flow->block_caches.resize(bn ? static_cast<size_t>(r) : 0);
    std::vector<double> z(trunk_sz), h(bn ? trunk_sz : 0);

    stem_.forward(ps_, flow->x.data(), b, z.data());
    const double* cur = z.data();
    if (bn) {
        stem_bn_.forward_train(ps_, z.data(), b, h.data(), flow->stem_cache,
                               running ? running + stem_bn_.state_offset : nullptr, kBnMomentum);
        cur = h.data();
    }
    relu_forward(cur, trunk_sz, flow->trunk[0].data());

    for (int i = 0; i < r; ++i) {
        const double* tin = flow->trunk[static_cast<size_t>(i)].data();
        block_conv_[static_cast<size_t>(i)].forward(ps_, tin, b, z.data());
        cur = z.data();
        if (bn) {
            auto& layer = block_bn_[static_cast<size_t>(i)];
            layer.forward_train(ps_, z.data(), b, h.data(), flow->block_caches[static_cast<size_t>(i)],
                                running ? running + layer.state_offset : nullptr, kBnMomentum);
            cur = h.data();
        }
        double* tout = flow->trunk[static_cast<size_t>(i) + 1].data();
        if (cfg_.use_residual) {
            for (size_t j = 0; j < trunk_sz; ++j) tout[j] = std::max(0.0, cur[j] + tin[j]);
        } else {
            relu_forward(cur, trunk_sz, tout);
        }
    }
    const double* trunk_top = flow->trunk[static_cast<size_t>(r)].data();

    const size_t pol_sz = static_cast<size_t>(b) * 2 * p;
    std::vector<double> pz(pol_sz), ph(bn ? pol_sz : 0);
    pol_conv_.forward(ps_, trunk_top, b, pz.data());
    cur = pz.data();
    if (bn) {
        pol_bn_.forward_train(ps_, pz.data(), b, ph.data(), flow->pol_cache,
                              running ? running + pol_bn_.state_offset : nullptr, kBnMomentum);
        cur = ph.data();
    }
    flow->pol_relu.resize(pol_sz);
    relu_forward(cur, pol_sz, flow->pol_relu.data());
    flow->logits.resize(static_cast<size_t>(b) * a);
    pol_fc_.forward(ps_, flow->pol_relu.data(), b, flow->logits.data());
    flow->p.resize(static_cast<size_t>(b) * a);
    masked_softmax(flow->logits.data(), flow->mask.data(), b, a, flow->p.data());

    const size_t val_sz = static_cast<size_t>(b) * p;
    std::vector<double> vz(val_sz), vh(bn ? val_sz : 0);
    val_conv_.forward(ps_, trunk_top, b, vz.data());
    cur = vz.data();
    if (bn) {
        val_bn_.forward_train(ps_, vz.data(), b, vh.data(), flow->val_cache,
                              running ? running + val_bn_.state_offset : nullptr, kBnMomentum);
        cur = vh.data();
    }
    flow->val_relu.resize(val_sz);
    relu_forward(cur, val_sz, flow->val_relu.data());
    std::vector<double> v1(static_cast<size_t>(b) * cfg_.value_hidden);
    val_fc1_.forward(ps_, flow->val_relu.data(), b, v1.data());
    flow->v1_relu.resize(v1.size());
    relu_forward(v1.data(), v1.size(), flow->v1_relu.data());
    flow->v.resize(static_cast<size_t>(b));
    val_fc2_.forward(ps_, flow->v1_relu.data(), b, flow->v.data());

    double acc = 0.0;
    for (int bi = 0; bi < b; ++bi) {
        const EpisodeSample& s = batch[static_cast<size_t>(bi)];
        const double dv = flow->v[static_cast<size_t>(bi)] - s.target_value;
        acc += dv * dv;
        const double* pp = flow->p.data() + static_cast<size_t>(bi) * a;
        for (int i = 0; i < a; ++i) {
            const double tp = s.target_policy[static_cast<size_t>(i)];
            if (tp != 0.0) acc -= tp * std::log(pp[i] + kLogEps);
        }
    }
    return acc / b + cfg_.l2_lambda * ps_.l2_sum();
}

void PolicyValueNet::backward_batch(const std::vector<EpisodeSample>& batch, Flow& flow) {
    const int b = flow.batch;
    const int f = cfg_.filters, p = cfg_.plane(), a = cfg_.policy_dim(), r = cfg_.conv_blocks;
    const bool bn = cfg_.use_batchnorm;
    const size_t trunk_sz = static_cast<size_t>(b) * f * p;

    ps_.zero_grads();

    std::vector<double> dp(static_cast<size_t>(b) * a, 0.0);
    for (int bi = 0; bi < b; ++bi) {
        const double* pp = flow.p.data() + static_cast<size_t>(bi) * a;
        double* dpp = dp.data() + static_cast<size_t>(bi) * a;
        for (int i = 0; i < a; ++i) {
            const double tp = batch[static_cast<size_t>(bi)].target_policy[static_cast<size_t>(i)];
            if (tp != 0.0) dpp[i] = -tp / (pp[i] + kLogEps) / b;
        }
    }
    std::vector<double> dlogits(static_cast<size_t>(b) * a);
    masked_softmax_backward(flow.p.data(), flow.mask.data(), dp.data(), b, a, dlogits.data());

    const size_t pol_sz = static_cast<size_t>(b) * 2 * p;
    std::vector<double> dpr(pol_sz, 0.0);
    pol_fc_.backward(ps_, flow.pol_relu.data(), b, dlogits.data(), dpr.data());
    std::vector<double> dph(pol_sz);
    relu_backward(flow.pol_relu.data(), dpr.data(), pol_sz, dph.data());
    const double* dpz = dph.data();
    std::vector<double> dpz_buf;
    if (bn) {
        dpz_buf.resize(pol_sz);
        pol_bn_.backward(ps_, dph.data(), b, flow.pol_cache, dpz_buf.data());
        dpz = dpz_buf.data();
    }
    std::vector<double> dtrunk(trunk_sz, 0.0);
    pol_conv_.backward(ps_, flow.trunk[static_cast<size_t>(r)].data(), b, dpz, dtrunk.data());

    std::vector<double> dval(static_cast<size_t>(b));
    for (int bi = 0; bi < b; ++bi)
        dval[static_cast<size_t>(bi)] =
            2.0 * (flow.v[static_cast<size_t>(bi)] - batch[static_cast<size_t>(bi)].target_value) / b;
    const size_t hid_sz = static_cast<size_t>(b) * cfg_.value_hidden;
    std::vector<double> dv1r(hid_sz, 0.0);
    val_fc2_.backward(ps_, flow.v1_relu.data(), b, dval.data(), dv1r.data());
    std::vector<double> dv1(hid_sz);
    relu_backward(flow.v1_relu.data(), dv1r.data(), hid_sz, dv1.data());
    const size_t val_sz = static_cast<size_t>(b) * p;
    std::vector<double> dvr(val_sz, 0.0);
    val_fc1_.backward(ps_, flow.val_relu.data(), b, dv1.data(), dvr.data());
    std::vector<double> dvh(val_sz);
    relu_backward(flow.val_relu.data(), dvr.data(), val_sz, dvh.data());
    const double* dvz = dvh.data();
    std::vector<double> dvz_buf;
    if (bn) {
        dvz_buf.resize(val_sz);
        val_bn_.backward(ps_, dvh.data(), b, flow.val_cache, dvz_buf.data());
        dvz = dvz_buf.data();
    }
    val_conv_.backward(ps_, flow.trunk[static_cast<size_t>(r)].data(), b, dvz, dtrunk.data());

    std::vector<double> ds(trunk_sz), dz_buf(bn ? trunk_sz : 0), dprev;
    for (int i = r - 1; i >= 0; --i) {
        relu_backward(flow.trunk[static_cast<size_t>(i) + 1].data(), dtrunk.data(), trunk_sz, ds.data());
        const double* dz = ds.data();
        if (bn) {
            block_bn_[static_cast<size_t>(i)].backward(ps_, ds.data(), b, flow.block_caches[static_cast<size_t>(i)],
                                                       dz_buf.data());
            dz = dz_buf.data();
        }
        dprev.assign(trunk_sz, 0.0);
        block_conv_[static_cast<size_t>(i)].backward(ps_, flow.trunk[static_cast<size_t>(i)].data(), b, dz,
                                                     dprev.data());
        if (cfg_.use_residual)
            for (size_t j = 0; j < trunk_sz; ++j) dprev[j] += ds[j];
        dtrunk.swap(dprev);
    }
    relu_backward(flow.trunk[0].data(), dtrunk.data(), trunk_sz, ds.data());
    const double* dzs = ds.data();
    if (bn) {
        stem_bn_.backward(ps_, ds.data(), b, flow.stem_cache, dz_buf.data());
        dzs = dz_buf.data();
    }
    stem_.backward(ps_, flow.x.data(), b, dzs, nullptr);

    auto& g = ps_.grads();
    const auto& th = ps_.params();
    for (size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * cfg_.l2_lambda * th[i];
}

double PolicyValueNet::loss(const std::vector<EpisodeSample>& batch) const {
    Flow flow;
    return run_batch(batch, nullptr, &flow);
}

double PolicyValueNet::train_step(const std::vector<EpisodeSample>& batch, double lr) {
    Flow flow;
    const double l = run_batch(batch, bn_state_.empty() ? nullptr : bn_state_.data(), &flow);
    backward_batch(batch, flow);
    adam_.step(ps_.params(), ps_.grads(), lr);
    for (double v : ps_.params())
        if (!std::isfinite(v)) throw std::runtime_error("train_step: non-finite parameter after update");
    return l;
}

void PolicyValueNet::zero_weights() { ps_.zero_params(); }

namespace {

constexpr char kMagic[8] = {'W', 'S', 'N', 'N', 'E', 'T', '0', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void PolicyValueNet::save(const std::string& path, uint64_t spec_fingerprint) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof kMagic);
    write_pod(out, uint32_t{1});
    write_pod(out, int32_t{cfg_.channels});
    write_pod(out, int32_t{cfg_.n});
    write_pod(out, int32_t{cfg_.conv_blocks});
    write_pod(out, int32_t{cfg_.filters});
    write_pod(out, int32_t{cfg_.kernel});
    write_pod(out, int32_t{cfg_.use_residual ? 1 : 0});
    write_pod(out, int32_t{cfg_.use_batchnorm ? 1 : 0});
    write_pod(out, int32_t{cfg_.value_hidden});
    write_pod(out, cfg_.weight_init_seed);
    write_pod(out, cfg_.l2_lambda);
    write_pod(out, spec_fingerprint);
    write_pod(out, static_cast<uint64_t>(ps_.size()));
    write_pod(out, static_cast<uint64_t>(bn_state_.size()));
    write_pod(out, adam_.step_count());
    write_doubles(out, ps_.params());
    write_doubles(out, adam_.m());
    write_doubles(out, adam_.v());
    write_doubles(out, bn_state_);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

LoadedNet PolicyValueNet::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("checkpoint " + path + ": bad magic (not a net checkpoint)");
    uint32_t version = 0;
    read_pod(in, version);
    if (version != 1)
        throw std::runtime_error("checkpoint " + path + ": unsupported version " + std::to_string(version));

    NetConfig cfg;
    int32_t i32 = 0;
    read_pod(in, i32), cfg.channels = i32;
    read_pod(in, i32), cfg.n = i32;
    read_pod(in, i32), cfg.conv_blocks = i32;
    read_pod(in, i32), cfg.filters = i32;
    read_pod(in, i32), cfg.kernel = i32;
    read_pod(in, i32), cfg.use_residual = i32 != 0;
    read_pod(in, i32), cfg.use_batchnorm = i32 != 0;
    read_pod(in, i32), cfg.value_hidden = i32;
    read_pod(in, cfg.weight_init_seed);
    read_pod(in, cfg.l2_lambda);
    uint64_t fp = 0, n_params = 0, n_state = 0, adam_step = 0;
    read_pod(in, fp);
    read_pod(in, n_params);
    read_pod(in, n_state);
    read_pod(in, adam_step);
    if (!in) throw std::runtime_error("checkpoint " + path + ": truncated header");

    LoadedNet out{PolicyValueNet(cfg), fp};
    PolicyValueNet& net = out.net;
    if (n_params != net.ps_.size() || n_state != net.bn_state_.size())
        throw std::runtime_error("checkpoint " + path + ": parameter layout does not match config");
    read_doubles(in, net.ps_.params());
    read_doubles(in, net.adam_.m());
    read_doubles(in, net.adam_.v());
    read_doubles(in, net.bn_state_);
    net.adam_.set_step_count(adam_step);
    if (!in) throw std::runtime_error("checkpoint " + path + ": truncated payload");
    return out;
}

}  // namespace wsnopt
