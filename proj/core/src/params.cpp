#include "wsnopt/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wsnopt {

size_t ParamStore::add(const std::string& name, size_t count) {
    for (const auto& s : segments_)
        if (s.name == name) throw std::invalid_argument("ParamStore: duplicate segment " + name);
    Segment s;
    s.name = name;
    s.offset = params_.size();
    s.count = count;
    segments_.push_back(s);
    fan_in_.push_back(0);
    params_.resize(params_.size() + count, 0.0);
    grads_.resize(params_.size(), 0.0);
    return segments_.size() - 1;
}

void ParamStore::zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

void ParamStore::zero_params() { std::fill(params_.begin(), params_.end(), 0.0); }

void ParamStore::set_fan_in(size_t handle, size_t fan_in) { fan_in_[handle] = fan_in; }

void ParamStore::init_he(uint64_t seed) {
    Rng rng(seed);
    auto ends_with = [](const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    for (size_t h = 0; h < segments_.size(); ++h) {
        const Segment& s = segments_[h];
        double* p = params_.data() + s.offset;
        if (ends_with(s.name, ".w")) {
            if (fan_in_[h] == 0) throw std::logic_error("ParamStore: fan_in unset for " + s.name);
            const double sd = std::sqrt(2.0 / static_cast<double>(fan_in_[h]));
            for (size_t i = 0; i < s.count; ++i) p[i] = sd * rng.normal();
        } else if (ends_with(s.name, ".gamma")) {
            std::fill(p, p + s.count, 1.0);
        } else {
            std::fill(p, p + s.count, 0.0);
        }
    }
}

double ParamStore::l2_sum() const {
    double acc = 0.0;
    for (double v : params_) acc += v * v;
    return acc;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::invalid_argument("Adam: size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        if (!std::isfinite(g)) throw std::runtime_error("Adam: non-finite gradient at index " + std::to_string(i));
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
        const double mh = m_[i] / c1;
        const double vh = v_[i] / c2;
        params[i] -= lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
}

}  // namespace wsnopt
