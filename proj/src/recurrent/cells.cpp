#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cells_internal.hpp"
#include "textcascade/simd/kernels.hpp"

namespace textcascade::detail {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = A v + B h
void affine2(const Matrix& a, std::span<const double> v, const Matrix& b, std::span<const double> h,
             Vec& out) {
    out.resize(a.rows);
    simd::matvec(a.data, v, out);
    for (std::size_t r = 0; r < b.rows; ++r) {
        out[r] += simd::dot(b.row(r), h);
    }
}

void check_inputs(const InputSequence& inputs, std::size_t input_dim) {
    if (inputs.empty()) {
        throw ContractViolation("recurrent forward pass on an empty sequence");
    }
    for (const auto& v : inputs) {
        if (v.size() != input_dim) {
            throw ContractViolation("input vector of length " + std::to_string(v.size()) +
                                    ", model expects " + std::to_string(input_dim));
        }
    }
}

}  // namespace

ClassDistribution output_distribution(const Matrix& output, std::span<const double> hidden) {
    ClassDistribution dist;
    dist.probs.resize(output.rows);
    simd::matvec(output.data, hidden, dist.probs);
    softmax_inplace(dist.probs);
    return dist;
}

// dlogits = y - onehot(target); returns -log y[target]
double output_delta(const ClassDistribution& dist, ClassId target, Vec& delta) {
    if (target >= dist.probs.size()) {
        throw ContractViolation("target class " + std::to_string(target) + " outside " +
                                std::to_string(dist.probs.size()) + " classes");
    }
    delta = dist.probs;
    delta[target] -= 1.0;
    return -std::log(dist.probs[target]);
}

void gru_step(const GruParams& p, std::span<const double> v, const Vec& h_prev, GruStep& s,
              Vec& scratch) {
    const std::size_t hd = p.hidden_dim();
    affine2(p.update_in, v, p.update_rec, h_prev, s.z);
    affine2(p.reset_in, v, p.reset_rec, h_prev, s.r);
    for (std::size_t k = 0; k < hd; ++k) {
        s.z[k] = sigmoid(s.z[k]);
        s.r[k] = sigmoid(s.r[k]);
    }
    s.gated_prev.resize(hd);
    for (std::size_t k = 0; k < hd; ++k) s.gated_prev[k] = h_prev[k] * s.r[k];
    affine2(p.candidate_in, v, p.candidate_rec, s.gated_prev, scratch);
    s.cand.resize(hd);
    s.h.resize(hd);
    for (std::size_t k = 0; k < hd; ++k) {
        s.cand[k] = std::tanh(scratch[k]);
        s.h[k] = (1.0 - s.z[k]) * s.cand[k] + s.z[k] * h_prev[k];
    }
}

void lstm_step(const LstmParams& p, std::span<const double> v, const Vec& h_prev, const Vec& c_prev,
               LstmStep& s) {
    const std::size_t hd = p.hidden_dim();
    affine2(p.input_in, v, p.input_rec, h_prev, s.i);
    affine2(p.forget_in, v, p.forget_rec, h_prev, s.f);
    affine2(p.output_gate_in, v, p.output_gate_rec, h_prev, s.o);
    affine2(p.candidate_in, v, p.candidate_rec, h_prev, s.g);
    s.c.resize(hd);
    s.tanh_c.resize(hd);
    s.h.resize(hd);
    for (std::size_t k = 0; k < hd; ++k) {
        s.i[k] = sigmoid(s.i[k]);
        s.f[k] = sigmoid(s.f[k]);
        s.o[k] = sigmoid(s.o[k]);
        s.g[k] = std::tanh(s.g[k]);
        s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
        s.tanh_c[k] = std::tanh(s.c[k]);
        s.h[k] = s.o[k] * s.tanh_c[k];
    }
}

std::vector<GruStep> gru_unroll(const GruParams& p, const InputSequence& inputs) {
    check_inputs(inputs, p.input_dim());
    std::vector<GruStep> steps(inputs.size());
    Vec h0(p.hidden_dim(), 0.0);
    Vec scratch;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        gru_step(p, inputs[j], j == 0 ? h0 : steps[j - 1].h, steps[j], scratch);
    }
    return steps;
}

std::vector<LstmStep> lstm_unroll(const LstmParams& p, const InputSequence& inputs) {
    check_inputs(inputs, p.input_dim());
    std::vector<LstmStep> steps(inputs.size());
    Vec zero(p.hidden_dim(), 0.0);
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        lstm_step(p, inputs[j], j == 0 ? zero : steps[j - 1].h, j == 0 ? zero : steps[j - 1].c,
                  steps[j]);
    }
    return steps;
}

namespace {

// grad_in += delta v^T; grad_rec += delta h^T; dh_prev += rec^T delta
void accumulate_gate(const Vec& delta, std::span<const double> v, std::span<const double> h_prev,
                     const Matrix& rec, Matrix& grad_in, Matrix& grad_rec, Vec& dh_prev) {
    simd::rank1_update(grad_in.data, 1.0, delta, v);
    simd::rank1_update(grad_rec.data, 1.0, delta, h_prev);
    simd::matvec_transposed_add(rec.data, delta, dh_prev);
}

}  // namespace

void gru_backward(const GruParams& p, const std::vector<GruStep>& steps, const InputSequence& inputs,
                  Vec dh, GruParams& g) {
    const std::size_t hd = p.hidden_dim();
    const Vec h0(hd, 0.0);
    Vec dh_prev(hd), da_z(hd), da_r(hd), da_c(hd), d_gated(hd);
    for (std::size_t j = steps.size(); j-- > 0;) {
        const auto& s = steps[j];
        const Vec& h_prev = j == 0 ? h0 : steps[j - 1].h;
        const auto v = inputs[j];
        for (std::size_t k = 0; k < hd; ++k) {
            dh_prev[k] = dh[k] * s.z[k];
            const double dc = dh[k] * (1.0 - s.z[k]);
            const double dz = dh[k] * (h_prev[k] - s.cand[k]);
            da_c[k] = dc * (1.0 - s.cand[k] * s.cand[k]);
            da_z[k] = dz * s.z[k] * (1.0 - s.z[k]);
        }
        // the candidate sees h_prev o r
        simd::rank1_update(g.candidate_in.data, 1.0, da_c, v);
        simd::rank1_update(g.candidate_rec.data, 1.0, da_c, s.gated_prev);
        std::fill(d_gated.begin(), d_gated.end(), 0.0);
        simd::matvec_transposed_add(p.candidate_rec.data, da_c, d_gated);
        for (std::size_t k = 0; k < hd; ++k) {
            const double dr = d_gated[k] * h_prev[k];
            dh_prev[k] += d_gated[k] * s.r[k];
            da_r[k] = dr * s.r[k] * (1.0 - s.r[k]);
        }
        accumulate_gate(da_z, v, h_prev, p.update_rec, g.update_in, g.update_rec, dh_prev);
        accumulate_gate(da_r, v, h_prev, p.reset_rec, g.reset_in, g.reset_rec, dh_prev);
        std::swap(dh, dh_prev);
    }
}

void lstm_backward(const LstmParams& p, const std::vector<LstmStep>& steps,
                   const InputSequence& inputs, Vec dh, LstmParams& g) {
    const std::size_t hd = p.hidden_dim();
    const Vec zero(hd, 0.0);
    Vec dc(hd, 0.0);
    Vec dh_prev(hd), da_i(hd), da_f(hd), da_o(hd), da_g(hd);
    for (std::size_t j = steps.size(); j-- > 0;) {
        const auto& s = steps[j];
        const Vec& h_prev = j == 0 ? zero : steps[j - 1].h;
        const Vec& c_prev = j == 0 ? zero : steps[j - 1].c;
        const auto v = inputs[j];
        for (std::size_t k = 0; k < hd; ++k) {
            const double d_o = dh[k] * s.tanh_c[k];
            dc[k] += dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
            const double d_i = dc[k] * s.g[k];
            const double d_g = dc[k] * s.i[k];
            const double d_f = dc[k] * c_prev[k];
            dc[k] *= s.f[k];  // now the gradient for c_prev
            da_i[k] = d_i * s.i[k] * (1.0 - s.i[k]);
            da_f[k] = d_f * s.f[k] * (1.0 - s.f[k]);
            da_o[k] = d_o * s.o[k] * (1.0 - s.o[k]);
            da_g[k] = d_g * (1.0 - s.g[k] * s.g[k]);
        }
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        accumulate_gate(da_i, v, h_prev, p.input_rec, g.input_in, g.input_rec, dh_prev);
        accumulate_gate(da_f, v, h_prev, p.forget_rec, g.forget_in, g.forget_rec, dh_prev);
        accumulate_gate(da_o, v, h_prev, p.output_gate_rec, g.output_gate_in, g.output_gate_rec, dh_prev);
        accumulate_gate(da_g, v, h_prev, p.candidate_rec, g.candidate_in, g.candidate_rec, dh_prev);
        std::swap(dh, dh_prev);
    }
}

}  // namespace textcascade::detail

namespace textcascade {

using namespace detail;

void softmax_inplace(std::span<double> values) {
    if (values.empty()) return;
    const double peak = *std::max_element(values.begin(), values.end());
    double total = 0.0;
    for (double& x : values) {
        x = std::exp(x - peak);
        total += x;
    }
    for (double& x : values) x /= total;
}

ForwardResult gru_forward(const GruParams& params, const InputSequence& inputs) {
    auto steps = gru_unroll(params, inputs);
    ForwardResult result;
    result.hidden.reserve(steps.size());
    for (auto& s : steps) result.hidden.push_back(std::move(s.h));
    result.distribution = output_distribution(params.output, result.hidden.back());
    return result;
}

ForwardResult lstm_forward(const LstmParams& params, const InputSequence& inputs) {
    auto steps = lstm_unroll(params, inputs);
    ForwardResult result;
    result.hidden.reserve(steps.size());
    for (auto& s : steps) result.hidden.push_back(std::move(s.h));
    result.distribution = output_distribution(params.output, result.hidden.back());
    return result;
}

ClassDistribution classify(const RecurrentModel& model, const InputSequence& inputs) {
    return std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (P::kind == CellKind::gru) {
                return output_distribution(p.output, gru_unroll(p, inputs).back().h);
            } else {
                return output_distribution(p.output, lstm_unroll(p, inputs).back().h);
            }
        },
        model);
}

std::vector<ClassId> top_t(const ClassDistribution& dist, std::size_t t) {
    std::vector<ClassId> ids(dist.probs.size());
    std::iota(ids.begin(), ids.end(), ClassId{0});
    const std::size_t keep = std::min(t, ids.size());
    const auto& p = dist.probs;
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), ids.end(),
                      [&](ClassId a, ClassId b) { return p[a] > p[b] || (p[a] == p[b] && a < b); });
    ids.resize(keep);
    return ids;
}

std::size_t rank_of(const ClassDistribution& dist, ClassId id) {
    const auto& p = dist.probs;
    if (id >= p.size()) throw ContractViolation("rank of a class outside the distribution");
    std::size_t ahead = 0;
    for (ClassId c = 0; c < p.size(); ++c) {
        if (p[c] > p[id] || (p[c] == p[id] && c < id)) ++ahead;
    }
    return ahead + 1;
}

LossGradient<GruParams> gru_loss_gradient(const GruParams& p, const InputSequence& inputs,
                                          ClassId target) {
    const auto steps = gru_unroll(p, inputs);
    const auto dist = output_distribution(p.output, steps.back().h);
    LossGradient<GruParams> out;
    out.gradient = GruParams(p.input_dim(), p.hidden_dim(), p.class_count());
    Vec dlogits;
    out.loss = output_delta(dist, target, dlogits);
    simd::rank1_update(out.gradient.output.data, 1.0, dlogits, steps.back().h);
    Vec dh(p.hidden_dim(), 0.0);
    simd::matvec_transposed_add(p.output.data, dlogits, dh);
    gru_backward(p, steps, inputs, std::move(dh), out.gradient);
    return out;
}

LossGradient<LstmParams> lstm_loss_gradient(const LstmParams& p, const InputSequence& inputs,
                                            ClassId target) {
    const auto steps = lstm_unroll(p, inputs);
    const auto dist = output_distribution(p.output, steps.back().h);
    LossGradient<LstmParams> out;
    out.gradient = LstmParams(p.input_dim(), p.hidden_dim(), p.class_count());
    Vec dlogits;
    out.loss = output_delta(dist, target, dlogits);
    simd::rank1_update(out.gradient.output.data, 1.0, dlogits, steps.back().h);
    Vec dh(p.hidden_dim(), 0.0);
    simd::matvec_transposed_add(p.output.data, dlogits, dh);
    lstm_backward(p, steps, inputs, std::move(dh), out.gradient);
    return out;
}

double loss(const RecurrentModel& model, const InputSequence& inputs, ClassId target) {
    const auto dist = classify(model, inputs);
    Vec delta;
    return output_delta(dist, target, delta);
}

}  // namespace textcascade
