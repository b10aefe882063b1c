#pragma once

// Unrolled cell state shared by the forward pass, the gradient routines and
// the trainer's fused update.

#include <vector>

#include "textcascade/recurrent.hpp"

namespace textcascade::detail {

using Vec = std::vector<double>;

struct GruStep {
    Vec z, r, cand, gated_prev, h;
};

struct LstmStep {
    Vec i, f, o, g, c, tanh_c, h;
};

std::vector<GruStep> gru_unroll(const GruParams& p, const InputSequence& inputs);
std::vector<LstmStep> lstm_unroll(const LstmParams& p, const InputSequence& inputs);

ClassDistribution output_distribution(const Matrix& output, std::span<const double> hidden);

/// delta = y - onehot(target); returns -log y[target].
double output_delta(const ClassDistribution& dist, ClassId target, Vec& delta);

/// Accumulates recurrent-matrix gradients into `g` (its output matrix is
/// left alone) given dL/dh at the last step.
void gru_backward(const GruParams& p, const std::vector<GruStep>& steps, const InputSequence& inputs,
                  Vec dh, GruParams& g);
void lstm_backward(const LstmParams& p, const std::vector<LstmStep>& steps,
                   const InputSequence& inputs, Vec dh, LstmParams& g);

}  // namespace textcascade::detail
