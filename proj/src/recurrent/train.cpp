#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cells_internal.hpp"
#include "textcascade/simd/kernels.hpp"

namespace textcascade {

GruParams::GruParams(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count)
    : update_in(hidden_dim, input_dim),
      reset_in(hidden_dim, input_dim),
      candidate_in(hidden_dim, input_dim),
      update_rec(hidden_dim, hidden_dim),
      reset_rec(hidden_dim, hidden_dim),
      candidate_rec(hidden_dim, hidden_dim),
      output(class_count, hidden_dim) {}

LstmParams::LstmParams(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count)
    : input_in(hidden_dim, input_dim),
      forget_in(hidden_dim, input_dim),
      output_gate_in(hidden_dim, input_dim),
      candidate_in(hidden_dim, input_dim),
      input_rec(hidden_dim, hidden_dim),
      forget_rec(hidden_dim, hidden_dim),
      output_gate_rec(hidden_dim, hidden_dim),
      candidate_rec(hidden_dim, hidden_dim),
      output(class_count, hidden_dim) {}

std::string_view cell_name(CellKind kind) { return kind == CellKind::gru ? "gru" : "lstm"; }

CellKind parse_cell(std::string_view name) {
    if (name == "gru") return CellKind::gru;
    if (name == "lstm") return CellKind::lstm;
    throw std::invalid_argument("unknown cell kind '" + std::string(name) + "'");
}

CellKind cell_kind(const RecurrentModel& model) {
    return std::visit([](const auto& p) { return std::decay_t<decltype(p)>::kind; }, model);
}

std::size_t class_count(const RecurrentModel& model) {
    return std::visit([](const auto& p) { return p.class_count(); }, model);
}

std::size_t input_dim(const RecurrentModel& model) {
    return std::visit([](const auto& p) { return p.input_dim(); }, model);
}

std::size_t hidden_dim(const RecurrentModel& model) {
    return std::visit([](const auto& p) { return p.hidden_dim(); }, model);
}

InputSequence embed_tokens(std::span<const std::string> tokens, const WordVectorTable& table) {
    InputSequence seq;
    if (tokens.empty()) {
        seq.push_back(table.lookup(kEmptyToken));
        return seq;
    }
    seq.reserve(tokens.size());
    for (const auto& t : tokens) seq.push_back(table.lookup(t));
    return seq;
}

namespace {

std::string divergence_message(std::size_t epoch, double learning_rate) {
    std::ostringstream msg;
    msg << "training diverged (non-finite loss) in epoch " << epoch << " at learning rate "
        << learning_rate;
    return msg.str();
}

template <typename Params>
void fill_uniform(Params& p, Rng& rng) {
    for (Matrix* m : p.matrices()) {
        for (double& x : m->data) x = rng.uniform(-0.08, 0.08);
    }
}

// One SGD step. The output layer is updated in the same pass that pulls the
// hidden-state gradient through it, so no dense output gradient is formed.
template <typename Params>
double sgd_step(Params& p, const InputSequence& inputs, ClassId target, double lr, double clip_norm,
                Params& grad, detail::Vec& dlogits, detail::Vec& dh) {
    const auto steps = [&] {
        if constexpr (Params::kind == CellKind::gru) {
            return detail::gru_unroll(p, inputs);
        } else {
            return detail::lstm_unroll(p, inputs);
        }
    }();
    const auto& h_last = steps.back().h;
    const auto dist = detail::output_distribution(p.output, h_last);
    const double loss = detail::output_delta(dist, target, dlogits);

    dh.assign(p.hidden_dim(), 0.0);
    for (std::size_t c = 0; c < p.output.rows; ++c) {
        const double delta = dlogits[c];
        simd::axpy(delta, p.output.row(c), dh);
        simd::axpy(-lr * delta, h_last, p.output.row(c));
    }

    auto gms = grad.matrices();
    for (std::size_t m = 0; m + 1 < gms.size(); ++m) {
        std::fill(gms[m]->data.begin(), gms[m]->data.end(), 0.0);
    }
    if constexpr (Params::kind == CellKind::gru) {
        detail::gru_backward(p, steps, inputs, dh, grad);
    } else {
        detail::lstm_backward(p, steps, inputs, dh, grad);
    }
    double step = lr;
    if (clip_norm > 0.0) {
        double sq = 0.0;
        for (std::size_t m = 0; m + 1 < gms.size(); ++m) sq += simd::dot(gms[m]->data, gms[m]->data);
        const double norm = std::sqrt(sq);
        if (norm > clip_norm) step = lr * clip_norm / norm;
    }
    auto pms = p.matrices();
    for (std::size_t m = 0; m + 1 < pms.size(); ++m) {
        simd::axpy(-step, gms[m]->data, pms[m]->data);
    }
    return loss;
}

template <typename Params>
bool all_finite(const Params& p) {
    for (const auto* m : p.matrices()) {
        for (double x : m->data) {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

template <typename Params>
void run_epochs(Params& p, std::span<const InputSequence> inputs, std::span<const TrainingExample> corpus,
                const TrainConfig& config) {
    Params grad(p.input_dim(), p.hidden_dim(), 0);
    detail::Vec dlogits;
    detail::Vec dh;
    Rng order_rng(config.seed ^ 0x5deece66dULL);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        order_rng.shuffle(order.begin(), order.end());
        double total = 0.0;
        for (std::size_t idx : order) {
            const double l = sgd_step(p, inputs[idx], corpus[idx].label, config.learning_rate,
                                      config.clip_norm, grad, dlogits, dh);
            if (!std::isfinite(l)) throw DivergenceError(epoch, config.learning_rate);
            total += l;
        }
        const double mean = total / static_cast<double>(corpus.size());
        if (!std::isfinite(mean) || !all_finite(p)) throw DivergenceError(epoch, config.learning_rate);
        if (config.on_epoch) config.on_epoch(epoch, mean);
    }
}

}  // namespace

DivergenceError::DivergenceError(std::size_t epoch, double learning_rate)
    : std::runtime_error(divergence_message(epoch, learning_rate)),
      epoch_(epoch),
      learning_rate_(learning_rate) {}

RecurrentModel initial_model(CellKind cell, std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t class_count, std::uint64_t seed) {
    if (input_dim == 0 || hidden_dim == 0 || class_count == 0) {
        throw ContractViolation("recurrent model dimensions must be positive");
    }
    Rng rng(seed);
    if (cell == CellKind::gru) {
        GruParams p(input_dim, hidden_dim, class_count);
        fill_uniform(p, rng);
        return p;
    }
    LstmParams p(input_dim, hidden_dim, class_count);
    fill_uniform(p, rng);
    return p;
}

RecurrentModel train(std::span<const TrainingExample> corpus, const WordVectorTable& table,
                     const TrainConfig& config) {
    if (corpus.empty()) throw ContractViolation("training corpus is empty");
    if (config.class_count == 0) throw ContractViolation("training needs a positive class count");
    if (!(config.learning_rate > 0.0)) throw ContractViolation("learning rate must be positive");
    if (!(config.clip_norm >= 0.0)) throw ContractViolation("clip norm must be non-negative");
    for (const auto& ex : corpus) {
        if (ex.label >= config.class_count) {
            throw ContractViolation("training label " + std::to_string(ex.label) + " outside " +
                                    std::to_string(config.class_count) + " classes");
        }
    }
    RecurrentModel model =
        initial_model(config.cell, table.dim(), config.hidden_dim, config.class_count, config.seed);

    std::vector<InputSequence> inputs;
    inputs.reserve(corpus.size());
    for (const auto& ex : corpus) inputs.push_back(embed_tokens(ex.tokens, table));

    std::visit([&](auto& p) { run_epochs(p, inputs, corpus, config); }, model);
    return model;
}

}  // namespace textcascade
