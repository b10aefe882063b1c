#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "textcascade/common.hpp"
#include "textcascade/embeddings.hpp"

namespace textcascade {

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class CellKind { gru, lstm };

std::string_view cell_name(CellKind kind);
/// Throws std::invalid_argument for anything but "gru" or "lstm".
CellKind parse_cell(std::string_view name);

/// GRU without bias terms:
///   z = sigmoid(Uz v + Wz h),  r = sigmoid(Ur v + Wr h)
///   h' = tanh(Uh v + Wh (h o r)),  h <- (1 - z) o h' + z o h
/// and y = softmax(O h_last).
struct GruParams {
    static constexpr CellKind kind = CellKind::gru;

    Matrix update_in, reset_in, candidate_in;           // hidden x input
    Matrix update_rec, reset_rec, candidate_rec;        // hidden x hidden
    Matrix output;                                      // classes x hidden

    GruParams() = default;
    GruParams(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count);

    std::size_t input_dim() const { return update_in.cols; }
    std::size_t hidden_dim() const { return update_in.rows; }
    std::size_t class_count() const { return output.rows; }

    auto matrices() {
        return std::array<Matrix*, 7>{&update_in, &reset_in, &candidate_in, &update_rec,
                                      &reset_rec, &candidate_rec, &output};
    }
    auto matrices() const {
        return std::array<const Matrix*, 7>{&update_in, &reset_in, &candidate_in, &update_rec,
                                            &reset_rec, &candidate_rec, &output};
    }

    friend bool operator==(const GruParams&, const GruParams&) = default;
};

/// Standard forget-gate LSTM without bias terms, zero initial cell and
/// hidden state:
///   i, f, o = sigmoid(U v + W h),  g = tanh(Ug v + Wg h)
///   c <- f o c + i o g,  h <- o o tanh(c)
struct LstmParams {
    static constexpr CellKind kind = CellKind::lstm;

    Matrix input_in, forget_in, output_gate_in, candidate_in;      // hidden x input
    Matrix input_rec, forget_rec, output_gate_rec, candidate_rec;  // hidden x hidden
    Matrix output;                                                 // classes x hidden

    LstmParams() = default;
    LstmParams(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count);

    std::size_t input_dim() const { return input_in.cols; }
    std::size_t hidden_dim() const { return input_in.rows; }
    std::size_t class_count() const { return output.rows; }

    auto matrices() {
        return std::array<Matrix*, 9>{&input_in,  &forget_in,  &output_gate_in,  &candidate_in,
                                      &input_rec, &forget_rec, &output_gate_rec, &candidate_rec,
                                      &output};
    }
    auto matrices() const {
        return std::array<const Matrix*, 9>{&input_in,  &forget_in,  &output_gate_in,  &candidate_in,
                                            &input_rec, &forget_rec, &output_gate_rec, &candidate_rec,
                                            &output};
    }

    friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

using RecurrentModel = std::variant<GruParams, LstmParams>;

CellKind cell_kind(const RecurrentModel& model);
std::size_t class_count(const RecurrentModel& model);
std::size_t input_dim(const RecurrentModel& model);
std::size_t hidden_dim(const RecurrentModel& model);

/// Probability vector over classes.
struct ClassDistribution {
    std::vector<double> probs;
};

/// Word vectors for one text; views into a WordVectorTable.
using InputSequence = std::vector<std::span<const double>>;

/// Stand-in token for empty texts; maps to the zero vector unless the table
/// defines it.
inline constexpr std::string_view kEmptyToken = "<empty>";

InputSequence embed_tokens(std::span<const std::string> tokens, const WordVectorTable& table);

struct ForwardResult {
    std::vector<std::vector<double>> hidden;  // h_1 .. h_m
    ClassDistribution distribution;
};

/// Throws ContractViolation on an empty sequence or a wrong input length.
ForwardResult gru_forward(const GruParams& params, const InputSequence& inputs);
ForwardResult lstm_forward(const LstmParams& params, const InputSequence& inputs);

/// Distribution only; dispatches on the cell kind.
ClassDistribution classify(const RecurrentModel& model, const InputSequence& inputs);

/// Softmax with max subtraction.
void softmax_inplace(std::span<double> values);

/// Class ids of the t largest probabilities, ties by ascending id. Length
/// min(t, C). A prefix of the result for any larger t.
std::vector<ClassId> top_t(const ClassDistribution& dist, std::size_t t);

/// 1-based position of `id` in the full top_t ordering.
std::size_t rank_of(const ClassDistribution& dist, ClassId id);

/// Cross-entropy -log y[target] and its gradient with respect to every
/// parameter, by backpropagation through time.
template <typename Params>
struct LossGradient {
    double loss = 0.0;
    Params gradient;
};

LossGradient<GruParams> gru_loss_gradient(const GruParams& params, const InputSequence& inputs,
                                          ClassId target);
LossGradient<LstmParams> lstm_loss_gradient(const LstmParams& params, const InputSequence& inputs,
                                            ClassId target);

double loss(const RecurrentModel& model, const InputSequence& inputs, ClassId target);

struct TrainingExample {
    std::vector<std::string> tokens;
    ClassId label = 0;
};

struct TrainConfig {
    CellKind cell = CellKind::gru;
    std::size_t hidden_dim = 32;
    std::size_t epochs = 10;
    double learning_rate = 0.1;
    std::uint64_t seed = 1;
    std::size_t class_count = 0;
    /// When positive, each step's recurrent-weight gradient is rescaled to at
    /// most this L2 norm. The output layer is never clipped. 0 is plain SGD.
    double clip_norm = 0.0;
    /// Optional per-epoch hook (epoch number from 1, mean loss).
    std::function<void(std::size_t, double)> on_epoch;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, double learning_rate);
    std::size_t epoch() const { return epoch_; }
    double learning_rate() const { return learning_rate_; }

private:
    std::size_t epoch_;
    double learning_rate_;
};

/// Parameters drawn uniformly from [-0.08, 0.08] with the seeded generator.
RecurrentModel initial_model(CellKind cell, std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t class_count, std::uint64_t seed);

/// Per-example SGD on mean cross-entropy with full BPTT over frozen word
/// vectors. Examples are visited in a seeded shuffled order each epoch.
/// Throws DivergenceError on a non-finite loss or parameter.
RecurrentModel train(std::span<const TrainingExample> corpus, const WordVectorTable& table,
                     const TrainConfig& config);

/// Model plus the metadata needed to reuse it.
struct Checkpoint {
    RecurrentModel model;
    std::uint64_t seed = 0;
    std::vector<std::string> labels;  // class id -> label
};

/// Versioned little-endian binary container; round trips bit-exactly.
void save_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
/// Throws FormatError on a malformed file.
Checkpoint load_checkpoint(std::istream& in);

}  // namespace textcascade
