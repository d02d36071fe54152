#pragma once

// Small 1-D CNN with hand-written reverse-mode gradients.
//
// Activations are stored channel-major per record (element (c, t) at c * L + t),
// so flattening before a dense layer is free. The documented default network:
//
//   2048 interleaved reals -> deinterleave to 2 x 1024
//   -> conv(16, width 8, stride 2) -> ReLU -> conv(32, width 8, stride 2) -> ReLU
//   -> flatten -> dense 64 -> ReLU -> dense C

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rfadex/signal.hpp"

namespace rfadex {

enum class LayerKind : std::uint8_t { deinterleave, conv1d, relu, dense };

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int in_channels = 0;
    int in_length = 0;
    int out_channels = 0;
    int out_length = 0;
    int width = 0;   // conv1d only
    int stride = 1;  // conv1d only

    int in_size() const { return in_channels * in_length; }
    int out_size() const { return out_channels * out_length; }
    std::size_t weight_count() const;
    std::size_t bias_count() const;
    std::size_t param_count() const { return weight_count() + bias_count(); }
    // Inputs feeding one output unit.
    int fan_in() const;

    bool operator==(const LayerSpec&) const = default;
};

inline constexpr std::uint16_t kDefaultCnnId = 0;
inline constexpr std::uint16_t kCustomArchId = 0xFFFF;

struct Architecture {
    std::uint16_t id = kCustomArchId;
    std::vector<LayerSpec> layers;

    int input_size() const { return layers.empty() ? 0 : layers.front().in_size(); }
    int class_count() const { return layers.empty() ? 0 : layers.back().out_size(); }
    std::size_t parameter_count() const;
    // Throws InvalidArgument when consecutive shapes disagree.
    void validate() const;

    bool operator==(const Architecture&) const = default;
};

// Incremental construction; shapes are propagated from the input.
class ArchitectureBuilder {
public:
    // Starts from 2 * samples interleaved reals and deinterleaves to 2 channels.
    explicit ArchitectureBuilder(std::size_t samples);
    ArchitectureBuilder& conv(int filters, int width, int stride);
    ArchitectureBuilder& relu();
    ArchitectureBuilder& dense(int units);
    Architecture build(std::uint16_t id = kCustomArchId) const;

private:
    Architecture arch_;
};

Architecture default_cnn_architecture(int classes, std::size_t samples = kFrameSamples);

template <typename T>
struct BasicModel {
    Architecture arch;
    std::vector<std::vector<T>> params;  // one flat blob per layer: weights then biases

    int class_count() const { return arch.class_count(); }
    int input_size() const { return arch.input_size(); }

    template <typename U>
    BasicModel<U> cast() const {
        BasicModel<U> out;
        out.arch = arch;
        out.params.reserve(params.size());
        for (const auto& blob : params) out.params.emplace_back(blob.begin(), blob.end());
        return out;
    }

    bool operator==(const BasicModel&) const = default;
};

using Model = BasicModel<float>;
using ModelF64 = BasicModel<double>;

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

// Fan-in scaled uniform initialisation U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
BasicModel<T> init_model(const Architecture& arch, std::uint64_t seed);
// arch_id must be "default_cnn".
Model init_model(std::string_view arch_id, std::uint64_t seed, int classes = static_cast<int>(kModClassCount));

template <typename T>
std::vector<T> forward(const BasicModel<T>& m, std::span<const T> x);
// Columns are records. Evaluated column by column, so row i of the result is
// bit-identical to forward(m, column i).
template <typename T>
Matrix<T> forward_batch(const BasicModel<T>& m, const Matrix<T>& inputs);

// Max-subtracted softmax evaluated in double precision.
template <typename T>
std::vector<double> softmax(std::span<const T> logits);

// Cross-entropy -log p_label(x).
template <typename T>
double loss(const BasicModel<T>& m, std::span<const T> x, int label);

// d(loss_scale * J)/dx.
template <typename T>
std::vector<T> input_gradient(const BasicModel<T>& m, std::span<const T> x, int label, double loss_scale = 1.0);

// dJ/dtheta, shaped like m.params.
template <typename T>
std::vector<std::vector<T>> parameter_gradient(const BasicModel<T>& m, std::span<const T> x, int label);

template <typename T>
int predict(const BasicModel<T>& m, std::span<const T> x);

namespace detail {

// Workspace for one batched forward/backward pass.
template <typename T>
struct Tape {
    std::vector<Matrix<T>> activations;  // [0] is the input, [l + 1] the output of layer l
};

template <typename T>
void forward_pass(const BasicModel<T>& m, const Matrix<T>& inputs, Tape<T>& tape);

// Back-propagates d(loss)/d(logits) (columns are records). Parameter gradients
// are accumulated into `param_grads` (pre-sized like m.params) when non-null;
// the input gradient is written to `input_grad` when non-null.
template <typename T>
void backward_pass(const BasicModel<T>& m, const Tape<T>& tape, const Matrix<T>& logit_grad,
                   std::vector<std::vector<T>>* param_grads, Matrix<T>* input_grad);

}  // namespace detail

}  // namespace rfadex

// Checkpoint file (little-endian):
//   "RFMD" | u16 version = 1 | u16 architecture id | u32 blob count |
//   blob count x ( u64 length | length x f32 )
// One blob per layer in architecture order (parameter-free layers have length 0).
// Only the default CNN (id 0) is serialisable; the class count is recovered
// from the final layer's blob.
namespace rfadex {

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Model& m);
Model decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const Model& m, const std::filesystem::path& path);
Model read_checkpoint(const std::filesystem::path& path);

}  // namespace rfadex
