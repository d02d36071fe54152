#include "rfadex/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rfadex/error.hpp"
#include "rfadex/rng.hpp"

namespace rfadex {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
void im2col(const LayerSpec& l, const T* x, RowMatrix<T>& patches) {
    patches.resize(l.in_channels * l.width, l.out_length);
    for (int c = 0; c < l.in_channels; ++c) {
        const T* channel = x + static_cast<std::ptrdiff_t>(c) * l.in_length;
        for (int k = 0; k < l.width; ++k) {
            T* row = patches.row(c * l.width + k).data();
            for (int t = 0; t < l.out_length; ++t) row[t] = channel[t * l.stride + k];
        }
    }
}

// out[r] += sum_c g(r, c), summed in column order.
template <typename M, typename V>
void add_row_sums(const M& g, V& out) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
        typename M::Scalar s(0);
        for (Eigen::Index c = 0; c < g.cols(); ++c) s += g(r, c);
        out[r] += s;
    }
}

template <typename T>
void layer_forward(const LayerSpec& l, const std::vector<T>& p, const Matrix<T>& in, Matrix<T>& out) {
    const auto batch = in.cols();
    out.resize(l.out_size(), batch);
    switch (l.kind) {
        case LayerKind::deinterleave: {
            const int n = l.in_length / 2;
            for (Eigen::Index b = 0; b < batch; ++b) {
                const T* x = in.col(b).data();
                T* y = out.col(b).data();
                for (int t = 0; t < n; ++t) {
                    y[t] = x[2 * t];
                    y[n + t] = x[2 * t + 1];
                }
            }
            break;
        }
        case LayerKind::relu:
            out = in.cwiseMax(T(0));
            break;
        case LayerKind::conv1d: {
            const int rows = l.in_channels * l.width;
            Eigen::Map<const RowMatrix<T>> w(p.data(), l.out_channels, rows);
            Eigen::Map<const Vector<T>> bias(p.data() + l.weight_count(), l.out_channels);
            RowMatrix<T> patches;
            for (Eigen::Index b = 0; b < batch; ++b) {
                im2col(l, in.col(b).data(), patches);
                Eigen::Map<RowMatrix<T>> y(out.col(b).data(), l.out_channels, l.out_length);
                y.noalias() = w * patches;
                y.colwise() += bias;
            }
            break;
        }
        case LayerKind::dense: {
            Eigen::Map<const RowMatrix<T>> w(p.data(), l.out_channels, l.in_size());
            Eigen::Map<const Vector<T>> bias(p.data() + l.weight_count(), l.out_channels);
            out.noalias() = w * in;
            out.colwise() += bias;
            break;
        }
    }
}

template <typename T>
void layer_backward(const LayerSpec& l, const std::vector<T>& p, const Matrix<T>& in, const Matrix<T>& out,
                    const Matrix<T>& dout, std::vector<T>* dparams, Matrix<T>* din) {
    const auto batch = in.cols();
    switch (l.kind) {
        case LayerKind::deinterleave: {
            if (!din) return;
            din->resize(l.in_size(), batch);
            const int n = l.in_length / 2;
            for (Eigen::Index b = 0; b < batch; ++b) {
                const T* g = dout.col(b).data();
                T* x = din->col(b).data();
                for (int t = 0; t < n; ++t) {
                    x[2 * t] = g[t];
                    x[2 * t + 1] = g[n + t];
                }
            }
            return;
        }
        case LayerKind::relu:
            if (din) *din = (out.array() > T(0)).select(dout, T(0));
            return;
        case LayerKind::conv1d: {
            const int rows = l.in_channels * l.width;
            Eigen::Map<const RowMatrix<T>> w(p.data(), l.out_channels, rows);
            RowMatrix<T> patches;
            RowMatrix<T> dpatches;
            if (din) din->setZero(l.in_size(), batch);
            for (Eigen::Index b = 0; b < batch; ++b) {
                Eigen::Map<const RowMatrix<T>> g(dout.col(b).data(), l.out_channels, l.out_length);
                if (dparams) {
                    im2col(l, in.col(b).data(), patches);
                    Eigen::Map<RowMatrix<T>> dw(dparams->data(), l.out_channels, rows);
                    Eigen::Map<Vector<T>> db(dparams->data() + l.weight_count(), l.out_channels);
                    dw.noalias() += g * patches.transpose();
                    add_row_sums(g, db);
                }
                if (din) {
                    dpatches.noalias() = w.transpose() * g;
                    T* x = din->col(b).data();
                    for (int c = 0; c < l.in_channels; ++c) {
                        T* channel = x + static_cast<std::ptrdiff_t>(c) * l.in_length;
                        for (int k = 0; k < l.width; ++k) {
                            const T* row = dpatches.row(c * l.width + k).data();
                            for (int t = 0; t < l.out_length; ++t) channel[t * l.stride + k] += row[t];
                        }
                    }
                }
            }
            return;
        }
        case LayerKind::dense: {
            Eigen::Map<const RowMatrix<T>> w(p.data(), l.out_channels, l.in_size());
            if (dparams) {
                Eigen::Map<RowMatrix<T>> dw(dparams->data(), l.out_channels, l.in_size());
                Eigen::Map<Vector<T>> db(dparams->data() + l.weight_count(), l.out_channels);
                dw.noalias() += dout * in.transpose();
                add_row_sums(dout, db);
            }
            if (din) din->noalias() = w.transpose() * dout;
            return;
        }
    }
}

template <typename T>
void check_input(const BasicModel<T>& m, std::size_t size) {
    if (static_cast<int>(size) != m.input_size())
        throw InvalidArgument("input has " + std::to_string(size) + " values, model expects " +
                              std::to_string(m.input_size()));
}

template <typename T>
void check_label(const BasicModel<T>& m, int label) {
    if (label < 0 || label >= m.class_count())
        throw InvalidArgument("label " + std::to_string(label) + " outside [0, " + std::to_string(m.class_count()) +
                              ")");
}

template <typename T>
Matrix<T> column(std::span<const T> x) {
    return Eigen::Map<const Matrix<T>>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
}

// d(-log softmax(z)_label)/dz = softmax(z) - onehot(label).
template <typename T>
Matrix<T> cross_entropy_grad(std::span<const T> logits, int label, double scale) {
    const auto p = softmax<T>(logits);
    Matrix<T> g(static_cast<Eigen::Index>(logits.size()), 1);
    for (std::size_t i = 0; i < p.size(); ++i)
        g(static_cast<Eigen::Index>(i), 0) =
            static_cast<T>(scale * (p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0)));
    return g;
}

}  // namespace

std::size_t LayerSpec::weight_count() const {
    switch (kind) {
        case LayerKind::conv1d:
            return static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(in_channels) *
                   static_cast<std::size_t>(width);
        case LayerKind::dense:
            return static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(in_size());
        default:
            return 0;
    }
}

std::size_t LayerSpec::bias_count() const {
    return kind == LayerKind::conv1d || kind == LayerKind::dense ? static_cast<std::size_t>(out_channels) : 0;
}

int LayerSpec::fan_in() const {
    switch (kind) {
        case LayerKind::conv1d: return in_channels * width;
        case LayerKind::dense: return in_size();
        default: return 1;
    }
}

std::size_t Architecture::parameter_count() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.param_count();
    return total;
}

void Architecture::validate() const {
    if (layers.empty()) throw InvalidArgument("architecture has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.in_size() <= 0 || l.out_size() <= 0) throw InvalidArgument("layer " + std::to_string(i) + " is empty");
        if (i > 0 && layers[i - 1].out_size() != l.in_size())
            throw InvalidArgument("layer " + std::to_string(i) + " input does not match previous output");
        if (l.kind == LayerKind::conv1d &&
            (l.width < 1 || l.stride < 1 || l.out_length != (l.in_length - l.width) / l.stride + 1))
            throw InvalidArgument("layer " + std::to_string(i) + " has inconsistent convolution geometry");
    }
    if (layers.back().kind != LayerKind::dense) throw InvalidArgument("last layer must be dense");
}

ArchitectureBuilder::ArchitectureBuilder(std::size_t samples) {
    const int n = static_cast<int>(samples);
    arch_.layers.push_back(LayerSpec{LayerKind::deinterleave, 1, 2 * n, 2, n, 0, 1});
}

ArchitectureBuilder& ArchitectureBuilder::conv(int filters, int width, int stride) {
    const auto& prev = arch_.layers.back();
    if (width < 1 || stride < 1 || width > prev.out_length)
        throw InvalidArgument("convolution width/stride do not fit the input length");
    const int out_len = (prev.out_length - width) / stride + 1;
    arch_.layers.push_back(
        LayerSpec{LayerKind::conv1d, prev.out_channels, prev.out_length, filters, out_len, width, stride});
    return *this;
}

ArchitectureBuilder& ArchitectureBuilder::relu() {
    const auto& prev = arch_.layers.back();
    arch_.layers.push_back(
        LayerSpec{LayerKind::relu, prev.out_channels, prev.out_length, prev.out_channels, prev.out_length, 0, 1});
    return *this;
}

ArchitectureBuilder& ArchitectureBuilder::dense(int units) {
    const auto& prev = arch_.layers.back();
    arch_.layers.push_back(LayerSpec{LayerKind::dense, prev.out_channels, prev.out_length, units, 1, 0, 1});
    return *this;
}

Architecture ArchitectureBuilder::build(std::uint16_t id) const {
    Architecture a = arch_;
    a.id = id;
    a.validate();
    return a;
}

Architecture default_cnn_architecture(int classes, std::size_t samples) {
    if (classes < 2) throw InvalidArgument("need at least two classes");
    return ArchitectureBuilder(samples).conv(16, 8, 2).relu().conv(32, 8, 2).relu().dense(64).relu().dense(classes).build(
        kDefaultCnnId);
}

template <typename T>
BasicModel<T> init_model(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    BasicModel<T> m;
    m.arch = arch;
    m.params.resize(arch.layers.size());
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const auto& l = arch.layers[i];
        auto& blob = m.params[i];
        blob.resize(l.param_count());
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.fan_in()));
        for (auto& v : blob) v = static_cast<T>(rng.uniform(-bound, bound));
    }
    return m;
}

Model init_model(std::string_view arch_id, std::uint64_t seed, int classes) {
    if (arch_id != "default_cnn") throw InvalidArgument("unknown architecture id '" + std::string(arch_id) + "'");
    return init_model<float>(default_cnn_architecture(classes), seed);
}

namespace detail {

template <typename T>
void forward_pass(const BasicModel<T>& m, const Matrix<T>& inputs, Tape<T>& tape) {
    if (inputs.rows() != m.input_size())
        throw InvalidArgument("batch rows " + std::to_string(inputs.rows()) + " do not match model input " +
                              std::to_string(m.input_size()));
    const auto& layers = m.arch.layers;
    tape.activations.resize(layers.size() + 1);
    tape.activations[0] = inputs;
    for (std::size_t i = 0; i < layers.size(); ++i)
        layer_forward(layers[i], m.params[i], tape.activations[i], tape.activations[i + 1]);
}

template <typename T>
void backward_pass(const BasicModel<T>& m, const Tape<T>& tape, const Matrix<T>& logit_grad,
                   std::vector<std::vector<T>>* param_grads, Matrix<T>* input_grad) {
    const auto& layers = m.arch.layers;
    Matrix<T> grad = logit_grad;
    Matrix<T> next;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const bool need_din = i > 0 || input_grad != nullptr;
        std::vector<T>* dparams = param_grads && !(*param_grads)[i].empty() ? &(*param_grads)[i] : nullptr;
        layer_backward(layers[i], m.params[i], tape.activations[i], tape.activations[i + 1], grad, dparams,
                       need_din ? &next : nullptr);
        if (!need_din) break;
        grad.swap(next);
    }
    if (input_grad) *input_grad = std::move(grad);
}

}  // namespace detail

template <typename T>
std::vector<T> forward(const BasicModel<T>& m, std::span<const T> x) {
    check_input(m, x.size());
    detail::Tape<T> tape;
    detail::forward_pass(m, column(x), tape);
    const auto& out = tape.activations.back();
    return std::vector<T>(out.data(), out.data() + out.size());
}

template <typename T>
Matrix<T> forward_batch(const BasicModel<T>& m, const Matrix<T>& inputs) {
    if (inputs.cols() == 0) throw InvalidArgument("empty batch");
    check_input(m, static_cast<std::size_t>(inputs.rows()));
    Matrix<T> logits(m.class_count(), inputs.cols());
    for (Eigen::Index b = 0; b < inputs.cols(); ++b) {
        const auto row = forward<T>(m, std::span<const T>(inputs.col(b).data(), static_cast<std::size_t>(inputs.rows())));
        for (std::size_t c = 0; c < row.size(); ++c) logits(static_cast<Eigen::Index>(c), b) = row[c];
    }
    return logits;
}

template <typename T>
std::vector<double> softmax(std::span<const T> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) return p;
    double top = -std::numeric_limits<double>::infinity();
    for (auto z : logits) top = std::max(top, static_cast<double>(z));
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(static_cast<double>(logits[i]) - top);
        total += p[i];
    }
    for (auto& v : p) v /= total;
    return p;
}

template <typename T>
double loss(const BasicModel<T>& m, std::span<const T> x, int label) {
    check_label(m, label);
    const auto z = forward(m, x);
    double top = -std::numeric_limits<double>::infinity();
    for (auto v : z) top = std::max(top, static_cast<double>(v));
    double total = 0.0;
    for (auto v : z) total += std::exp(static_cast<double>(v) - top);
    return std::max(0.0, top + std::log(total) - static_cast<double>(z[static_cast<std::size_t>(label)]));
}

template <typename T>
std::vector<T> input_gradient(const BasicModel<T>& m, std::span<const T> x, int label, double loss_scale) {
    check_input(m, x.size());
    check_label(m, label);
    detail::Tape<T> tape;
    detail::forward_pass(m, column(x), tape);
    const auto& z = tape.activations.back();
    const auto g = cross_entropy_grad<T>(std::span<const T>(z.data(), static_cast<std::size_t>(z.size())), label,
                                         loss_scale);
    Matrix<T> dx;
    detail::backward_pass<T>(m, tape, g, nullptr, &dx);
    return std::vector<T>(dx.data(), dx.data() + dx.size());
}

template <typename T>
std::vector<std::vector<T>> parameter_gradient(const BasicModel<T>& m, std::span<const T> x, int label) {
    check_input(m, x.size());
    check_label(m, label);
    detail::Tape<T> tape;
    detail::forward_pass(m, column(x), tape);
    const auto& z = tape.activations.back();
    const auto g = cross_entropy_grad<T>(std::span<const T>(z.data(), static_cast<std::size_t>(z.size())), label, 1.0);
    std::vector<std::vector<T>> grads(m.params.size());
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i].assign(m.params[i].size(), T(0));
    detail::backward_pass<T>(m, tape, g, &grads, nullptr);
    return grads;
}

template <typename T>
int predict(const BasicModel<T>& m, std::span<const T> x) {
    const auto z = forward(m, x);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

#define RFADEX_INSTANTIATE_MODEL(T)                                                                              \
    template BasicModel<T> init_model<T>(const Architecture&, std::uint64_t);                                    \
    template std::vector<T> forward<T>(const BasicModel<T>&, std::span<const T>);                                \
    template Matrix<T> forward_batch<T>(const BasicModel<T>&, const Matrix<T>&);                                 \
    template std::vector<double> softmax<T>(std::span<const T>);                                                 \
    template double loss<T>(const BasicModel<T>&, std::span<const T>, int);                                      \
    template std::vector<T> input_gradient<T>(const BasicModel<T>&, std::span<const T>, int, double);            \
    template std::vector<std::vector<T>> parameter_gradient<T>(const BasicModel<T>&, std::span<const T>, int);   \
    template int predict<T>(const BasicModel<T>&, std::span<const T>);                                           \
    template void detail::forward_pass<T>(const BasicModel<T>&, const Matrix<T>&, detail::Tape<T>&);             \
    template void detail::backward_pass<T>(const BasicModel<T>&, const detail::Tape<T>&, const Matrix<T>&,       \
                                           std::vector<std::vector<T>>*, Matrix<T>*);

RFADEX_INSTANTIATE_MODEL(float)
RFADEX_INSTANTIATE_MODEL(double)

#undef RFADEX_INSTANTIATE_MODEL

}  // namespace rfadex
