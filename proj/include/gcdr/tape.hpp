#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gcdr/params.hpp"
#include "gcdr/tensor.hpp"

namespace gcdr {

enum class Activation { None, Tanh, Softmax };

struct Conv2dSpec {
    int stride = 1;
    int pad = 0;
};

enum class LossKind { CrossEntropy, MeanSquaredError };

// A loss attached to a prediction tensor: kind, target of the same shape, and
// a non-negative scalar weight multiplying the reduced value.
struct LossSpec {
    LossKind kind = LossKind::CrossEntropy;
    Tensor target;
    double weight = 1.0;
};

// Probability clamp applied inside cross-entropy before the log.
inline constexpr float kProbEps = 1e-7f;

// ---- direct (tape-free) forward evaluation ----

// x:(B,I) * W:(I,O) + b:(O), then the activation.
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, Activation act);

// x:(B,C,H,W), kernel:(OC,C,KH,KW), bias:(OC); zero padding, square stride.
Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                      const Conv2dSpec& spec);

// Non-overlapping 2x2 max pooling; H and W must be even.
Tensor maxpool2_forward(const Tensor& x);

// Reduced loss in f64: cross-entropy is the batch-row mean of
// -sum_k target*log(clamp(pred)); MSE is the mean over all elements.
double loss_value(const Tensor& pred, const LossSpec& spec);

// ---- reverse-mode tape ----

// Records a forward computation as a flat node list and replays it backwards.
// backward(loss, trainable) accumulates d loss / d p into ParamSet gradient
// buffers for exactly the parameters in `trainable`; every other parameter's
// accumulator is untouched. Gradient flow is not blocked by frozen parameters:
// freezing only stops their own accumulation. Multiple backward calls between
// zero_grad() calls accumulate, which is how composite objectives with
// different trainable sets share one optimizer step.
class Tape {
public:
    explicit Tape(ParamSet& ps, bool check_finite = false)
        : ps_(ps), check_finite_(check_finite) {}

    ParamSet& params() { return ps_; }

    // Leaf holding a constant (no gradient ever requested for it).
    int input(Tensor v);

    // Leaf bound to a stored parameter (value snapshot taken now).
    int param(int param_id);
    int param(const std::string& name) { return param(ps_.require(name)); }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    const Tensor& value(int node) const { return at(node).value; }

    // f64 value of a loss node (or any 1-element node).
    double scalar(int node) const;

    void backward(int node, const std::vector<int>& trainable);

    // ---- pass-local gradient access, valid inside backward closures ----

    // Whether a gradient is wanted at `id` (some trainable parameter is
    // upstream of it in the current backward pass).
    bool live(int id) const {
        return !live_.empty() && live_[static_cast<std::size_t>(id)] != 0;
    }
    // Gradient accumulation buffer for `id`, allocated (zeroed) on first use.
    Mat& grad_buf(int id);
    bool grad_present(int id) const;

private:
    struct Node {
        const char* op = "";
        Tensor value;
        double scalar_value = 0.0;  // set for loss nodes
        bool has_scalar = false;
        int param = -1;
        std::vector<int> inputs;
        std::function<void(Tape&, int)> back;  // (tape, own node id)
    };

    Node& at(int id) {
        if (id < 0 || id >= node_count()) throw LookupError("tape: invalid node id");
        return nodes_[static_cast<std::size_t>(id)];
    }
    const Node& at(int id) const {
        if (id < 0 || id >= node_count()) throw LookupError("tape: invalid node id");
        return nodes_[static_cast<std::size_t>(id)];
    }

    int push(Node n);

    ParamSet& ps_;
    bool check_finite_ = false;
    std::vector<Node> nodes_;

    // valid only during backward()
    std::vector<char> live_;
    std::vector<Mat> grads_;
    std::vector<char> grad_set_;

    friend int affine(Tape&, int, int, int);
    friend int tanh_of(Tape&, int);
    friend int softmax_of(Tape&, int);
    friend int conv2d(Tape&, int, int, int, const Conv2dSpec&);
    friend int maxpool2(Tape&, int);
    friend int flatten2(Tape&, int);
    friend int add_n(Tape&, const std::vector<int>&);
    friend int loss(Tape&, int, const LossSpec&);
    friend int add_scalars(Tape&, const std::vector<int>&);
};

// ---- graph-building free functions ----

int affine(Tape& t, int x, int w, int b);
int tanh_of(Tape& t, int x);
int softmax_of(Tape& t, int x);
int dense(Tape& t, int x, int w, int b, Activation act);
int conv2d(Tape& t, int x, int kernel, int bias, const Conv2dSpec& spec);
int maxpool2(Tape& t, int x);
int flatten2(Tape& t, int x);                 // (B,...) -> (B, prod)
int add_n(Tape& t, const std::vector<int>& xs);
int loss(Tape& t, int pred, const LossSpec& spec);
int add_scalars(Tape& t, const std::vector<int>& terms);

inline int cross_entropy(Tape& t, int pred, Tensor target, double weight) {
    return loss(t, pred, LossSpec{LossKind::CrossEntropy, std::move(target), weight});
}
inline int mse(Tape& t, int pred, Tensor target, double weight) {
    return loss(t, pred, LossSpec{LossKind::MeanSquaredError, std::move(target), weight});
}

}  // namespace gcdr
