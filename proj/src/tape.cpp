#include "gcdr/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace gcdr {

namespace {

// Graph evaluation allocates multi-megabyte transient buffers (patch
// matrices, gradients) on every step. Keep such blocks on the heap for reuse
// instead of letting the allocator return them to the kernel each time,
// which costs a page-fault storm on the next step.
#if defined(__GLIBC__)
const bool allocator_tuned = [] {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 64 << 20);
    return true;
}();
#endif

Eigen::Map<const RowVec> row_view(const Tensor& t) {
    return Eigen::Map<const RowVec>(t.data(), t.size());
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}

// ---- shared forward kernels ----

Mat affine_eval(const Tensor& x, const Tensor& w, const Tensor& b) {
    require(x.rank() == 2, "affine: input must be rank 2, got " + shape_str(x.shape()));
    require(w.rank() == 2, "affine: weight must be rank 2, got " + shape_str(w.shape()));
    require(b.rank() == 1, "affine: bias must be rank 1, got " + shape_str(b.shape()));
    require(x.dim(1) == w.dim(0), "affine: input width " + std::to_string(x.dim(1)) +
                                      " vs weight rows " + std::to_string(w.dim(0)));
    require(b.dim(0) == w.dim(1), "affine: bias width " + std::to_string(b.dim(0)) +
                                      " vs weight cols " + std::to_string(w.dim(1)));
    Mat y = x.mat() * w.mat();
    y.rowwise() += row_view(b);
    return y;
}

Mat tanh_eval(const Mat& x) { return x.array().tanh().matrix(); }

Mat softmax_eval(const Mat& x) {
    Mat y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const float mx = x.row(i).maxCoeff();
        y.row(i) = (x.row(i).array() - mx).exp();
        y.row(i) /= y.row(i).sum();
    }
    return y;
}

struct ConvDims {
    int b, c, h, w;    // input
    int oc, kh, kw;    // kernel
    int oh, ow;        // output plane
    int stride, pad;
    std::int64_t patch_rows() const { return static_cast<std::int64_t>(b) * oh * ow; }
    std::int64_t patch_cols() const { return static_cast<std::int64_t>(c) * kh * kw; }
};

ConvDims conv_dims(const Tensor& x, const Tensor& k, const Tensor& bias, const Conv2dSpec& spec) {
    require(x.rank() == 4, "conv2d: input must be rank 4 (B,C,H,W), got " + shape_str(x.shape()));
    require(k.rank() == 4,
            "conv2d: kernel must be rank 4 (OC,C,KH,KW), got " + shape_str(k.shape()));
    require(bias.rank() == 1, "conv2d: bias must be rank 1, got " + shape_str(bias.shape()));
    if (spec.stride < 1) throw RangeError("conv2d: stride must be >= 1");
    if (spec.pad < 0) throw RangeError("conv2d: padding must be >= 0");
    ConvDims d;
    d.b = x.dim(0), d.c = x.dim(1), d.h = x.dim(2), d.w = x.dim(3);
    d.oc = k.dim(0), d.kh = k.dim(2), d.kw = k.dim(3);
    d.stride = spec.stride, d.pad = spec.pad;
    require(k.dim(1) == d.c, "conv2d: kernel channels " + std::to_string(k.dim(1)) +
                                 " vs input channels " + std::to_string(d.c));
    require(bias.dim(0) == d.oc, "conv2d: bias width " + std::to_string(bias.dim(0)) +
                                     " vs output channels " + std::to_string(d.oc));
    const int ph = d.h + 2 * d.pad, pw = d.w + 2 * d.pad;
    require(d.kh <= ph && d.kw <= pw, "conv2d: kernel " + std::to_string(d.kh) + "x" +
                                          std::to_string(d.kw) + " larger than padded input " +
                                          std::to_string(ph) + "x" + std::to_string(pw));
    d.oh = (ph - d.kh) / d.stride + 1;
    d.ow = (pw - d.kw) / d.stride + 1;
    return d;
}

// The patch products have tiny inner/output widths, where the packed general
// matrix product spends most of its time repacking operands. A broadcast-FMA
// loop that keeps a fixed-width accumulator in registers is much faster for
// those shapes; widths outside the specialised set fall back to the general
// product, which is correct for everything.
template <int N>
void rows_fma(const Mat& a, const Mat& b, Mat& c) {
    // c (R x N) = a (R x K) * b (K x N); all row-major dense.
    using RowN = Eigen::Matrix<float, 1, N>;
    const Eigen::Index rows = a.rows(), depth = a.cols();
    const float* ap = a.data();
    const float* bp = b.data();
    float* cp = c.data();
    for (Eigen::Index r = 0; r < rows; ++r, ap += depth, cp += N) {
        RowN acc = RowN::Zero();
        for (Eigen::Index k = 0; k < depth; ++k)
            acc += ap[k] * Eigen::Map<const RowN>(bp + k * N);
        Eigen::Map<RowN> crow(cp);
        crow = acc;
    }
}

void product_into(const Mat& a, const Mat& b, Mat& c) {
    c.resize(a.rows(), b.cols());
    switch (b.cols()) {
        case 8: rows_fma<8>(a, b, c); return;
        case 16: rows_fma<16>(a, b, c); return;
        case 32: rows_fma<32>(a, b, c); return;
        case 75: rows_fma<75>(a, b, c); return;
        default: c.noalias() = a * b;
    }
}

template <int N>
void outer_acc(const Mat& g, const Mat& p, Mat& acc) {
    // acc (N x K) += g^T (N x R) * p (R x K); g and p row-major dense.
    const Eigen::Index rows = g.rows(), depth = p.cols();
    using RowX = Eigen::Matrix<float, 1, Eigen::Dynamic>;
    const float* gp = g.data();
    const float* pp = p.data();
    for (Eigen::Index r = 0; r < rows; ++r, gp += N, pp += depth) {
        Eigen::Map<const RowX> prow(pp, depth);
        for (int j = 0; j < N; ++j)
            Eigen::Map<RowX>(acc.data() + j * depth, depth) += gp[j] * prow;
    }
}

void transposed_product_add(const Mat& g, const Mat& p, Mat& acc) {
    switch (g.cols()) {
        case 8: outer_acc<8>(g, p, acc); return;
        case 16: outer_acc<16>(g, p, acc); return;
        default: acc.noalias() += g.transpose() * p;
    }
}

void im2col(const Tensor& x, const ConvDims& d, Mat& patches) {
    patches.resize(d.patch_rows(), d.patch_cols());
    const float* xp = x.data();
    const std::size_t row_bytes = static_cast<std::size_t>(d.patch_cols()) * sizeof(float);
    for (int b = 0; b < d.b; ++b) {
        for (int oh = 0; oh < d.oh; ++oh) {
            const int ih0 = oh * d.stride - d.pad;
            for (int ow = 0; ow < d.ow; ++ow) {
                const int iw0 = ow * d.stride - d.pad;
                // clip the kernel window once per output pixel instead of
                // testing every element
                const int kw_lo = std::max(0, -iw0), kw_hi = std::min(d.kw, d.w - iw0);
                const int kh_lo = std::max(0, -ih0), kh_hi = std::min(d.kh, d.h - ih0);
                float* prow = &patches(static_cast<std::int64_t>(b * d.oh + oh) * d.ow + ow, 0);
                // interior pixels overwrite their whole row below; only rows
                // whose window leaves the input need the zero padding
                if (kw_lo != 0 || kw_hi != d.kw || kh_lo != 0 || kh_hi != d.kh)
                    std::memset(prow, 0, row_bytes);
                if (kw_lo >= kw_hi) continue;
                const int span = kw_hi - kw_lo;
                for (int c = 0; c < d.c; ++c) {
                    const float* plane = xp + static_cast<std::int64_t>(b * d.c + c) * d.h * d.w;
                    for (int kh = kh_lo; kh < kh_hi; ++kh) {
                        const float* src = plane + static_cast<std::int64_t>(ih0 + kh) * d.w + iw0;
                        float* dst = prow + (c * d.kh + kh) * d.kw;
                        std::memcpy(dst + kw_lo, src + kw_lo,
                                    static_cast<std::size_t>(span) * sizeof(float));
                    }
                }
            }
        }
    }
}

void col2im_add(const Mat& dpatches, const ConvDims& d, Mat& dx) {
    float* xp = dx.data();
    for (int b = 0; b < d.b; ++b) {
        for (int oh = 0; oh < d.oh; ++oh) {
            const int ih0 = oh * d.stride - d.pad;
            for (int ow = 0; ow < d.ow; ++ow) {
                const int iw0 = ow * d.stride - d.pad;
                const int kw_lo = std::max(0, -iw0), kw_hi = std::min(d.kw, d.w - iw0);
                const int kh_lo = std::max(0, -ih0), kh_hi = std::min(d.kh, d.h - ih0);
                if (kw_lo >= kw_hi) continue;
                const float* prow =
                    &dpatches(static_cast<std::int64_t>(b * d.oh + oh) * d.ow + ow, 0);
                for (int c = 0; c < d.c; ++c) {
                    float* plane = xp + static_cast<std::int64_t>(b * d.c + c) * d.h * d.w;
                    for (int kh = kh_lo; kh < kh_hi; ++kh) {
                        float* dst = plane + static_cast<std::int64_t>(ih0 + kh) * d.w + iw0;
                        const float* src = prow + (c * d.kh + kh) * d.kw;
                        for (int kw = kw_lo; kw < kw_hi; ++kw) dst[kw] += src[kw];
                    }
                }
            }
        }
    }
}

// (B*OH*OW, OC) plane-major rows -> (B, OC, OH, OW) tensor layout; one
// blocked transpose per sample
Tensor permute_out(const Mat& y2, const ConvDims& d) {
    Tensor out({d.b, d.oc, d.oh, d.ow});
    const std::int64_t hw = static_cast<std::int64_t>(d.oh) * d.ow;
    for (int b = 0; b < d.b; ++b) {
        Eigen::Map<const Mat> src(y2.data() + b * hw * d.oc, hw, d.oc);
        Eigen::Map<Mat> dst(out.data() + b * d.oc * hw, d.oc, hw);
        dst.noalias() = src.transpose();
    }
    return out;
}

Mat unpermute_grad(const Mat& dout, const ConvDims& d) {
    Mat dy2(d.patch_rows(), d.oc);
    const std::int64_t hw = static_cast<std::int64_t>(d.oh) * d.ow;
    for (int b = 0; b < d.b; ++b) {
        Eigen::Map<const Mat> src(dout.data() + b * d.oc * hw, d.oc, hw);
        Eigen::Map<Mat> dst(dy2.data() + b * hw * d.oc, hw, d.oc);
        dst.noalias() = src.transpose();
    }
    return dy2;
}

Tensor conv2d_eval(const Tensor& x, const Tensor& k, const Tensor& bias, const Conv2dSpec& spec,
                   std::shared_ptr<Mat>* patches_out, ConvDims* dims_out) {
    const ConvDims d = conv_dims(x, k, bias, spec);
    auto patches = std::make_shared<Mat>();
    im2col(x, d, *patches);
    const Mat kt = k.mat().transpose();
    Mat y2;
    product_into(*patches, kt, y2);
    y2.rowwise() += row_view(bias);
    if (patches_out) *patches_out = std::move(patches);
    if (dims_out) *dims_out = d;
    return permute_out(y2, d);
}

Tensor maxpool2_eval(const Tensor& x, std::vector<std::uint8_t>* argmax_out) {
    require(x.rank() == 4, "maxpool2: input must be rank 4, got " + shape_str(x.shape()));
    const int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    require(h % 2 == 0 && w % 2 == 0, "maxpool2: spatial dims must be even, got " +
                                          std::to_string(h) + "x" + std::to_string(w));
    const int oh = h / 2, ow = w / 2;
    Tensor out({b, c, oh, ow});
    if (argmax_out) argmax_out->assign(out.size(), 0);
    const float* xp = x.data();
    float* op = out.data();
    std::int64_t oi = 0;
    for (int bc = 0; bc < b * c; ++bc) {
        const float* plane = xp + static_cast<std::int64_t>(bc) * h * w;
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j, ++oi) {
                float best = plane[(2 * i) * w + 2 * j];
                std::uint8_t arg = 0;
                const float cand1 = plane[(2 * i) * w + 2 * j + 1];
                const float cand2 = plane[(2 * i + 1) * w + 2 * j];
                const float cand3 = plane[(2 * i + 1) * w + 2 * j + 1];
                if (cand1 > best) best = cand1, arg = 1;
                if (cand2 > best) best = cand2, arg = 2;
                if (cand3 > best) best = cand3, arg = 3;
                op[oi] = best;
                if (argmax_out) (*argmax_out)[static_cast<std::size_t>(oi)] = arg;
            }
    }
    return out;
}

double loss_eval(const Tensor& pred, const LossSpec& spec) {
    if (!pred.same_shape(spec.target))
        throw DimensionError("loss: prediction " + shape_str(pred.shape()) + " vs target " +
                             shape_str(spec.target.shape()));
    if (spec.weight < 0.0) throw ValueError("loss: weight must be >= 0");
    const float* p = pred.data();
    const float* t = spec.target.data();
    const std::int64_t n = pred.size();
    double acc = 0.0;
    if (spec.kind == LossKind::CrossEntropy) {
        for (std::int64_t i = 0; i < n; ++i) {
            if (t[i] == 0.0f) continue;
            const float clamped = std::min(std::max(p[i], kProbEps), 1.0f - kProbEps);
            acc -= static_cast<double>(t[i]) * std::log(static_cast<double>(clamped));
        }
        return spec.weight * acc / static_cast<double>(pred.rows());
    }
    for (std::int64_t i = 0; i < n; ++i) {
        const double diff = static_cast<double>(p[i]) - static_cast<double>(t[i]);
        acc += diff * diff;
    }
    return spec.weight * acc / static_cast<double>(n);
}

}  // namespace

// ---- direct evaluation ----

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b, Activation act) {
    Mat y = affine_eval(x, w, b);
    if (act == Activation::Tanh)
        y = tanh_eval(y);
    else if (act == Activation::Softmax)
        y = softmax_eval(y);
    const std::vector<int> shape{static_cast<int>(y.rows()), static_cast<int>(y.cols())};
    return Tensor::from_mat(shape, std::move(y));
}

Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                      const Conv2dSpec& spec) {
    return conv2d_eval(x, kernel, bias, spec, nullptr, nullptr);
}

Tensor maxpool2_forward(const Tensor& x) { return maxpool2_eval(x, nullptr); }

double loss_value(const Tensor& pred, const LossSpec& spec) { return loss_eval(pred, spec); }

// ---- tape ----

int Tape::push(Node n) {
    if (check_finite_ && !n.value.all_finite())
        throw NumericError(std::string("tape: non-finite value out of op '") + n.op + "'");
    nodes_.push_back(std::move(n));
    return node_count() - 1;
}

int Tape::input(Tensor v) {
    Node n;
    n.op = "input";
    n.value = std::move(v);
    return push(std::move(n));
}

int Tape::param(int param_id) {
    ps_.check_id(param_id);
    Node n;
    n.op = "param";
    n.value = ps_.value(param_id);
    n.param = param_id;
    return push(std::move(n));
}

double Tape::scalar(int node) const {
    const Node& n = at(node);
    if (n.has_scalar) return n.scalar_value;
    if (n.value.size() != 1) throw DimensionError("tape: scalar() on non-scalar node");
    return static_cast<double>(n.value.data()[0]);
}

Mat& Tape::grad_buf(int id) {
    const Node& n = at(id);
    Mat& g = grads_[static_cast<std::size_t>(id)];
    if (!grad_set_[static_cast<std::size_t>(id)]) {
        g.setZero(n.value.rows(), n.value.cols());
        grad_set_[static_cast<std::size_t>(id)] = 1;
    }
    return g;
}

bool Tape::grad_present(int id) const {
    return !grad_set_.empty() && grad_set_[static_cast<std::size_t>(id)] != 0;
}

void Tape::backward(int node, const std::vector<int>& trainable) {
    const Node& root = at(node);
    if (root.value.size() != 1)
        throw DimensionError("backward: root node must hold a single value");
    std::vector<char> tmask(static_cast<std::size_t>(ps_.size()), 0);
    for (int id : trainable) {
        ps_.check_id(id);
        tmask[static_cast<std::size_t>(id)] = 1;
    }
    live_.assign(nodes_.size(), 0);
    for (int i = 0; i <= node; ++i) {
        const Node& nd = nodes_[static_cast<std::size_t>(i)];
        if (nd.param >= 0) {
            live_[static_cast<std::size_t>(i)] = tmask[static_cast<std::size_t>(nd.param)];
        } else {
            for (int in : nd.inputs)
                if (live_[static_cast<std::size_t>(in)]) {
                    live_[static_cast<std::size_t>(i)] = 1;
                    break;
                }
        }
    }
    if (!live_[static_cast<std::size_t>(node)]) {
        live_.clear();
        return;
    }
    grads_.assign(nodes_.size(), Mat());
    grad_set_.assign(nodes_.size(), 0);
    grad_buf(node).setOnes();
    for (int i = node; i >= 0; --i) {
        Node& nd = nodes_[static_cast<std::size_t>(i)];
        if (!live_[static_cast<std::size_t>(i)] || !grad_present(i)) continue;
        if (nd.back) nd.back(*this, i);
        if (nd.param >= 0) {
            ps_.grad(nd.param).mat() += grads_[static_cast<std::size_t>(i)];
            ps_.mark_active(nd.param);
        }
    }
    live_.clear();
    grads_.clear();
    grad_set_.clear();
}

// ---- op builders ----

int affine(Tape& t, int x, int w, int b) {
    Tape::Node n;
    n.op = "affine";
    Mat y = affine_eval(t.value(x), t.value(w), t.value(b));
    const std::vector<int> shape{static_cast<int>(y.rows()), static_cast<int>(y.cols())};
    n.value = Tensor::from_mat(shape, std::move(y));
    n.inputs = {x, w, b};
    n.back = [x, w, b](Tape& tp, int self) {
        const Mat& g = tp.grad_buf(self);
        if (tp.live(x)) tp.grad_buf(x).noalias() += g * tp.value(w).mat().transpose();
        if (tp.live(w)) tp.grad_buf(w).noalias() += tp.value(x).mat().transpose() * g;
        if (tp.live(b)) tp.grad_buf(b) += g.colwise().sum().transpose();
    };
    return t.push(std::move(n));
}

int tanh_of(Tape& t, int x) {
    Tape::Node n;
    n.op = "tanh";
    Mat y = tanh_eval(t.value(x).mat());
    n.value = Tensor::from_mat(t.value(x).shape(), std::move(y));
    n.inputs = {x};
    n.back = [x](Tape& tp, int self) {
        if (!tp.live(x)) return;
        const Mat& y = tp.value(self).mat();
        tp.grad_buf(x).array() +=
            tp.grad_buf(self).array() * (1.0f - y.array() * y.array());
    };
    return t.push(std::move(n));
}

int softmax_of(Tape& t, int x) {
    if (t.value(x).rank() != 2)
        throw DimensionError("softmax: input must be rank 2, got " +
                             shape_str(t.value(x).shape()));
    Tape::Node n;
    n.op = "softmax";
    n.value = Tensor::from_mat(t.value(x).shape(), softmax_eval(t.value(x).mat()));
    n.inputs = {x};
    n.back = [x](Tape& tp, int self) {
        if (!tp.live(x)) return;
        const Mat& y = tp.value(self).mat();
        const Mat& g = tp.grad_buf(self);
        Mat& gx = tp.grad_buf(x);
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const float dot = g.row(i).dot(y.row(i));
            gx.row(i).array() += y.row(i).array() * (g.row(i).array() - dot);
        }
    };
    return t.push(std::move(n));
}

int dense(Tape& t, int x, int w, int b, Activation act) {
    const int a = affine(t, x, w, b);
    if (act == Activation::Tanh) return tanh_of(t, a);
    if (act == Activation::Softmax) return softmax_of(t, a);
    return a;
}

int conv2d(Tape& t, int x, int kernel, int bias, const Conv2dSpec& spec) {
    Tape::Node n;
    n.op = "conv2d";
    std::shared_ptr<Mat> patches;
    ConvDims d{};
    n.value = conv2d_eval(t.value(x), t.value(kernel), t.value(bias), spec, &patches, &d);
    n.inputs = {x, kernel, bias};
    n.back = [x, kernel, bias, patches, d](Tape& tp, int self) {
        const Mat dy2 = unpermute_grad(tp.grad_buf(self), d);
        if (tp.live(kernel)) transposed_product_add(dy2, *patches, tp.grad_buf(kernel));
        if (tp.live(bias)) tp.grad_buf(bias) += dy2.colwise().sum().transpose();
        if (tp.live(x)) {
            Mat dpatches;
            product_into(dy2, tp.value(kernel).mat(), dpatches);
            col2im_add(dpatches, d, tp.grad_buf(x));
        }
    };
    return t.push(std::move(n));
}

int maxpool2(Tape& t, int x) {
    Tape::Node n;
    n.op = "maxpool2";
    auto argmax = std::make_shared<std::vector<std::uint8_t>>();
    n.value = maxpool2_eval(t.value(x), argmax.get());
    n.inputs = {x};
    const int h = t.value(x).dim(2), w = t.value(x).dim(3);
    n.back = [x, argmax, h, w](Tape& tp, int self) {
        if (!tp.live(x)) return;
        const Mat& g = tp.grad_buf(self);
        Mat& gx = tp.grad_buf(x);
        const float* gp = g.data();
        float* xp = gx.data();
        const int oh = h / 2, ow = w / 2;
        const std::int64_t planes = tp.value(self).size() / (static_cast<std::int64_t>(oh) * ow);
        std::int64_t oi = 0;
        for (std::int64_t bc = 0; bc < planes; ++bc) {
            float* plane = xp + bc * h * w;
            for (int i = 0; i < oh; ++i)
                for (int j = 0; j < ow; ++j, ++oi) {
                    const std::uint8_t a = (*argmax)[static_cast<std::size_t>(oi)];
                    plane[(2 * i + a / 2) * w + 2 * j + a % 2] += gp[oi];
                }
        }
    };
    return t.push(std::move(n));
}

int flatten2(Tape& t, int x) {
    const Tensor& v = t.value(x);
    if (v.rank() < 2) throw DimensionError("flatten: input must be rank >= 2");
    Tape::Node n;
    n.op = "flatten";
    n.value = v.reshaped({v.dim(0), static_cast<int>(v.size() / v.dim(0))});
    n.inputs = {x};
    n.back = [x](Tape& tp, int self) {
        if (!tp.live(x)) return;
        // flattening only rewrites shape metadata; the matrix view is identical
        tp.grad_buf(x) += tp.grad_buf(self);
    };
    return t.push(std::move(n));
}

int add_n(Tape& t, const std::vector<int>& xs) {
    if (xs.empty()) throw DimensionError("add: no terms");
    Tape::Node n;
    n.op = "add";
    Tensor v = t.value(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!t.value(xs[i]).same_shape(v))
            throw DimensionError("add: shape mismatch " + shape_str(v.shape()) + " vs " +
                                 shape_str(t.value(xs[i]).shape()));
        v.mat() += t.value(xs[i]).mat();
    }
    n.value = std::move(v);
    n.inputs = xs;
    n.back = [xs](Tape& tp, int self) {
        const Mat& g = tp.grad_buf(self);
        for (int x : xs)
            if (tp.live(x)) tp.grad_buf(x) += g;
    };
    return t.push(std::move(n));
}

int loss(Tape& t, int pred, const LossSpec& spec) {
    Tape::Node n;
    n.op = spec.kind == LossKind::CrossEntropy ? "cross-entropy" : "mse";
    const double value = loss_eval(t.value(pred), spec);
    if (!std::isfinite(value))
        throw NumericError(std::string("loss: non-finite ") + n.op + " value");
    n.value = Tensor::scalar(static_cast<float>(value));
    n.scalar_value = value;
    n.has_scalar = true;
    n.inputs = {pred};
    auto target = std::make_shared<Tensor>(spec.target);
    const LossKind kind = spec.kind;
    const double weight = spec.weight;
    n.back = [pred, target, kind, weight](Tape& tp, int self) {
        if (!tp.live(pred)) return;
        const float up = tp.grad_buf(self)(0, 0);
        const Mat& p = tp.value(pred).mat();
        const Mat& tg = target->mat();
        Mat& gx = tp.grad_buf(pred);
        if (kind == LossKind::CrossEntropy) {
            const float scale = static_cast<float>(weight) * up / static_cast<float>(p.rows());
            const float lo = kProbEps, hi = 1.0f - kProbEps;
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                const float pv = p.data()[i], tv = tg.data()[i];
                if (tv != 0.0f && pv > lo && pv < hi)
                    gx.data()[i] -= scale * tv / pv;
            }
        } else {
            const float scale =
                static_cast<float>(weight) * up * 2.0f / static_cast<float>(p.size());
            gx.array() += scale * (p.array() - tg.array());
        }
    };
    return t.push(std::move(n));
}

int add_scalars(Tape& t, const std::vector<int>& terms) {
    if (terms.empty()) throw DimensionError("add_scalars: no terms");
    Tape::Node n;
    n.op = "add_scalars";
    double acc = 0.0;
    for (int id : terms) {
        if (t.value(id).size() != 1)
            throw DimensionError("add_scalars: term is not a single value");
        acc += t.scalar(id);
    }
    n.value = Tensor::scalar(static_cast<float>(acc));
    n.scalar_value = acc;
    n.has_scalar = true;
    n.inputs = terms;
    n.back = [terms](Tape& tp, int self) {
        const Mat& g = tp.grad_buf(self);
        for (int id : terms)
            if (tp.live(id)) tp.grad_buf(id) += g;
    };
    return t.push(std::move(n));
}

}  // namespace gcdr
