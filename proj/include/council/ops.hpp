#pragma once

#include "council/autograd.hpp"

namespace council {

namespace detail {

// Gather k*k patches of one image (C,H,W) into a (C*kh*kw) x (oh*ow) matrix.
inline void im2col(const real* img, int64_t C, int64_t H, int64_t W,
                   int64_t kh, int64_t kw, int64_t stride, int64_t pad,
                   int64_t oh, int64_t ow, real* col) {
    for (int64_t c = 0; c < C; ++c)
        for (int64_t ky = 0; ky < kh; ++ky)
            for (int64_t kx = 0; kx < kw; ++kx) {
                real* dst = col + ((c * kh + ky) * kw + kx) * oh * ow;
                for (int64_t y = 0; y < oh; ++y) {
                    int64_t iy = y * stride + ky - pad;
                    if (iy < 0 || iy >= H) {
                        for (int64_t x = 0; x < ow; ++x) dst[y * ow + x] = 0;
                        continue;
                    }
                    const real* src = img + (c * H + iy) * W;
                    for (int64_t x = 0; x < ow; ++x) {
                        int64_t ix = x * stride + kx - pad;
                        dst[y * ow + x] = (ix >= 0 && ix < W) ? src[ix] : 0;
                    }
                }
            }
}

inline void col2im_add(const real* col, int64_t C, int64_t H, int64_t W,
                       int64_t kh, int64_t kw, int64_t stride, int64_t pad,
                       int64_t oh, int64_t ow, real* img) {
    for (int64_t c = 0; c < C; ++c)
        for (int64_t ky = 0; ky < kh; ++ky)
            for (int64_t kx = 0; kx < kw; ++kx) {
                const real* src = col + ((c * kh + ky) * kw + kx) * oh * ow;
                for (int64_t y = 0; y < oh; ++y) {
                    int64_t iy = y * stride + ky - pad;
                    if (iy < 0 || iy >= H) continue;
                    real* dst = img + (c * H + iy) * W;
                    for (int64_t x = 0; x < ow; ++x) {
                        int64_t ix = x * stride + kx - pad;
                        if (ix >= 0 && ix < W) dst[ix] += src[y * ow + x];
                    }
                }
            }
}

} // namespace detail

// x: (B,C,H,W), w: (O,C,kh,kw), b: (O). Zero padding.
inline Var conv2d(const Var& x, const Var& w, const Var& b, int64_t stride, int64_t pad) {
    const auto& xs = x.value().shape();
    const auto& ws = w.value().shape();
    if (xs.size() != 4 || ws.size() != 4 || xs[1] != ws[1])
        throw std::invalid_argument("conv2d: shape mismatch " + Tensor::shape_str(xs) +
                                    " / " + Tensor::shape_str(ws));
    const int64_t B = xs[0], C = xs[1], H = xs[2], W = xs[3];
    const int64_t O = ws[0], kh = ws[2], kw = ws[3];
    const int64_t oh = (H + 2 * pad - kh) / stride + 1;
    const int64_t ow = (W + 2 * pad - kw) / stride + 1;
    if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: output would be empty");
    const int64_t K = C * kh * kw, P = oh * ow;

    Tensor out({B, O, oh, ow});
    std::vector<real> col(static_cast<size_t>(K * P));
    ECMap wm(w.value().data(), O, K);
    for (int64_t bi = 0; bi < B; ++bi) {
        detail::im2col(x.value().data() + bi * C * H * W, C, H, W, kh, kw, stride, pad,
                       oh, ow, col.data());
        ECMap cm(col.data(), K, P);
        EMap om(out.data() + bi * O * P, O, P);
        om.noalias() = wm * cm;
        for (int64_t o = 0; o < O; ++o) {
            real bias = b.value()[o];
            real* row = out.data() + (bi * O + o) * P;
            for (int64_t p = 0; p < P; ++p) row[p] += bias;
        }
    }
    auto backward = [B, C, H, W, O, kh, kw, stride, pad, oh, ow, K, P](Node& n) {
        Node* xp = n.parents[0].get();
        Node* wp = n.parents[1].get();
        Node* bp = n.parents[2].get();
        std::vector<real> col(static_cast<size_t>(K * P));
        ECMap wm2(wp->value.data(), O, K);
        for (int64_t bi = 0; bi < B; ++bi) {
            ECMap gy(n.grad.data() + bi * O * P, O, P);
            if (wp->requires_grad) {
                detail::im2col(xp->value.data() + bi * C * H * W, C, H, W, kh, kw,
                               stride, pad, oh, ow, col.data());
                ECMap cm(col.data(), K, P);
                EMap gw(wp->grad_buf().data(), O, K);
                gw.noalias() += gy * cm.transpose();
            }
            if (xp->requires_grad) {
                EMap cm(col.data(), K, P);
                cm.noalias() = wm2.transpose() * gy;
                detail::col2im_add(col.data(), C, H, W, kh, kw, stride, pad, oh, ow,
                                   xp->grad_buf().data() + bi * C * H * W);
            }
            if (bp->requires_grad) {
                Tensor& gb = bp->grad_buf();
                for (int64_t o = 0; o < O; ++o) {
                    real s = 0;
                    const real* row = n.grad.data() + (bi * O + o) * P;
                    for (int64_t p = 0; p < P; ++p) s += row[p];
                    gb[o] += s;
                }
            }
        }
    };
    return detail::make_op(std::move(out), {x, w, b}, backward);
}

inline Var avg_pool2(const Var& x) {
    const auto& s = x.value().shape();
    const int64_t B = s[0], C = s[1], H = s[2], W = s[3];
    if (H % 2 || W % 2) throw std::invalid_argument("avg_pool2: odd spatial extent");
    const int64_t oh = H / 2, ow = W / 2;
    Tensor out({B, C, oh, ow});
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const real* src = x.value().data() + bc * H * W;
        real* dst = out.data() + bc * oh * ow;
        for (int64_t y = 0; y < oh; ++y)
            for (int64_t xx = 0; xx < ow; ++xx)
                dst[y * ow + xx] = 0.25 * (src[2 * y * W + 2 * xx] + src[2 * y * W + 2 * xx + 1] +
                                           src[(2 * y + 1) * W + 2 * xx] +
                                           src[(2 * y + 1) * W + 2 * xx + 1]);
    }
    return detail::make_op(std::move(out), {x}, [B, C, H, W, oh, ow](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t bc = 0; bc < B * C; ++bc) {
            real* dst = g.data() + bc * H * W;
            const real* src = n.grad.data() + bc * oh * ow;
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t xx = 0; xx < ow; ++xx) {
                    real d = 0.25 * src[y * ow + xx];
                    dst[2 * y * W + 2 * xx] += d;
                    dst[2 * y * W + 2 * xx + 1] += d;
                    dst[(2 * y + 1) * W + 2 * xx] += d;
                    dst[(2 * y + 1) * W + 2 * xx + 1] += d;
                }
        }
    });
}

inline Var upsample_nearest2(const Var& x) {
    const auto& s = x.value().shape();
    const int64_t B = s[0], C = s[1], H = s[2], W = s[3];
    const int64_t oh = H * 2, ow = W * 2;
    Tensor out({B, C, oh, ow});
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const real* src = x.value().data() + bc * H * W;
        real* dst = out.data() + bc * oh * ow;
        for (int64_t y = 0; y < oh; ++y)
            for (int64_t xx = 0; xx < ow; ++xx) dst[y * ow + xx] = src[(y / 2) * W + xx / 2];
    }
    return detail::make_op(std::move(out), {x}, [B, C, H, W, oh, ow](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t bc = 0; bc < B * C; ++bc) {
            real* dst = g.data() + bc * H * W;
            const real* src = n.grad.data() + bc * oh * ow;
            for (int64_t y = 0; y < oh; ++y)
                for (int64_t xx = 0; xx < ow; ++xx) dst[(y / 2) * W + xx / 2] += src[y * ow + xx];
        }
    });
}

// Per-(sample, channel) standardization; no learned affine here.
inline Var instance_norm(const Var& x, real eps = 1e-5) {
    const auto& s = x.value().shape();
    const int64_t B = s[0], C = s[1], HW = s[2] * s[3];
    Tensor out(s);
    Tensor inv_std({B, C});
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const real* src = x.value().data() + bc * HW;
        real mu = 0;
        for (int64_t i = 0; i < HW; ++i) mu += src[i];
        mu /= static_cast<real>(HW);
        real var = 0;
        for (int64_t i = 0; i < HW; ++i) var += (src[i] - mu) * (src[i] - mu);
        var /= static_cast<real>(HW);
        real is = 1.0 / std::sqrt(var + eps);
        inv_std[bc] = is;
        real* dst = out.data() + bc * HW;
        for (int64_t i = 0; i < HW; ++i) dst[i] = (src[i] - mu) * is;
    }
    return detail::make_op(std::move(out), {x}, [B, C, HW, inv_std](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t bc = 0; bc < B * C; ++bc) {
            const real* y = n.value.data() + bc * HW;
            const real* gy = n.grad.data() + bc * HW;
            real* gx = g.data() + bc * HW;
            real mean_gy = 0, mean_gyy = 0;
            for (int64_t i = 0; i < HW; ++i) {
                mean_gy += gy[i];
                mean_gyy += gy[i] * y[i];
            }
            mean_gy /= static_cast<real>(HW);
            mean_gyy /= static_cast<real>(HW);
            real is = inv_std[bc];
            for (int64_t i = 0; i < HW; ++i)
                gx[i] += is * (gy[i] - mean_gy - y[i] * mean_gyy);
        }
    });
}

// y[b,c,:,:] = gamma[b,c] * x[b,c,:,:] + beta[b,c]. AdaIN's affine half.
inline Var channel_affine(const Var& x, const Var& gamma, const Var& beta) {
    const auto& s = x.value().shape();
    const int64_t B = s[0], C = s[1], HW = s[2] * s[3];
    if (gamma.value().numel() != B * C || beta.value().numel() != B * C)
        throw std::invalid_argument("channel_affine: parameter shape mismatch");
    Tensor out(s);
    for (int64_t bc = 0; bc < B * C; ++bc) {
        const real* src = x.value().data() + bc * HW;
        real* dst = out.data() + bc * HW;
        real g = gamma.value()[bc], b = beta.value()[bc];
        for (int64_t i = 0; i < HW; ++i) dst[i] = g * src[i] + b;
    }
    return detail::make_op(std::move(out), {x, gamma, beta}, [B, C, HW](Node& n) {
        Node* xp = n.parents[0].get();
        Node* gp = n.parents[1].get();
        Node* bp = n.parents[2].get();
        for (int64_t bc = 0; bc < B * C; ++bc) {
            const real* gy = n.grad.data() + bc * HW;
            if (xp->requires_grad) {
                real* gx = xp->grad_buf().data() + bc * HW;
                real g = gp->value[bc];
                for (int64_t i = 0; i < HW; ++i) gx[i] += g * gy[i];
            }
            if (gp->requires_grad) {
                const real* xv = xp->value.data() + bc * HW;
                real s2 = 0;
                for (int64_t i = 0; i < HW; ++i) s2 += gy[i] * xv[i];
                gp->grad_buf()[bc] += s2;
            }
            if (bp->requires_grad) {
                real s2 = 0;
                for (int64_t i = 0; i < HW; ++i) s2 += gy[i];
                bp->grad_buf()[bc] += s2;
            }
        }
    });
}

inline Var concat_channels(const Var& a, const Var& b) {
    const auto& sa = a.value().shape();
    const auto& sb = b.value().shape();
    if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3])
        throw std::invalid_argument("concat_channels: shape mismatch");
    const int64_t B = sa[0], Ca = sa[1], Cb = sb[1], HW = sa[2] * sa[3];
    Tensor out({B, Ca + Cb, sa[2], sa[3]});
    for (int64_t bi = 0; bi < B; ++bi) {
        std::copy_n(a.value().data() + bi * Ca * HW, Ca * HW,
                    out.data() + bi * (Ca + Cb) * HW);
        std::copy_n(b.value().data() + bi * Cb * HW, Cb * HW,
                    out.data() + bi * (Ca + Cb) * HW + Ca * HW);
    }
    return detail::make_op(std::move(out), {a, b}, [B, Ca, Cb, HW](Node& n) {
        for (int64_t bi = 0; bi < B; ++bi) {
            if (n.parents[0]->requires_grad) {
                real* g = n.parents[0]->grad_buf().data() + bi * Ca * HW;
                const real* src = n.grad.data() + bi * (Ca + Cb) * HW;
                for (int64_t i = 0; i < Ca * HW; ++i) g[i] += src[i];
            }
            if (n.parents[1]->requires_grad) {
                real* g = n.parents[1]->grad_buf().data() + bi * Cb * HW;
                const real* src = n.grad.data() + bi * (Ca + Cb) * HW + Ca * HW;
                for (int64_t i = 0; i < Cb * HW; ++i) g[i] += src[i];
            }
        }
    });
}

inline Var reshape(const Var& x, std::vector<int64_t> shape) {
    if (Tensor::count(shape) != x.value().numel())
        throw std::invalid_argument("reshape: element count mismatch");
    Tensor out(std::move(shape), std::vector<real>(x.value().data(),
                                                   x.value().data() + x.value().numel()));
    return detail::make_op(std::move(out), {x}, [](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    });
}

// Channels [from, to) of a (B,C,H,W) tensor.
inline Var slice_channels(const Var& x, int64_t from, int64_t to) {
    const auto& s = x.value().shape();
    const int64_t B = s[0], C = s[1], HW = s[2] * s[3];
    if (from < 0 || to > C || from >= to)
        throw std::invalid_argument("slice_channels: bad range");
    const int64_t Co = to - from;
    Tensor out({B, Co, s[2], s[3]});
    for (int64_t bi = 0; bi < B; ++bi)
        std::copy_n(x.value().data() + (bi * C + from) * HW, Co * HW,
                    out.data() + bi * Co * HW);
    return detail::make_op(std::move(out), {x}, [B, C, HW, from, Co](Node& n) {
        Tensor& g = n.parents[0]->grad_buf();
        for (int64_t bi = 0; bi < B; ++bi) {
            real* dst = g.data() + (bi * C + from) * HW;
            const real* src = n.grad.data() + bi * Co * HW;
            for (int64_t i = 0; i < Co * HW; ++i) dst[i] += src[i];
        }
    });
}

} // namespace council
