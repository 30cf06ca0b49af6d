#include "presstyle/ops.hpp"

#include <cmath>
#include <string>

namespace ptn {

namespace {

struct View4 {
  int n, c, h, w;
  bool batched;
};

View4 as_nchw(const Tensor& t, const char* what) {
  if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2), false};
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3), true};
  throw ShapeError(std::string(what) + " must be rank 3 or 4, got " + t.shape_str());
}

Tensor make_nchw(int n, int c, int h, int w, bool batched) {
  if (batched) return Tensor({n, c, h, w});
  return Tensor({c, h, w});
}

int conv_out_dim(int in, int k, int stride, int padding) {
  return (in + 2 * padding - k) / stride + 1;
}

// Row kernels for the 3x3 stride-1 same-padding case, which is every layer of
// the transfer net. Edges are peeled so the interior loop is branch-free and
// autovectorizes; the generic loops below stay as the fallback and oracle.

// out[q] += sum_kj in[q-1+kj] * k3[kj]
void corr3_row(const double* in_row, const double* k3, double* out_row, int w) {
  out_row[0] += in_row[0] * k3[1] + in_row[1] * k3[2];
  for (int q = 1; q < w - 1; ++q) {
    out_row[q] += in_row[q - 1] * k3[0] + in_row[q] * k3[1] + in_row[q + 1] * k3[2];
  }
  out_row[w - 1] += in_row[w - 2] * k3[0] + in_row[w - 1] * k3[1];
}

// out[j] += sum_kj in[j+1-kj] * k3[kj] (scatter written as a flipped gather)
void corr3_row_flip(const double* in_row, const double* k3, double* out_row, int w) {
  out_row[0] += in_row[1] * k3[0] + in_row[0] * k3[1];
  for (int j = 1; j < w - 1; ++j) {
    out_row[j] += in_row[j + 1] * k3[0] + in_row[j] * k3[1] + in_row[j - 1] * k3[2];
  }
  out_row[w - 1] += in_row[w - 1] * k3[1] + in_row[w - 2] * k3[2];
}

// k3[kj] += sum_q g[q] * in[q-1+kj]
void corr3_taps(const double* g_row, const double* in_row, double* k3, int w) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int q = 1; q < w - 1; ++q) {
    s0 += g_row[q] * in_row[q - 1];
    s1 += g_row[q] * in_row[q];
    s2 += g_row[q] * in_row[q + 1];
  }
  s1 += g_row[0] * in_row[0] + g_row[w - 1] * in_row[w - 1];
  s0 += g_row[w - 1] * in_row[w - 2];
  s2 += g_row[0] * in_row[1];
  k3[0] += s0;
  k3[1] += s1;
  k3[2] += s2;
}

bool fast3x3(int stride, int padding, int kh, int kw, int w) {
  return stride == 1 && padding == 1 && kh == 3 && kw == 3 && w >= 2;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride, int padding) {
  const View4 x = as_nchw(input, "conv2d input");
  if (kernels.rank() != 4) {
    throw ShapeError("conv2d kernels must be rank 4 [C_out,C_in,kH,kW], got " +
                     kernels.shape_str());
  }
  const int c_out = kernels.dim(0), c_in = kernels.dim(1);
  const int kh = kernels.dim(2), kw = kernels.dim(3);
  if (c_in != x.c) {
    throw ShapeError("conv2d channel mismatch: input C=" + std::to_string(x.c) +
                     " vs kernel C_in=" + std::to_string(c_in));
  }
  if (bias.rank() != 1 || bias.dim(0) != c_out) {
    throw ShapeError("conv2d bias must be [C_out=" + std::to_string(c_out) +
                     "], got " + bias.shape_str());
  }
  if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
  if (kh > x.h + 2 * padding || kw > x.w + 2 * padding) {
    throw ShapeError("conv2d kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                     " exceeds padded input " + std::to_string(x.h + 2 * padding) +
                     "x" + std::to_string(x.w + 2 * padding));
  }
  const int oh = conv_out_dim(x.h, kh, stride, padding);
  const int ow = conv_out_dim(x.w, kw, stride, padding);

  Tensor out = make_nchw(x.n, c_out, oh, ow, x.batched);
  const double* in = input.data();
  const double* k = kernels.data();
  double* o = out.data();
  const std::size_t in_plane = static_cast<std::size_t>(x.h) * x.w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
  const std::size_t k_plane = static_cast<std::size_t>(kh) * kw;

  for (int n = 0; n < x.n; ++n) {
    const double* in_n = in + static_cast<std::size_t>(n) * x.c * in_plane;
    double* o_n = o + static_cast<std::size_t>(n) * c_out * out_plane;
    for (int co = 0; co < c_out; ++co) {
      double* o_c = o_n + co * out_plane;
      const double b = bias[static_cast<std::size_t>(co)];
      for (std::size_t i = 0; i < out_plane; ++i) o_c[i] = b;
      for (int ci = 0; ci < x.c; ++ci) {
        const double* in_c = in_n + ci * in_plane;
        const double* k_c = k + (static_cast<std::size_t>(co) * x.c + ci) * k_plane;
        if (fast3x3(stride, padding, kh, kw, x.w)) {
          for (int p = 0; p < oh; ++p) {
            double* orow = o_c + static_cast<std::size_t>(p) * ow;
            for (int ki = 0; ki < 3; ++ki) {
              const int ih = p - 1 + ki;
              if (ih < 0 || ih >= x.h) continue;
              corr3_row(in_c + static_cast<std::size_t>(ih) * x.w, k_c + ki * 3, orow,
                        x.w);
            }
          }
          continue;
        }
        for (int p = 0; p < oh; ++p) {
          for (int ki = 0; ki < kh; ++ki) {
            const int ih = p * stride - padding + ki;
            if (ih < 0 || ih >= x.h) continue;
            const double* row = in_c + static_cast<std::size_t>(ih) * x.w;
            double* orow = o_c + static_cast<std::size_t>(p) * ow;
            const double* krow = k_c + static_cast<std::size_t>(ki) * kw;
            for (int q = 0; q < ow; ++q) {
              double acc = 0.0;
              const int base = q * stride - padding;
              for (int kj = 0; kj < kw; ++kj) {
                const int iw = base + kj;
                if (iw < 0 || iw >= x.w) continue;
                acc += row[iw] * krow[kj];
              }
              orow[q] += acc;
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels,
                     const Tensor& grad_out, int stride, int padding,
                     Tensor* grad_input, Tensor* grad_kernels, Tensor* grad_bias) {
  const View4 x = as_nchw(input, "conv2d input");
  const View4 g = as_nchw(grad_out, "conv2d grad_out");
  const int c_out = kernels.dim(0);
  const int kh = kernels.dim(2), kw = kernels.dim(3);

  if (grad_input) *grad_input = Tensor(input.shape());
  if (grad_kernels) *grad_kernels = Tensor(kernels.shape());
  if (grad_bias) *grad_bias = Tensor({c_out});

  const double* in = input.data();
  const double* k = kernels.data();
  const double* go = grad_out.data();
  const std::size_t in_plane = static_cast<std::size_t>(x.h) * x.w;
  const std::size_t out_plane = static_cast<std::size_t>(g.h) * g.w;
  const std::size_t k_plane = static_cast<std::size_t>(kh) * kw;

  for (int n = 0; n < x.n; ++n) {
    const double* in_n = in + static_cast<std::size_t>(n) * x.c * in_plane;
    const double* go_n = go + static_cast<std::size_t>(n) * c_out * out_plane;
    for (int co = 0; co < c_out; ++co) {
      const double* go_c = go_n + co * out_plane;
      if (grad_bias) {
        double s = 0.0;
        for (std::size_t i = 0; i < out_plane; ++i) s += go_c[i];
        (*grad_bias)[static_cast<std::size_t>(co)] += s;
      }
      for (int ci = 0; ci < x.c; ++ci) {
        const double* in_c = in_n + ci * in_plane;
        const double* k_c = k + (static_cast<std::size_t>(co) * x.c + ci) * k_plane;
        double* gi_c = grad_input
                           ? grad_input->data() +
                                 static_cast<std::size_t>(n) * x.c * in_plane +
                                 ci * in_plane
                           : nullptr;
        double* gk_c = grad_kernels
                           ? grad_kernels->data() +
                                 (static_cast<std::size_t>(co) * x.c + ci) * k_plane
                           : nullptr;
        if (fast3x3(stride, padding, kh, kw, x.w)) {
          for (int p = 0; p < g.h; ++p) {
            const double* go_row = go_c + static_cast<std::size_t>(p) * g.w;
            for (int ki = 0; ki < 3; ++ki) {
              const int ih = p - 1 + ki;
              if (ih < 0 || ih >= x.h) continue;
              if (gi_c) {
                corr3_row_flip(go_row, k_c + ki * 3,
                               gi_c + static_cast<std::size_t>(ih) * x.w, x.w);
              }
              if (gk_c) {
                corr3_taps(go_row, in_c + static_cast<std::size_t>(ih) * x.w,
                           gk_c + ki * 3, x.w);
              }
            }
          }
          continue;
        }
        for (int p = 0; p < g.h; ++p) {
          for (int ki = 0; ki < kh; ++ki) {
            const int ih = p * stride - padding + ki;
            if (ih < 0 || ih >= x.h) continue;
            const double* go_row = go_c + static_cast<std::size_t>(p) * g.w;
            for (int q = 0; q < g.w; ++q) {
              const double gv = go_row[q];
              if (gv == 0.0) continue;
              const int base = q * stride - padding;
              for (int kj = 0; kj < kw; ++kj) {
                const int iw = base + kj;
                if (iw < 0 || iw >= x.w) continue;
                const std::size_t ii = static_cast<std::size_t>(ih) * x.w + iw;
                if (gi_c) gi_c[ii] += gv * k_c[static_cast<std::size_t>(ki) * kw + kj];
                if (gk_c) gk_c[static_cast<std::size_t>(ki) * kw + kj] += gv * in_c[ii];
              }
            }
          }
        }
      }
    }
  }
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& kernels,
                        const Tensor& bias, int stride, int padding,
                        int out_h, int out_w) {
  const View4 x = as_nchw(input, "conv2d_transpose input");
  if (kernels.rank() != 4) {
    throw ShapeError("conv2d_transpose kernels must be rank 4 [C_in,C_out,kH,kW], got " +
                     kernels.shape_str());
  }
  const int c_in = kernels.dim(0), c_out = kernels.dim(1);
  const int kh = kernels.dim(2), kw = kernels.dim(3);
  if (c_in != x.c) {
    throw ShapeError("conv2d_transpose channel mismatch: input C=" +
                     std::to_string(x.c) + " vs kernel C_in=" + std::to_string(c_in));
  }
  if (bias.rank() != 1 || bias.dim(0) != c_out) {
    throw ShapeError("conv2d_transpose bias must be [C_out=" +
                     std::to_string(c_out) + "], got " + bias.shape_str());
  }
  if (stride < 1) throw ShapeError("conv2d_transpose stride must be >= 1");
  // out size must invert the forward conv arithmetic (within the stride-1 band)
  if (out_h < kh - 2 * padding || conv_out_dim(out_h, kh, stride, padding) != x.h ||
      out_w < kw - 2 * padding || conv_out_dim(out_w, kw, stride, padding) != x.w) {
    throw ShapeError("conv2d_transpose output size " + std::to_string(out_h) + "x" +
                     std::to_string(out_w) + " inconsistent with input " +
                     std::to_string(x.h) + "x" + std::to_string(x.w) + ", kernel " +
                     std::to_string(kh) + "x" + std::to_string(kw) + ", stride " +
                     std::to_string(stride) + ", padding " + std::to_string(padding));
  }

  Tensor out = make_nchw(x.n, c_out, out_h, out_w, x.batched);
  const double* in = input.data();
  const double* k = kernels.data();
  double* o = out.data();
  const std::size_t in_plane = static_cast<std::size_t>(x.h) * x.w;
  const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
  const std::size_t k_plane = static_cast<std::size_t>(kh) * kw;

  for (int n = 0; n < x.n; ++n) {
    double* o_n = o + static_cast<std::size_t>(n) * c_out * out_plane;
    for (int co = 0; co < c_out; ++co) {
      double* o_c = o_n + co * out_plane;
      const double b = bias[static_cast<std::size_t>(co)];
      for (std::size_t i = 0; i < out_plane; ++i) o_c[i] = b;
    }
    const double* in_n = in + static_cast<std::size_t>(n) * x.c * in_plane;
    for (int ci = 0; ci < x.c; ++ci) {
      const double* in_c = in_n + ci * in_plane;
      for (int co = 0; co < c_out; ++co) {
        double* o_c = o_n + co * out_plane;
        const double* k_c = k + (static_cast<std::size_t>(ci) * c_out + co) * k_plane;
        if (fast3x3(stride, padding, kh, kw, x.w)) {
          for (int p = 0; p < x.h; ++p) {
            const double* irow = in_c + static_cast<std::size_t>(p) * x.w;
            for (int ki = 0; ki < 3; ++ki) {
              const int ohh = p - 1 + ki;
              if (ohh < 0 || ohh >= out_h) continue;
              corr3_row_flip(irow, k_c + ki * 3,
                             o_c + static_cast<std::size_t>(ohh) * out_w, x.w);
            }
          }
          continue;
        }
        for (int p = 0; p < x.h; ++p) {
          for (int ki = 0; ki < kh; ++ki) {
            const int ohh = p * stride - padding + ki;
            if (ohh < 0 || ohh >= out_h) continue;
            const double* irow = in_c + static_cast<std::size_t>(p) * x.w;
            double* orow = o_c + static_cast<std::size_t>(ohh) * out_w;
            const double* krow = k_c + static_cast<std::size_t>(ki) * kw;
            for (int q = 0; q < x.w; ++q) {
              const double v = irow[q];
              if (v == 0.0) continue;
              const int base = q * stride - padding;
              for (int kj = 0; kj < kw; ++kj) {
                const int oww = base + kj;
                if (oww < 0 || oww >= out_w) continue;
                orow[oww] += v * krow[kj];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void conv2d_transpose_backward(const Tensor& input, const Tensor& kernels,
                               const Tensor& grad_out, int stride, int padding,
                               Tensor* grad_input, Tensor* grad_kernels,
                               Tensor* grad_bias) {
  const View4 x = as_nchw(input, "conv2d_transpose input");
  const View4 g = as_nchw(grad_out, "conv2d_transpose grad_out");
  const int c_out = kernels.dim(1);
  const int kh = kernels.dim(2), kw = kernels.dim(3);

  if (grad_input) *grad_input = Tensor(input.shape());
  if (grad_kernels) *grad_kernels = Tensor(kernels.shape());
  if (grad_bias) *grad_bias = Tensor({c_out});

  const double* in = input.data();
  const double* k = kernels.data();
  const double* go = grad_out.data();
  const std::size_t in_plane = static_cast<std::size_t>(x.h) * x.w;
  const std::size_t out_plane = static_cast<std::size_t>(g.h) * g.w;
  const std::size_t k_plane = static_cast<std::size_t>(kh) * kw;

  for (int n = 0; n < x.n; ++n) {
    const double* in_n = in + static_cast<std::size_t>(n) * x.c * in_plane;
    const double* go_n = go + static_cast<std::size_t>(n) * c_out * out_plane;
    if (grad_bias) {
      for (int co = 0; co < c_out; ++co) {
        const double* go_c = go_n + co * out_plane;
        double s = 0.0;
        for (std::size_t i = 0; i < out_plane; ++i) s += go_c[i];
        (*grad_bias)[static_cast<std::size_t>(co)] += s;
      }
    }
    for (int ci = 0; ci < x.c; ++ci) {
      const double* in_c = in_n + ci * in_plane;
      double* gi_c = grad_input ? grad_input->data() +
                                      static_cast<std::size_t>(n) * x.c * in_plane +
                                      ci * in_plane
                                : nullptr;
      for (int co = 0; co < c_out; ++co) {
        const double* go_c = go_n + co * out_plane;
        const double* k_c = k + (static_cast<std::size_t>(ci) * c_out + co) * k_plane;
        double* gk_c = grad_kernels
                           ? grad_kernels->data() +
                                 (static_cast<std::size_t>(ci) * c_out + co) * k_plane
                           : nullptr;
        if (fast3x3(stride, padding, kh, kw, x.w)) {
          for (int p = 0; p < x.h; ++p) {
            const double* in_row = in_c + static_cast<std::size_t>(p) * x.w;
            for (int ki = 0; ki < 3; ++ki) {
              const int ohh = p - 1 + ki;
              if (ohh < 0 || ohh >= g.h) continue;
              const double* go_row = go_c + static_cast<std::size_t>(ohh) * g.w;
              if (gi_c) {
                corr3_row(go_row, k_c + ki * 3,
                          gi_c + static_cast<std::size_t>(p) * x.w, x.w);
              }
              if (gk_c) corr3_taps(in_row, go_row, gk_c + ki * 3, x.w);
            }
          }
          continue;
        }
        for (int p = 0; p < x.h; ++p) {
          for (int ki = 0; ki < kh; ++ki) {
            const int ohh = p * stride - padding + ki;
            if (ohh < 0 || ohh >= g.h) continue;
            const double* go_row = go_c + static_cast<std::size_t>(ohh) * g.w;
            for (int q = 0; q < x.w; ++q) {
              const int base = q * stride - padding;
              const std::size_t ii = static_cast<std::size_t>(p) * x.w + q;
              for (int kj = 0; kj < kw; ++kj) {
                const int oww = base + kj;
                if (oww < 0 || oww >= g.w) continue;
                const double gv = go_row[oww];
                if (gi_c) gi_c[ii] += gv * k_c[static_cast<std::size_t>(ki) * kw + kj];
                if (gk_c) gk_c[static_cast<std::size_t>(ki) * kw + kj] += gv * in_c[ii];
              }
            }
          }
        }
      }
    }
  }
}

std::pair<Tensor, PoolRecord> max_pool2d(const Tensor& input) {
  const View4 x = as_nchw(input, "max_pool2d input");
  if (x.h < 2 && x.w < 2) {
    throw ShapeError("max_pool2d input " + std::to_string(x.h) + "x" +
                     std::to_string(x.w) + " too small for a 2x2 window");
  }
  const int oh = x.h / 2 > 0 ? x.h / 2 : 1;
  const int ow = x.w / 2 > 0 ? x.w / 2 : 1;
  PoolRecord rec;
  rec.batch = x.n;
  rec.channels = x.c;
  rec.in_h = x.h;
  rec.in_w = x.w;
  rec.out_h = oh;
  rec.out_w = ow;
  rec.batched = x.batched;
  rec.argmax.assign(static_cast<std::size_t>(x.n) * x.c * oh * ow, 0);

  Tensor out = make_nchw(x.n, x.c, oh, ow, x.batched);
  const double* in = input.data();
  double* o = out.data();
  const std::size_t in_plane = static_cast<std::size_t>(x.h) * x.w;
  const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;

  std::size_t plane = 0;
  for (int nc = 0; nc < x.n * x.c; ++nc, ++plane) {
    const double* in_c = in + plane * in_plane;
    double* o_c = o + plane * out_plane;
    int* am = rec.argmax.data() + plane * out_plane;
    for (int p = 0; p < oh; ++p) {
      for (int q = 0; q < ow; ++q) {
        const int h0 = 2 * p, w0 = 2 * q;
        int best_h = h0, best_w = w0;
        double best = in_c[static_cast<std::size_t>(h0) * x.w + w0];
        const int h1 = std::min(h0 + 2, x.h), w1 = std::min(w0 + 2, x.w);
        for (int hh = h0; hh < h1; ++hh) {
          for (int ww = w0; ww < w1; ++ww) {
            const double v = in_c[static_cast<std::size_t>(hh) * x.w + ww];
            if (v > best) {
              best = v;
              best_h = hh;
              best_w = ww;
            }
          }
        }
        o_c[static_cast<std::size_t>(p) * ow + q] = best;
        am[static_cast<std::size_t>(p) * ow + q] = best_h * x.w + best_w;
      }
    }
  }
  return {std::move(out), std::move(rec)};
}

Tensor max_pool2d_backward(const PoolRecord& rec, const Tensor& grad_out) {
  Tensor grad_in = rec.batched
                       ? Tensor({rec.batch, rec.channels, rec.in_h, rec.in_w})
                       : Tensor({rec.channels, rec.in_h, rec.in_w});
  const std::size_t in_plane = static_cast<std::size_t>(rec.in_h) * rec.in_w;
  const std::size_t out_plane = static_cast<std::size_t>(rec.out_h) * rec.out_w;
  const double* go = grad_out.data();
  double* gi = grad_in.data();
  const std::size_t planes = static_cast<std::size_t>(rec.batch) * rec.channels;
  for (std::size_t p = 0; p < planes; ++p) {
    const int* am = rec.argmax.data() + p * out_plane;
    const double* go_c = go + p * out_plane;
    double* gi_c = gi + p * in_plane;
    for (std::size_t i = 0; i < out_plane; ++i) gi_c[am[i]] += go_c[i];
  }
  return grad_in;
}

Tensor max_unpool2d(const Tensor& input, const PoolRecord& rec) {
  const View4 x = as_nchw(input, "max_unpool2d input");
  if (x.n != rec.batch || x.c != rec.channels || x.h != rec.out_h || x.w != rec.out_w) {
    throw ShapeError("max_unpool2d input " + input.shape_str() +
                     " does not match pool record (" + std::to_string(rec.batch) +
                     "," + std::to_string(rec.channels) + "," +
                     std::to_string(rec.out_h) + "," + std::to_string(rec.out_w) + ")");
  }
  Tensor out = make_nchw(rec.batch, rec.channels, rec.in_h, rec.in_w, x.batched);
  const std::size_t in_plane = static_cast<std::size_t>(rec.out_h) * rec.out_w;
  const std::size_t out_plane = static_cast<std::size_t>(rec.in_h) * rec.in_w;
  const double* in = input.data();
  double* o = out.data();
  const std::size_t planes = static_cast<std::size_t>(rec.batch) * rec.channels;
  for (std::size_t p = 0; p < planes; ++p) {
    const int* am = rec.argmax.data() + p * in_plane;
    const double* in_c = in + p * in_plane;
    double* o_c = o + p * out_plane;
    for (std::size_t i = 0; i < in_plane; ++i) o_c[am[i]] = in_c[i];
  }
  return out;
}

Tensor max_unpool2d_backward(const PoolRecord& rec, const Tensor& grad_out) {
  Tensor grad_in = rec.batched
                       ? Tensor({rec.batch, rec.channels, rec.out_h, rec.out_w})
                       : Tensor({rec.channels, rec.out_h, rec.out_w});
  const std::size_t pooled_plane = static_cast<std::size_t>(rec.out_h) * rec.out_w;
  const std::size_t full_plane = static_cast<std::size_t>(rec.in_h) * rec.in_w;
  const double* go = grad_out.data();
  double* gi = grad_in.data();
  const std::size_t planes = static_cast<std::size_t>(rec.batch) * rec.channels;
  for (std::size_t p = 0; p < planes; ++p) {
    const int* am = rec.argmax.data() + p * pooled_plane;
    const double* go_c = go + p * full_plane;
    double* gi_c = gi + p * pooled_plane;
    for (std::size_t i = 0; i < pooled_plane; ++i) gi_c[i] = go_c[am[i]];
  }
  return grad_in;
}

namespace {

struct BnView {
  int n, c;
  std::size_t spatial;  // elements per (n,c)
};

BnView bn_view(const Tensor& t) {
  if (t.rank() == 2) return {t.dim(0), t.dim(1), 1};
  if (t.rank() == 4) {
    return {t.dim(0), t.dim(1), static_cast<std::size_t>(t.dim(2)) * t.dim(3)};
  }
  throw ShapeError("batch_norm input must be rank 2 or 4, got " + t.shape_str());
}

// index of element (n, c, s) in an [N,C,spatial] layout
inline std::size_t bn_idx(const BnView& v, int n, int c, std::size_t s) {
  return (static_cast<std::size_t>(n) * v.c + c) * v.spatial + s;
}

}  // namespace

Tensor batch_norm(const Tensor& input, const Tensor& scale, const Tensor& shift,
                  BatchNormState& state, bool train, BatchNormCache* cache) {
  const BnView v = bn_view(input);
  if (scale.rank() != 1 || scale.dim(0) != v.c || shift.rank() != 1 ||
      shift.dim(0) != v.c) {
    throw ShapeError("batch_norm scale/shift must be [C=" + std::to_string(v.c) + "]");
  }
  if (state.running_mean.size() != static_cast<std::size_t>(v.c)) {
    throw ShapeError("batch_norm running stats must be [C=" + std::to_string(v.c) + "]");
  }
  if (train && v.n < 2) {
    throw NumericError("batch_norm train mode needs a batch of at least 2, got " +
                       std::to_string(v.n));
  }

  Tensor mean({v.c});
  Tensor inv_std({v.c});
  const double count = static_cast<double>(v.n) * static_cast<double>(v.spatial);
  const double* in = input.data();

  if (train) {
    for (int c = 0; c < v.c; ++c) {
      double m = 0.0;
      for (int n = 0; n < v.n; ++n)
        for (std::size_t s = 0; s < v.spatial; ++s) m += in[bn_idx(v, n, c, s)];
      m /= count;
      double var = 0.0;
      for (int n = 0; n < v.n; ++n)
        for (std::size_t s = 0; s < v.spatial; ++s) {
          const double d = in[bn_idx(v, n, c, s)] - m;
          var += d * d;
        }
      var /= count;
      mean[c] = m;
      inv_std[c] = 1.0 / std::sqrt(var + state.eps);
      state.running_mean[c] =
          (1.0 - state.momentum) * state.running_mean[c] + state.momentum * m;
      state.running_var[c] =
          (1.0 - state.momentum) * state.running_var[c] + state.momentum * var;
    }
  } else {
    for (int c = 0; c < v.c; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  Tensor out(input.shape());
  Tensor x_hat(input.shape());
  double* o = out.data();
  double* xh = x_hat.data();
  for (int c = 0; c < v.c; ++c) {
    const double m = mean[c], is = inv_std[c];
    const double g = scale[static_cast<std::size_t>(c)];
    const double b = shift[static_cast<std::size_t>(c)];
    for (int n = 0; n < v.n; ++n) {
      for (std::size_t s = 0; s < v.spatial; ++s) {
        const std::size_t i = bn_idx(v, n, c, s);
        const double h = (in[i] - m) * is;
        xh[i] = h;
        o[i] = g * h + b;
      }
    }
  }
  if (cache) {
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
    cache->x_hat = std::move(x_hat);
    cache->train = train;
  }
  return out;
}

void batch_norm_backward(const Tensor& input, const Tensor& scale,
                         const BatchNormCache& cache, const Tensor& grad_out,
                         Tensor* grad_input, Tensor* grad_scale,
                         Tensor* grad_shift) {
  const BnView v = bn_view(input);
  if (grad_input) *grad_input = Tensor(input.shape());
  if (grad_scale) *grad_scale = Tensor({v.c});
  if (grad_shift) *grad_shift = Tensor({v.c});

  const double count = static_cast<double>(v.n) * static_cast<double>(v.spatial);
  const double* go = grad_out.data();
  const double* xh = cache.x_hat.data();

  for (int c = 0; c < v.c; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int n = 0; n < v.n; ++n) {
      for (std::size_t s = 0; s < v.spatial; ++s) {
        const std::size_t i = bn_idx(v, n, c, s);
        sum_g += go[i];
        sum_gx += go[i] * xh[i];
      }
    }
    if (grad_shift) (*grad_shift)[c] += sum_g;
    if (grad_scale) (*grad_scale)[c] += sum_gx;
    if (!grad_input) continue;
    const double g = scale[static_cast<std::size_t>(c)];
    const double is = cache.inv_std[c];
    double* gi = grad_input->data();
    if (cache.train) {
      for (int n = 0; n < v.n; ++n) {
        for (std::size_t s = 0; s < v.spatial; ++s) {
          const std::size_t i = bn_idx(v, n, c, s);
          gi[i] = g * is * (go[i] - sum_g / count - xh[i] * sum_gx / count);
        }
      }
    } else {
      for (int n = 0; n < v.n; ++n) {
        for (std::size_t s = 0; s < v.spatial; ++s) {
          const std::size_t i = bn_idx(v, n, c, s);
          gi[i] = g * is * go[i];
        }
      }
    }
  }
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (input.rank() != 2 || weights.rank() != 2 || bias.rank() != 1) {
    throw ShapeError("dense expects input [N,D_in], weights [D_in,D_out], bias [D_out]");
  }
  const int n = input.dim(0), d_in = input.dim(1);
  const int d_out = weights.dim(1);
  if (weights.dim(0) != d_in) {
    throw ShapeError("dense dimension mismatch: input D_in=" + std::to_string(d_in) +
                     " vs weights D_in=" + std::to_string(weights.dim(0)));
  }
  if (bias.dim(0) != d_out) {
    throw ShapeError("dense bias must be [D_out=" + std::to_string(d_out) + "]");
  }
  Tensor out({n, d_out});
  const double* in = input.data();
  const double* w = weights.data();
  double* o = out.data();
  for (int i = 0; i < n; ++i) {
    double* orow = o + static_cast<std::size_t>(i) * d_out;
    for (int j = 0; j < d_out; ++j) orow[j] = bias[static_cast<std::size_t>(j)];
    const double* irow = in + static_cast<std::size_t>(i) * d_in;
    for (int k = 0; k < d_in; ++k) {
      const double v = irow[k];
      if (v == 0.0) continue;
      const double* wrow = w + static_cast<std::size_t>(k) * d_out;
      for (int j = 0; j < d_out; ++j) orow[j] += v * wrow[j];
    }
  }
  return out;
}

void dense_backward(const Tensor& input, const Tensor& weights,
                    const Tensor& grad_out, Tensor* grad_input,
                    Tensor* grad_weights, Tensor* grad_bias) {
  const int n = input.dim(0), d_in = input.dim(1), d_out = weights.dim(1);
  if (grad_input) *grad_input = Tensor(input.shape());
  if (grad_weights) *grad_weights = Tensor(weights.shape());
  if (grad_bias) *grad_bias = Tensor({d_out});
  const double* in = input.data();
  const double* w = weights.data();
  const double* go = grad_out.data();
  for (int i = 0; i < n; ++i) {
    const double* grow = go + static_cast<std::size_t>(i) * d_out;
    const double* irow = in + static_cast<std::size_t>(i) * d_in;
    if (grad_bias) {
      for (int j = 0; j < d_out; ++j) (*grad_bias)[static_cast<std::size_t>(j)] += grow[j];
    }
    for (int k = 0; k < d_in; ++k) {
      const double* wrow = w + static_cast<std::size_t>(k) * d_out;
      double acc = 0.0;
      double* gwrow =
          grad_weights ? grad_weights->data() + static_cast<std::size_t>(k) * d_out
                       : nullptr;
      const double xv = irow[k];
      for (int j = 0; j < d_out; ++j) {
        acc += grow[j] * wrow[j];
        if (gwrow) gwrow[j] += xv * grow[j];
      }
      if (grad_input) (*grad_input)[static_cast<std::size_t>(i) * d_in + k] = acc;
    }
  }
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0 ? input[i] : 0.0;
  }
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  Tensor grad_in(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    grad_in[i] = input[i] > 0.0 ? grad_out[i] : 0.0;
  }
  return grad_in;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw ShapeError("concat_cols expects rank-2 tensors with equal dim 0, got " +
                     a.shape_str() + " and " + b.shape_str());
  }
  const int n = a.dim(0), da = a.dim(1), db = b.dim(1);
  Tensor out({n, da + db});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < da; ++j) out.at(i, j) = a.at(i, j);
    for (int j = 0; j < db; ++j) out.at(i, da + j) = b.at(i, j);
  }
  return out;
}

}  // namespace ptn
