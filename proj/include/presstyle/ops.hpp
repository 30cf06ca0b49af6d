#pragma once

#include <utility>
#include <vector>

#include "presstyle/tensor.hpp"

namespace ptn {

// Argmax bookkeeping from max_pool2d, consumed by max_unpool2d. Stores the
// exact pre-pool spatial size so odd rows/columns are restored.
struct PoolRecord {
  int batch = 0;
  int channels = 0;
  int in_h = 0;
  int in_w = 0;
  int out_h = 0;
  int out_w = 0;
  bool batched = false;                // rank-4 source
  std::vector<int> argmax;             // flat h*in_w+w per (n,c,oh,ow)
};

// Per-channel batch-norm learnable params live as plain tensors; the running
// statistics live here and are updated in train mode.
struct BatchNormState {
  Tensor running_mean;  // [C]
  Tensor running_var;   // [C]
  double eps = 1e-5;
  double momentum = 0.1;
};

// Cached batch statistics needed by batch_norm_backward.
struct BatchNormCache {
  Tensor mean;      // [C]
  Tensor inv_std;   // [C] = 1/sqrt(var+eps)
  Tensor x_hat;     // normalized input, same shape as input
  bool train = false;
};

// input [C,H,W] or [N,C,H,W]; kernels [C_out,C_in,kH,kW]; bias [C_out].
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride, int padding);
void conv2d_backward(const Tensor& input, const Tensor& kernels,
                     const Tensor& grad_out, int stride, int padding,
                     Tensor* grad_input, Tensor* grad_kernels, Tensor* grad_bias);

// kernels [C_in,C_out,kH,kW]; adjoint of conv2d when the same kernel memory
// is reinterpreted with swapped leading axes.
Tensor conv2d_transpose(const Tensor& input, const Tensor& kernels,
                        const Tensor& bias, int stride, int padding,
                        int out_h, int out_w);
void conv2d_transpose_backward(const Tensor& input, const Tensor& kernels,
                               const Tensor& grad_out, int stride, int padding,
                               Tensor* grad_input, Tensor* grad_kernels,
                               Tensor* grad_bias);

// 2x2 window, stride 2, floor semantics (trailing odd row/column dropped).
std::pair<Tensor, PoolRecord> max_pool2d(const Tensor& input);
Tensor max_pool2d_backward(const PoolRecord& rec, const Tensor& grad_out);

Tensor max_unpool2d(const Tensor& input, const PoolRecord& rec);
Tensor max_unpool2d_backward(const PoolRecord& rec, const Tensor& grad_out);

// input [N,C] or [N,C,H,W]; scale/shift [C]. Train mode requires N >= 2 and
// updates state's running stats; eval mode reads them.
Tensor batch_norm(const Tensor& input, const Tensor& scale, const Tensor& shift,
                  BatchNormState& state, bool train, BatchNormCache* cache);
void batch_norm_backward(const Tensor& input, const Tensor& scale,
                         const BatchNormCache& cache, const Tensor& grad_out,
                         Tensor* grad_input, Tensor* grad_scale,
                         Tensor* grad_shift);

// input [N,D_in]; weights [D_in,D_out]; bias [D_out].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weights,
                    const Tensor& grad_out, Tensor* grad_input,
                    Tensor* grad_weights, Tensor* grad_bias);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// Concatenate along axis 1 of two rank-2 tensors with equal dim 0.
Tensor concat_cols(const Tensor& a, const Tensor& b);

}  // namespace ptn
