#pragma once

#include "freqseg/tensor/tensor.hpp"

namespace freqseg {

inline constexpr double kDiceLossEpsilon = 1e-5;

/// Soft Dice loss with a squared-magnitude denominator:
///
///   loss = 1 - mean_{b,c} (2 sum p*g + eps) / (sum p^2 + sum g^2 + eps)
///
/// `pred` and `target` are [B, C, ...] with identical shapes; `target`
/// holds one-hot foreground channels with values in {0, 1}.
Tensor soft_dice_loss(const Tensor& pred, const NdArray& target,
                      double eps = kDiceLossEpsilon);

}  // namespace freqseg
