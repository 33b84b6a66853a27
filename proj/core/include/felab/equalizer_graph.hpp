// SPDX-License-Identifier: Apache-2.0
//
// felab - field-enhanced learned Volterra equalization workbench
//
// Recorded forward pass and its adjoint for one block. Gradients of the real
// loss follow g = dL/dRe(z) + j dL/dIm(z) for complex quantities, so a step
// z -= eta g descends.

#pragma once

#include <span>
#include <vector>

#include "felab/equalizer.hpp"

namespace felab::detail {

struct BranchRecord {
  std::vector<ComplexVector> field;      // y, before h_in
  std::vector<ComplexVector> filtered;   // u, after h_in
  std::vector<std::vector<double>> power;  // |u|^2
  std::vector<std::vector<double>> drive;  // alpha * p_n + 2 sum beta * p_r
  std::vector<ComplexVector> sigma;      // activation, before h_out
};

struct BlockRecord {
  std::vector<BranchRecord> branches;
};

/// Runs one block. `output_response` (optional, length n_fft) multiplies the
/// accumulated spectrum before the final inverse transform; the training
/// pipeline fuses the matched filter here.
std::vector<ComplexVector> run_block(const std::vector<std::span<const Complex>>& block,
                                     const EqualizerParams& params, const EqualizerSpec& spec,
                                     const LinearStageBank& stages, std::span<const double> output_response,
                                     BlockRecord* record);

/// Accumulates parameter gradients given the gradient of the valid output
/// samples of a recorded block.
void backward_block(const BlockRecord& record, const std::vector<ComplexVector>& grad_valid,
                    const EqualizerParams& params, const EqualizerSpec& spec, const LinearStageBank& stages,
                    std::span<const double> output_response, EqualizerParams& grads);

}  // namespace felab::detail
