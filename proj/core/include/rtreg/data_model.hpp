#pragma once

#include <vector>

#include "rtreg/types.hpp"

namespace rtreg {

/// Centers each design column to mean zero and/or rescales it to Euclidean
/// norm sqrt(n). The response is never touched: corruption coordinates must
/// stay interpretable per observation.
///
/// Throws ZeroVarianceColumn if scaling is requested and a column is
/// constant. Requires n >= 2.
std::pair<LabeledDataset, StandardizationRecord> standardize(
    const LabeledDataset& data, bool center = true, bool scale = true);

/// Standardizes with a transform fitted elsewhere (the pipeline fits one
/// record on the target and applies it to every source so coefficients stay
/// in common column units).
LabeledDataset standardize_with(const LabeledDataset& data,
                                const StandardizationRecord& record);

/// Checks that the target and all sources agree on p and that every dataset
/// is internally consistent; returns the panel dimensions.
PanelSummary validate_panel(const LabeledDataset& target,
                            const std::vector<LabeledDataset>& sources);

}  // namespace rtreg
