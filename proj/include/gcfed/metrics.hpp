#pragma once

#include <span>
#include <vector>

#include "gcfed/nn.hpp"

namespace gcfed {

/// Percent of samples whose argmax logit equals the label; ties go to the lowest class index.
double top1_accuracy(const ModelParams& model, const Dataset& test);

/// ||partial - truth|| / (||truth|| + 1e-12) over all parameter groups.
double update_discrepancy(const ParamGroups& truth, const ParamGroups& partial);

/// 1 - cos(partial, truth); 1 when either side is the zero vector.
double cosine_discrepancy(const ParamGroups& truth, const ParamGroups& partial);

/// Linear CKA between two activation matrices [samples x features] with equal row
/// counts. Columns are centered internally. Zero-variance input yields 0.
double linear_cka(const Tensor& x, const Tensor& y);

struct FirstOrderStats {
    double mean = 0.0;
    double std = 0.0;  // population
    double min = 0.0;
};

/// Statistics of a[t+1] - a[t] over the raw series (length >= 2).
FirstOrderStats first_order_stats(std::span<const double> series);

/// Trailing mean over min(window, t+1) points.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

}  // namespace gcfed
