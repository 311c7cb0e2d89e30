#pragma once

#include <string>
#include <vector>

#include "gcfed/tensor.hpp"

namespace gcfed {

/// Which axes the mean is taken over. Names follow the shape of the resulting
/// mean tensor for a conv weight [C_out, C_in, K_w, K_h].
enum class AxisMode {
    OutChannel,   ///< [C_out,1,1,1]: reduce everything but the output axis (default)
    OutIn,        ///< [C_out,C_in,1,1]: reduce kernel axes
    OutKernel,    ///< [C_out,1,K_w,K_h]: reduce C_in
    OutInKh,      ///< [C_out,C_in,1,K_h]: reduce K_w
    InKernel,     ///< [1,C_in,K_w,K_h]: reduce C_out
};

std::string to_string(AxisMode mode);
AxisMode parse_axis_mode(const std::string& name);

struct ProjectionSpec {
    AxisMode axis_mode = AxisMode::OutChannel;
};

/// Thrown for tensors GC is not defined on (rank < 2).
class NotCentralizable : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Axes averaged over for a tensor of the given rank. FC tensors only support
/// OutChannel and InKernel; the other modes fall back to OutChannel.
std::vector<std::size_t> reduced_axes(std::size_t rank, AxisMode mode);

/// Product of the reduced dimensions (the m in G ∈ R^{m×n}).
std::size_t reduction_length(const Shape& shape, AxisMode mode);

/// True when centralization applies: rank >= 2 and reduction length >= 2.
bool is_centralizable(const Tensor& g, const ProjectionSpec& spec = {});

/// Mean over the reduced axes; result keeps G's rank with reduced axes set to 1.
Tensor mu_vector(const Tensor& g, const ProjectionSpec& spec = {});

/// G - broadcast(mu).
Tensor centralize_mean_sub(const Tensor& g, const ProjectionSpec& spec = {});

/// (I - e e^T) G with e = 1_m / sqrt(m), with the projector built explicitly.
Tensor centralize_project(const Tensor& g, const ProjectionSpec& spec = {});

/// Production path: mean subtraction when centralizable, otherwise G unchanged.
/// Reduction length 1 is skipped with a one-time warning on stderr.
Tensor centralize(const Tensor& g, const ProjectionSpec& spec = {});
void centralize_in_place(Tensor& g, const ProjectionSpec& spec = {});

/// e^T G: per kept index, (1/sqrt(m)) * sum over the reduced axes. Flattened.
std::vector<double> e_transpose(const Tensor& g, const ProjectionSpec& spec = {});

/// 0-based indices of the weight-bearing layers that receive local GC:
/// the first floor(lambda * L) layers in forward order.
std::vector<std::size_t> select_local_layers(std::size_t layer_count, double lambda);

}  // namespace gcfed
