#include "echorec/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "echorec/errors.hpp"

namespace echorec {

void Tensor::check_finite(const char* what) const {
    for (double v : data)
        if (!std::isfinite(v))
            raise(ErrorCode::InvalidConfig, std::string("non-finite value in ") + what);
}

Tensor grid_to_tensor(const std::vector<double>& grid, size_t rows, size_t cols) {
    if (grid.size() != rows * cols)
        raise(ErrorCode::ShapeMismatch, "grid size does not match rows*cols");
    Tensor t({rows, cols, 1});
    std::copy(grid.begin(), grid.end(), t.data.begin());
    return t;
}

}  // namespace echorec
