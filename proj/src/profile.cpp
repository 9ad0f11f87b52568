#include "starforge/profile.hpp"

#include <string>

#include "starforge/errors.hpp"

namespace starforge {

TruncationProfile::TruncationProfile(int n, int dx, int dy, int d)
    : hbar_order(n), x_degree(dx), y_degree(dy), dim(d) {
    validate();
}

void TruncationProfile::validate() const {
    if (hbar_order < 0) throw ProfileError("hbar_order must be >= 0");
    if (x_degree < 0) throw ProfileError("x_degree must be >= 0");
    if (y_degree < 0) throw ProfileError("y_degree must be >= 0");
    if (dim < 1) throw ProfileError("dim must be >= 1");
    if (dim > kMaxDim)
        throw ProfileError("dim exceeds engine limit " + std::to_string(kMaxDim));
}

std::string TruncationProfile::str() const {
    return "N=" + std::to_string(hbar_order) + " Dx=" + std::to_string(x_degree) +
           " Dy=" + std::to_string(y_degree) + " dim=" + std::to_string(dim);
}

}  // namespace starforge
