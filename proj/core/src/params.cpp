#include "fluxcast/params.hpp"

namespace fluxcast::num {

Matrix& ParamSet::operator[](const std::string& name) {
    for (auto& [n, m] : items_)
        if (n == name) return m;
    throw Error("unknown parameter '" + name + "'");
}

const Matrix& ParamSet::operator[](const std::string& name) const {
    for (const auto& [n, m] : items_)
        if (n == name) return m;
    throw Error("unknown parameter '" + name + "'");
}

bool ParamSet::same_shapes(const ParamSet& o) const {
    if (items_.size() != o.items_.size()) return false;
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].first != o.items_[i].first) return false;
        if (!items_[i].second.same_shape(o.items_[i].second)) return false;
    }
    return true;
}

bool ParamSet::all_finite() const {
    for (const auto& [_, m] : items_)
        if (!m.all_finite()) return false;
    return true;
}

} // namespace fluxcast::num
