#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fluxcast/matrix.hpp"

namespace fluxcast::num {

// Ordered, named collection of parameter matrices. Order is the flattening
// contract shared by the optimizer, gradient checker, and persistence.
class ParamSet {
public:
    void add(std::string name, Matrix value) {
        items_.emplace_back(std::move(name), std::move(value));
    }

    std::size_t count() const { return items_.size(); }

    const std::string& name(std::size_t i) const { return items_[i].first; }
    Matrix& value(std::size_t i) { return items_[i].second; }
    const Matrix& value(std::size_t i) const { return items_[i].second; }

    Matrix& operator[](const std::string& name);
    const Matrix& operator[](const std::string& name) const;

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& [_, m] : items_) n += m.size();
        return n;
    }

    bool same_shapes(const ParamSet& o) const;
    bool all_finite() const;

    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::vector<std::pair<std::string, Matrix>> items_;
};

} // namespace fluxcast::num
