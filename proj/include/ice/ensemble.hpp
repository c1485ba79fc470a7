#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ice/error.hpp"

namespace ice {

/// A set of c base partitions over the same N samples. Partition t is a
/// categorical variable whose labels lie in [0, alphabet_size(t)), with the
/// alphabet sized to the largest label actually present. Immutable.
class Ensemble {
public:
    explicit Ensemble(std::vector<std::vector<std::int32_t>> partitions)
        : partitions_(std::move(partitions)) {
        detail::require_input(!partitions_.empty(), "ensemble must contain at least one partition");
        const std::size_t n = partitions_.front().size();
        detail::require_input(n > 0, "ensemble partitions must be nonempty");
        alphabet_sizes_.reserve(partitions_.size());
        for (const auto& part : partitions_) {
            detail::require_input(part.size() == n,
                                  "ensemble partitions must all have the same length");
            std::int32_t max_label = -1;
            for (auto l : part) {
                detail::require_input(l >= 0, "partition labels must be non-negative");
                max_label = std::max(max_label, l);
            }
            alphabet_sizes_.push_back(max_label + 1);
        }
    }

    std::size_t c() const { return partitions_.size(); }
    std::size_t n() const { return partitions_.front().size(); }

    std::span<const std::int32_t> partition(std::size_t t) const {
        return partitions_[t];
    }

    std::int32_t alphabet_size(std::size_t t) const { return alphabet_sizes_[t]; }
    const std::vector<std::int32_t>& alphabet_sizes() const { return alphabet_sizes_; }

private:
    std::vector<std::vector<std::int32_t>> partitions_;
    std::vector<std::int32_t> alphabet_sizes_;
};

} // namespace ice
