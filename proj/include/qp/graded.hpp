#pragma once

#include "qp/rational.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace qp {

/// Finite-dimensional graded vector space. Every basis vector carries an
/// integer degree (parity = degree mod 2) and an integer charge; both are
/// fixed at construction.
class GradedSpace {
public:
    GradedSpace(std::vector<std::string> labels, std::vector<int> degrees, std::vector<int> charges)
        : labels_(std::move(labels)), degrees_(std::move(degrees)), charges_(std::move(charges)) {
        if (labels_.empty() || labels_.size() != degrees_.size() || labels_.size() != charges_.size())
            throw std::invalid_argument("GradedSpace: inconsistent basis data");
    }

    int dim() const { return int(labels_.size()); }
    const std::string& label(int i) const { return labels_.at(i); }
    int degree(int i) const { return degrees_.at(i); }
    int charge(int i) const { return charges_.at(i); }
    int parity(int i) const { return ((degrees_.at(i) % 2) + 2) % 2; }

    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<int>& degrees() const { return degrees_; }
    const std::vector<int>& charges() const { return charges_; }

    int min_charge() const {
        int m = charges_[0];
        for (int c : charges_) m = std::min(m, c);
        return m;
    }
    int max_charge() const {
        int m = charges_[0];
        for (int c : charges_) m = std::max(m, c);
        return m;
    }

    bool operator==(const GradedSpace& o) const {
        return labels_ == o.labels_ && degrees_ == o.degrees_ && charges_ == o.charges_;
    }

private:
    std::vector<std::string> labels_;
    std::vector<int> degrees_;
    std::vector<int> charges_;
};

using SpacePtr = std::shared_ptr<const GradedSpace>;

/// The one-dimensional even space of scalars (degree 0, charge 0).
SpacePtr scalar_space();

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
    return a == b || (a && b && *a == *b);
}

} // namespace qp
