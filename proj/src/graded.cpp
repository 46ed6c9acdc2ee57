#include "qp/graded.hpp"

namespace qp {

SpacePtr scalar_space() {
    static const SpacePtr s = std::make_shared<GradedSpace>(
        std::vector<std::string>{"1"}, std::vector<int>{0}, std::vector<int>{0});
    return s;
}

} // namespace qp
