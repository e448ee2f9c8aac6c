#include "lockstep/models/noop.hpp"

#include <string>

namespace lockstep::models {

Model build_noop(std::size_t units) {
    if (units == 0) {
        throw ModelError("noop: units must be >= 1");
    }
    Model model;
    for (std::size_t i = 0; i < units; ++i) {
        model.emplace_unit<NoopUnit>("noop" + std::to_string(i));
    }
    model.validate();
    return model;
}

} // namespace lockstep::models
