#pragma once

#include "lockstep/model.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace lockstep::models {

using ParamMap = std::map<std::string, std::string>;

struct ModelInfo {
    std::string name;
    std::string description;
    ParamMap defaults;
};

/// A built model together with its model-specific result counters.
class ModelInstance {
public:
    virtual ~ModelInstance() = default;
    virtual Model& model() = 0;
    /// Ordered name/value pairs describing the model's outcome so far.
    virtual std::vector<std::pair<std::string, std::string>> summary() const = 0;
};

const std::vector<ModelInfo>& list_models();

/// Builds a registered model. Parameters absent from `params` take their
/// defaults; unknown names or malformed values throw ModelError.
std::unique_ptr<ModelInstance> build_model(const std::string& name, const ParamMap& params, std::uint64_t seed);

} // namespace lockstep::models
