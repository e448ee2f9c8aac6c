#include "lockstep/models/registry.hpp"

#include "lockstep/models/datacenter.hpp"
#include "lockstep/models/noop.hpp"
#include "lockstep/models/pipeline.hpp"
#include "lockstep/models/random_model.hpp"
#include "lockstep/models/three_unit.hpp"

#include <algorithm>
#include <charconv>
#include <limits>

namespace lockstep::models {

namespace {

/// Reads typed values out of a ParamMap and rejects leftovers.
class ParamReader {
public:
    ParamReader(std::string model, const ParamMap& params) : model_(std::move(model)), params_(params) {}

    template <class T>
    void read(const std::string& key, T& out) {
        seen_.push_back(key);
        auto it = params_.find(key);
        if (it == params_.end()) {
            return;
        }
        const std::string& text = it->second;
        if constexpr (std::is_same_v<T, bool>) {
            if (text == "1" || text == "true") {
                out = true;
            } else if (text == "0" || text == "false") {
                out = false;
            } else {
                bad(key, text);
            }
        } else {
            std::uint64_t v = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty() ||
                v > std::numeric_limits<T>::max()) {
                bad(key, text);
            }
            out = static_cast<T>(v);
        }
    }

    void mark(const std::string& key) { seen_.push_back(key); }

    void finish() const {
        for (const auto& [key, value] : params_) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                throw ModelError(model_ + ": unknown parameter '" + key + "'");
            }
        }
    }

private:
    [[noreturn]] void bad(const std::string& key, const std::string& text) const {
        throw ModelError(model_ + ": invalid value '" + text + "' for parameter '" + key + "'");
    }

    std::string model_;
    const ParamMap& params_;
    std::vector<std::string> seen_;
};

DependencyMode parse_dependencies(const std::string& text) {
    if (text == "none") return DependencyMode::none;
    if (text == "serial") return DependencyMode::serial;
    if (text == "random") return DependencyMode::random;
    throw ModelError("pipeline: dependencies must be none, serial or random, got '" + text + "'");
}

std::string to_string(DependencyMode m) {
    switch (m) {
    case DependencyMode::none: return "none";
    case DependencyMode::serial: return "serial";
    case DependencyMode::random: return "random";
    }
    return "?";
}

template <class Built>
class Holder final : public ModelInstance {
public:
    using SummaryFn = std::vector<std::pair<std::string, std::string>> (*)(const Built&);
    Holder(Built built, SummaryFn fn) : built_(std::move(built)), fn_(fn) {}
    Model& model() override {
        if constexpr (std::is_same_v<Built, Model>) {
            return built_;
        } else {
            return built_.model;
        }
    }
    std::vector<std::pair<std::string, std::string>> summary() const override { return fn_(built_); }

private:
    Built built_;
    SummaryFn fn_;
};

using Summary = std::vector<std::pair<std::string, std::string>>;

std::string str(std::uint64_t v) { return std::to_string(v); }

ParamMap pipeline_defaults() {
    const PipelineParams p;
    return {{"exec_units", str(p.exec_units)},
            {"window", str(p.window)},
            {"exec_latency", str(p.exec_latency)},
            {"dependencies", to_string(p.dependencies)},
            {"dependency_permille", str(p.dependency_permille)},
            {"blocking_permille", str(p.blocking_permille)},
            {"stall_cycles", str(p.stall_cycles)},
            {"registers", str(p.registers)},
            {"instructions", str(p.instructions)}};
}

ParamMap datacenter_defaults() {
    const DatacenterParams p;
    return {{"nodes", str(p.nodes)},
            {"leaves", str(p.leaves)},
            {"spines", str(p.spines)},
            {"radix", str(p.radix)},
            {"buffer_depth", str(p.buffer_depth)},
            {"latency", str(p.latency)},
            {"packets", str(p.packets)},
            {"work_inflation", str(p.work_inflation)}};
}

ParamMap random_defaults() {
    const RandomModelParams p;
    return {{"max_units", str(p.max_units)},
            {"max_outputs", str(p.max_outputs)},
            {"max_capacity", str(p.max_capacity)},
            {"max_delay", str(p.max_delay)},
            {"emit_permille_max", str(p.emit_permille_max)},
            {"external_permille", str(p.external_permille)},
            {"fault", "false"}};
}

} // namespace

const std::vector<ModelInfo>& list_models() {
    static const std::vector<ModelInfo> models{
        {"three-unit", "unit A fans a stimulus out to B and C, which emit on external outputs", {}},
        {"pipeline", "front-end, dispatch with explicit back-pressure, exec units, writeback", pipeline_defaults()},
        {"datacenter", "two-level leaf/spine packet network with uniform random traffic", datacenter_defaults()},
        {"noop", "units with empty work steps, for barrier benchmarks", {{"units", "1"}}},
        {"random", "seeded random wiring and behaviour, for equivalence checks", random_defaults()},
    };
    return models;
}

std::unique_ptr<ModelInstance> build_model(const std::string& name, const ParamMap& params, std::uint64_t seed) {
    ParamReader r(name, params);
    if (name == "three-unit") {
        r.finish();
        return std::make_unique<Holder<ThreeUnitModel>>(build_three_unit(seed),
                                                        [](const ThreeUnitModel& m) -> Summary {
                                                            const MessageTotals t = m.model.totals();
                                                            return {{"injected", str(t.units.injects)},
                                                                    {"ejected", str(t.units.ejects)}};
                                                        });
    }
    if (name == "pipeline") {
        PipelineParams p;
        r.read("exec_units", p.exec_units);
        r.read("window", p.window);
        r.read("exec_latency", p.exec_latency);
        if (auto it = params.find("dependencies"); it != params.end()) {
            p.dependencies = parse_dependencies(it->second);
        }
        r.mark("dependencies");
        r.read("dependency_permille", p.dependency_permille);
        r.read("blocking_permille", p.blocking_permille);
        r.read("stall_cycles", p.stall_cycles);
        r.read("registers", p.registers);
        r.read("instructions", p.instructions);
        r.finish();
        return std::make_unique<Holder<PipelineModel>>(build_pipeline(p, seed), [](const PipelineModel& m) -> Summary {
            return {{"fetched", str(m.front_end->fetched())},
                    {"issued", str(m.dispatch->issued())},
                    {"committed", str(m.committed())}};
        });
    }
    if (name == "datacenter") {
        DatacenterParams p;
        r.read("nodes", p.nodes);
        r.read("leaves", p.leaves);
        r.read("spines", p.spines);
        r.read("radix", p.radix);
        r.read("buffer_depth", p.buffer_depth);
        r.read("latency", p.latency);
        r.read("packets", p.packets);
        r.read("work_inflation", p.work_inflation);
        r.finish();
        return std::make_unique<Holder<DatacenterModel>>(
            build_datacenter(p, seed), [](const DatacenterModel& m) -> Summary {
                std::uint64_t latency_sum = 0;
                Cycle latency_max = 0;
                for (const auto& [latency, count] : m.latency_histogram()) {
                    latency_sum += latency * count;
                    latency_max = latency;
                }
                const std::uint64_t delivered = m.delivered();
                return {{"injected", str(m.injected())},
                        {"delivered", str(delivered)},
                        {"latency_mean", delivered == 0 ? "0" : std::to_string(double(latency_sum) / double(delivered))},
                        {"latency_max", str(latency_max)}};
            });
    }
    if (name == "noop") {
        std::size_t units = 1;
        r.read("units", units);
        r.finish();
        return std::make_unique<Holder<Model>>(build_noop(units), [](const Model& m) -> Summary {
            return {{"units", str(m.unit_count())}};
        });
    }
    if (name == "random") {
        RandomModelParams p;
        r.read("max_units", p.max_units);
        r.read("max_outputs", p.max_outputs);
        r.read("max_capacity", p.max_capacity);
        r.read("max_delay", p.max_delay);
        r.read("emit_permille_max", p.emit_permille_max);
        r.read("external_permille", p.external_permille);
        r.read("fault", p.inject_fault);
        r.finish();
        return std::make_unique<Holder<RandomModel>>(build_random_model(p, seed), [](const RandomModel& m) -> Summary {
            const MessageTotals t = m.model.totals();
            return {{"units", str(m.model.unit_count())}, {"submits", str(t.units.submits)}, {"polls", str(t.units.polls)}};
        });
    }
    throw ModelError("unknown model '" + name + "'");
}

} // namespace lockstep::models
