#include "lockstep/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lockstep {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(text) + "'");
    }
    return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(text) + "'");
}

constexpr std::string_view kModelPrefix = "model.";

} // namespace

std::string_view to_string(Instrumentation level) noexcept {
    switch (level) {
    case Instrumentation::none: return "none";
    case Instrumentation::timing: return "timing";
    case Instrumentation::phases: return "phases";
    }
    return "?";
}

Instrumentation parse_instrumentation(std::string_view name) {
    if (name == "none") return Instrumentation::none;
    if (name == "timing") return Instrumentation::timing;
    if (name == "phases") return Instrumentation::phases;
    throw ConfigError("instrumentation must be none, timing or phases, got '" + std::string(name) + "'");
}

std::vector<std::size_t> parse_worker_list(std::string_view text) {
    std::vector<std::size_t> out;
    auto check = [](std::uint64_t w) {
        if (w < 1) {
            throw ConfigError("workers must be ≥ 1");
        }
        return static_cast<std::size_t>(w);
    };
    text = trim(text);
    if (auto dots = text.find(".."); dots != std::string_view::npos) {
        const auto lo = check(parse_u64("workers", trim(text.substr(0, dots))));
        const auto hi = check(parse_u64("workers", trim(text.substr(dots + 2))));
        if (hi < lo) {
            throw ConfigError("workers: empty range '" + std::string(text) + "'");
        }
        for (std::size_t w = lo; w <= hi; ++w) {
            out.push_back(w);
        }
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        out.push_back(check(parse_u64("workers", item)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::string format_worker_list(const std::vector<std::size_t>& workers) {
    std::string out;
    for (std::size_t i = 0; i < workers.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(workers[i]);
    }
    return out;
}

void apply_setting(RunConfig& c, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    const std::string v(value);
    try {
        if (key.starts_with(kModelPrefix)) {
            const auto name = key.substr(kModelPrefix.size());
            if (name.empty()) {
                throw ConfigError("empty model parameter name");
            }
            c.model_params[std::string(name)] = v;
        } else if (key == "model") {
            c.model = v;
        } else if (key == "cycles") {
            c.cycles = parse_u64(key, value);
        } else if (key == "workers") {
            c.workers = parse_worker_list(value);
        } else if (key == "backend") {
            c.backend = parse_backend(value);
        } else if (key == "partition") {
            c.partition = parse_partition_policy(value);
        } else if (key == "partition_seed") {
            c.partition_seed = parse_u64(key, value);
        } else if (key == "seed") {
            c.seed = parse_u64(key, value);
        } else if (key == "pin") {
            c.pin = parse_bool(key, value);
        } else if (key == "spin") {
            if (value == "auto") {
                c.spin.reset();
            } else {
                const auto n = parse_u64(key, value);
                if (n > UINT32_MAX) throw ConfigError("spin: value too large");
                c.spin = static_cast<std::uint32_t>(n);
            }
        } else if (key == "stats") {
            c.stats_path = v;
        } else if (key == "trace") {
            c.trace_path = v;
        } else if (key == "json") {
            c.json_path = v;
        } else if (key == "instrumentation") {
            c.instrumentation = parse_instrumentation(value);
        } else if (key == "check_serial") {
            c.check_serial = parse_bool(key, value);
        } else {
            throw ConfigError("unknown key '" + std::string(key) + "'");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

std::string serialize(const RunConfig& c) {
    std::ostringstream out;
    out << "model=" << c.model << '\n';
    for (const auto& [k, v] : c.model_params) {
        out << kModelPrefix << k << '=' << v << '\n';
    }
    out << "cycles=" << c.cycles << '\n'
        << "workers=" << format_worker_list(c.workers) << '\n'
        << "backend=" << to_string(c.backend) << '\n'
        << "partition=" << to_string(c.partition) << '\n'
        << "partition_seed=" << c.partition_seed << '\n'
        << "seed=" << c.seed << '\n'
        << "pin=" << (c.pin ? "true" : "false") << '\n'
        << "spin=" << (c.spin ? std::to_string(*c.spin) : std::string("auto")) << '\n'
        << "stats=" << c.stats_path << '\n'
        << "trace=" << c.trace_path << '\n'
        << "json=" << c.json_path << '\n'
        << "instrumentation=" << to_string(c.instrumentation) << '\n'
        << "check_serial=" << (c.check_serial ? "true" : "false") << '\n';
    return out.str();
}

RunConfig parse_config(std::istream& in, RunConfig c) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(number) + ": expected key=value");
        }
        try {
            apply_setting(c, text.substr(0, eq), text.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(number) + ": " + e.what());
        }
    }
    return c;
}

RunConfig parse_config_string(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    return parse_config(in, std::move(base));
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    return parse_config(in);
}

void save_config(const RunConfig& config, const std::string& path) {
    std::ofstream out(path);
    out << serialize(config);
    if (!out) {
        throw std::runtime_error("cannot write config file '" + path + "'");
    }
}

RunOptions run_options(const RunConfig& c) {
    RunOptions o;
    o.backend = c.backend;
    if (c.spin) {
        o.spin = SpinPolicy{*c.spin};
    }
    o.trace = c.instrumentation != Instrumentation::none || !c.trace_path.empty();
    o.timing = c.instrumentation != Instrumentation::none;
    o.phase_log = c.instrumentation == Instrumentation::phases;
    o.pin_threads = c.pin;
    return o;
}

} // namespace lockstep
