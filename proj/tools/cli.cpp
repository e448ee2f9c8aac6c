#include "cli.hpp"

#include "lockstep/config.hpp"
#include "lockstep/executor.hpp"
#include "lockstep/models/noop.hpp"
#include "lockstep/models/random_model.hpp"
#include "lockstep/models/registry.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace lockstep::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double ms(std::chrono::nanoseconds d) { return static_cast<double>(d.count()) / 1e6; }

std::string fixed(double v, int digits = 3) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::size_t host_contexts() { return std::max(1u, std::thread::hardware_concurrency()); }

/// SIM_THREADS_CAP, if set.
std::optional<std::size_t> threads_cap() {
    const char* raw = std::getenv("SIM_THREADS_CAP");
    if (raw == nullptr || *raw == '\0') {
        return std::nullopt;
    }
    try {
        const auto list = parse_worker_list(raw);
        if (list.size() != 1) {
            throw ConfigError("expected a single number");
        }
        return list.front();
    } catch (const ConfigError& e) {
        throw UsageError(std::string("SIM_THREADS_CAP: ") + e.what());
    }
}

std::size_t capped(std::size_t workers, const std::optional<std::size_t>& cap, std::ostream& err) {
    if (cap && workers > *cap) {
        err << "warning: workers " << workers << " capped to " << *cap << " by SIM_THREADS_CAP\n";
        return *cap;
    }
    return workers;
}

/// "out/trace.csv.gz" -> "out/trace.w4.csv.gz"
std::string per_worker_path(const std::string& path, std::size_t workers) {
    const auto slash = path.find_last_of('/');
    const auto base = slash == std::string::npos ? 0 : slash + 1;
    const auto dot = path.find('.', base);
    const std::string tag = ".w" + std::to_string(workers);
    return dot == std::string::npos ? path + tag : path.substr(0, dot) + tag + path.substr(dot);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
    if (!f) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
}

// ---------------------------------------------------------------- run

struct RunRow {
    std::size_t workers = 0;
    RunReport report;
    std::vector<std::pair<std::string, std::string>> summary;
};

std::string stats_row(const RunConfig& c, const RunRow& row) {
    const RunReport& r = row.report;
    std::ostringstream s;
    s << c.model << ',' << r.cycles << ',' << r.workers << ',' << to_string(r.backend) << ','
      << to_string(c.partition) << ',' << c.seed << ',' << fixed(ms(r.metrics.wall)) << ',' << fixed(r.sim_khz())
      << ',' << fixed(ms(r.metrics.max_work())) << ',' << fixed(ms(r.metrics.max_transfer())) << ','
      << fixed(ms(r.metrics.max_barrier())) << ',' << r.messages.units.moved + r.messages.units.injects << ','
      << r.messages.units.held << ',' << (r.trace_hash ? hex(*r.trace_hash) : std::string()) << '\n';
    return s.str();
}

nlohmann::json report_json(const RunRow& row) {
    const RunReport& r = row.report;
    nlohmann::json j;
    j["workers"] = r.workers;
    j["backend"] = std::string(to_string(r.backend));
    j["start_cycle"] = r.start_cycle;
    j["cycles"] = r.cycles;
    j["wall_ms"] = ms(r.metrics.wall);
    j["sim_khz"] = r.sim_khz();
    j["trace_hash"] = r.trace_hash ? nlohmann::json(hex(*r.trace_hash)) : nlohmann::json();
    j["trace_events"] = r.trace_events;
    j["messages"] = {{"submits", r.messages.units.submits},  {"polls", r.messages.units.polls},
                     {"moved", r.messages.units.moved},      {"held", r.messages.units.held},
                     {"injects", r.messages.units.injects},  {"ejects", r.messages.units.ejects},
                     {"pending", r.messages.pending_outputs}, {"queued", r.messages.queued_inputs}};
    j["sync"] = {{"locks", r.sync.locks},
                 {"unlocks", r.sync.unlocks},
                 {"waits", r.sync.waits},
                 {"lock_alls", r.sync.lock_alls},
                 {"unlock_alls", r.sync.unlock_alls},
                 {"wait_alls", r.sync.wait_alls},
                 {"generation_bumps", r.sync.generation_bumps},
                 {"countdown_reloads", r.sync.countdown_reloads}};
    auto& per_worker = j["per_worker"] = nlohmann::json::array();
    for (const WorkerMetrics& w : r.metrics.workers) {
        per_worker.push_back({{"work_ms", ms(w.timing.work())},
                              {"transfer_ms", ms(w.timing.transfer())},
                              {"barrier_ms", ms(w.timing.barrier())}});
    }
    auto& summary = j["summary"] = nlohmann::json::object();
    for (const auto& [k, v] : row.summary) {
        summary[k] = v;
    }
    if (r.error) {
        j["error"] = r.error->message;
    }
    return j;
}

int cmd_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (c.partition == PartitionPolicy::explicit_lists) {
        throw UsageError("partition: explicit cluster lists are only available through the library API");
    }
    const auto cap = threads_cap();
    const bool sweep = c.workers.size() > 1;
    const RunOptions base = run_options(c);

    std::optional<std::uint64_t> serial_hash;
    if (c.check_serial) {
        auto inst = models::build_model(c.model, c.model_params, c.seed);
        RunOptions o = base;
        o.trace = true;
        const RunReport r = serial_run(inst->model(), c.cycles, o);
        if (!r.ok()) {
            err << "error: serial reference run aborted: " << r.error->message << '\n';
            return kFailure;
        }
        serial_hash = r.trace_hash;
    }

    std::vector<RunRow> rows;
    bool aborted = false;
    for (std::size_t requested : c.workers) {
        const std::size_t w = capped(requested, cap, err);
        auto inst = models::build_model(c.model, c.model_params, c.seed);
        Partition partition = partition_units(inst->model(), w, c.partition, c.partition_seed);
        for (const auto& warning : partition.warnings) {
            err << "warning: " << warning << '\n';
        }
        RunOptions o = base;
        std::unique_ptr<TraceFileWriter> writer;
        if (!c.trace_path.empty()) {
            writer = std::make_unique<TraceFileWriter>(sweep ? per_worker_path(c.trace_path, w) : c.trace_path);
            o.trace_sinks.push_back(writer.get());
        }
        ParallelExecutor executor(inst->model(), std::move(partition), o);
        RunRow row{w, executor.run(c.cycles), inst->summary()};
        rows.push_back(std::move(row));
        if (!rows.back().report.ok()) {
            const RunError& e = *rows.back().report.error;
            err << "error: run aborted at cycle " << e.cycle << ": " << e.message << '\n';
            aborted = true;
            break;
        }
    }

    std::string csv = std::string(kStatsHeader) + '\n';
    for (const RunRow& row : rows) {
        csv += stats_row(c, row);
    }
    if (c.stats_path.empty()) {
        out << csv;
    } else {
        write_text(c.stats_path, csv);
    }
    for (const auto& [k, v] : rows.back().summary) {
        err << k << '=' << v << ' ';
    }
    err << '\n';

    bool mismatch = false;
    if (c.instrumentation != Instrumentation::none && !aborted) {
        const auto reference = serial_hash ? serial_hash : rows.front().report.trace_hash;
        for (const RunRow& row : rows) {
            if (row.report.trace_hash != reference) {
                err << "error: trace hash " << hex(row.report.trace_hash.value_or(0)) << " at workers=" << row.workers
                    << " differs from " << (serial_hash ? "the serial run" : "the first run") << " ("
                    << hex(reference.value_or(0)) << ")\n";
                mismatch = true;
            }
        }
        if (serial_hash && !mismatch) {
            err << "serial check: trace hash " << hex(*serial_hash) << " matches\n";
        }
    }
    if (sweep && rows.size() > 1) {
        bool monotone = true;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            monotone = monotone && rows[i].report.metrics.wall <= rows[i - 1].report.metrics.wall;
        }
        err << "wall_ms non-increasing across sweep: " << (monotone ? "yes" : "no") << " (reported only)\n";
    }

    if (!c.json_path.empty()) {
        nlohmann::json j;
        auto& cfg = j["config"] = nlohmann::json::object();
        std::istringstream lines(serialize(c));
        for (std::string line; std::getline(lines, line);) {
            const auto eq = line.find('=');
            cfg[line.substr(0, eq)] = line.substr(eq + 1);
        }
        j["serial_trace_hash"] = serial_hash ? nlohmann::json(hex(*serial_hash)) : nlohmann::json();
        auto& runs = j["runs"] = nlohmann::json::array();
        for (const RunRow& row : rows) {
            runs.push_back(report_json(row));
        }
        write_text(c.json_path, j.dump(2) + '\n');
    }
    return aborted || mismatch ? kFailure : kOk;
}

// ---------------------------------------------------------------- bench-barrier

struct BenchArgs {
    std::string backends = "mutex,spinlock,atomic,common-atomic";
    std::string workers;
    double duration = 1.0;
    std::size_t units = 0;
    std::string spin = "auto";
    std::string out_path;
};

std::vector<Backend> parse_backend_list(const std::string& text) {
    std::vector<Backend> out;
    std::stringstream s(text);
    for (std::string item; std::getline(s, item, ',');) {
        try {
            out.push_back(parse_backend(item));
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("backends: ") + e.what());
        }
    }
    if (out.empty()) {
        throw UsageError("backends: empty list");
    }
    return out;
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
    const auto backends = parse_backend_list(a.backends);
    const std::size_t host = host_contexts();
    std::vector<std::size_t> workers;
    try {
        workers = parse_worker_list(a.workers.empty() ? "1.." + std::to_string(std::max<std::size_t>(2, host))
                                                      : a.workers);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    if (!(a.duration > 0)) {
        throw UsageError("duration must be > 0");
    }
    if (a.duration < 1.0) {
        err << "note: durations below 1 s per point give noisy rates\n";
    }
    RunConfig spin_cfg;
    try {
        apply_setting(spin_cfg, "spin", a.spin);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const auto cap = threads_cap();
    const auto budget = std::chrono::nanoseconds(static_cast<std::int64_t>(a.duration * 1e9));

    std::string csv = std::string(kBenchHeader) + '\n';
    std::map<Backend, std::map<std::size_t, double>> rates;
    for (Backend backend : backends) {
        for (std::size_t requested : workers) {
            const std::size_t w = capped(requested, cap, err);
            Model model = models::build_noop(std::max(a.units, w));
            Partition partition = partition_units(model, w, PartitionPolicy::round_robin);
            RunOptions o;
            o.backend = backend;
            if (spin_cfg.spin) {
                o.spin = SpinPolicy{*spin_cfg.spin};
            }
            o.trace = false;
            o.timing = false;
            o.check_agreement = false;
            ParallelExecutor executor(model, std::move(partition), o);
            const RunReport r = executor.run_for(budget);
            const double pps = r.metrics.barrier_rate().phases_per_sec();
            const bool over = w + 1 > host;
            rates[backend][w] = pps;
            csv += std::string(to_string(backend)) + ',' + std::to_string(w) + ',' + fixed(pps, 1) + ',' +
                   (over ? "1" : "0") + '\n';
        }
    }
    if (a.out_path.empty()) {
        out << csv;
    } else {
        write_text(a.out_path, csv);
    }
    for (const auto& [backend, by_w] : rates) {
        const auto low = by_w.contains(2) ? by_w.find(2) : by_w.begin();
        const auto high = std::prev(by_w.end());
        err << "degradation " << to_string(backend) << ": phases/sec(W=" << low->first << ") / phases/sec(W="
            << high->first << ") = " << (high->second > 0 ? fixed(low->second / high->second, 2) : "inf") << '\n';
    }
    return kOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::size_t models = 50;
    std::uint32_t max_units = 64;
    std::uint64_t cycles = 200;
    std::string workers = "1,2,4,8";
    std::size_t partitions = 5;
    std::uint64_t seed = 0;
    std::string backend = "common-atomic";
    bool inject_fault = false;
    std::string single_case;
    bool quiet = false;
};

struct VerifyCase {
    std::uint64_t model_seed;
    std::size_t workers;
    std::uint64_t partition_seed;
    std::size_t units = 0;
};

models::RandomModel make_random(const VerifyArgs& a, std::uint64_t seed) {
    models::RandomModelParams p;
    p.max_units = a.max_units;
    p.inject_fault = a.inject_fault;
    return models::build_random_model(p, seed);
}

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
    Backend backend;
    std::vector<std::size_t> workers;
    try {
        backend = parse_backend(a.backend);
        workers = parse_worker_list(a.workers);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a.max_units < 1) {
        throw UsageError("max-units must be >= 1");
    }
    const auto cap = threads_cap();

    std::vector<VerifyCase> cases;
    if (!a.single_case.empty()) {
        unsigned long long s = 0, p = 0;
        std::size_t w = 0;
        if (std::sscanf(a.single_case.c_str(), "%llu:%zu:%llu", &s, &w, &p) != 3 || w == 0) {
            throw UsageError("case must be MODEL_SEED:WORKERS:PARTITION_SEED");
        }
        cases.push_back({s, w, p});
    } else {
        for (std::size_t i = 0; i < a.models; ++i) {
            const std::uint64_t model_seed = stream_seed(a.seed, i);
            for (std::size_t w : workers) {
                for (std::size_t p = 0; p < a.partitions; ++p) {
                    cases.push_back({model_seed, w, stream_seed(stream_seed(model_seed, w), p)});
                }
            }
        }
    }

    RunOptions o;
    o.backend = backend;
    o.timing = false;
    std::map<std::uint64_t, std::uint64_t> serial_hashes;
    std::vector<VerifyCase> failures;
    for (VerifyCase& vc : cases) {
        if (!serial_hashes.contains(vc.model_seed)) {
            auto rm = make_random(a, vc.model_seed);
            const RunReport r = serial_run(rm.model, a.cycles, o);
            serial_hashes[vc.model_seed] = r.trace_hash.value_or(0);
        }
        auto rm = make_random(a, vc.model_seed);
        vc.units = rm.model.unit_count();
        const std::size_t w = capped(vc.workers, cap, err);
        Partition partition = partition_units(rm.model, w, PartitionPolicy::random, vc.partition_seed);
        ParallelExecutor executor(rm.model, std::move(partition), o);
        const RunReport r = executor.run(a.cycles);
        const std::uint64_t serial = serial_hashes[vc.model_seed];
        const bool ok = r.ok() && r.trace_hash == serial;
        if (!ok) {
            failures.push_back(vc);
        }
        if (!a.quiet || !ok) {
            out << "case model_seed=" << vc.model_seed << " units=" << vc.units << " workers=" << vc.workers
                << " partition_seed=" << vc.partition_seed << " serial=" << hex(serial)
                << " parallel=" << (r.trace_hash ? hex(*r.trace_hash) : std::string("none"))
                << (ok ? " ok" : " MISMATCH") << (r.ok() ? "" : " (" + r.error->message + ")") << '\n';
        }
    }

    const std::size_t equal = cases.size() - failures.size();
    out << "verify: " << equal << '/' << cases.size() << " comparisons equal across " << serial_hashes.size()
        << " models\n";
    if (failures.empty()) {
        out << "verdict: PASS\n";
        return kOk;
    }
    const auto minimal = std::min_element(failures.begin(), failures.end(), [](const auto& x, const auto& y) {
        return std::tie(x.units, x.workers) < std::tie(y.units, y.workers);
    });
    out << "verdict: FAIL\n"
        << "minimal failing case: model_seed=" << minimal->model_seed << " workers=" << minimal->workers
        << " partition_seed=" << minimal->partition_seed << " (reproduce with --case " << minimal->model_seed << ':'
        << minimal->workers << ':' << minimal->partition_seed << (a.inject_fault ? " --inject-fault" : "")
        << " --max-units " << a.max_units << " --cycles " << a.cycles << ")\n";
    return kFailure;
}

// ---------------------------------------------------------------- list-models

int cmd_list(std::ostream& out) {
    for (const auto& info : models::list_models()) {
        out << info.name << "\t" << info.description << '\n';
        for (const auto& [k, v] : info.defaults) {
            out << "    model." << k << '=' << v << '\n';
        }
    }
    return kOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cycle-level lockstep simulator: run models, benchmark barriers, check serial equivalence"};
    app.name(args.empty() ? "lockstep" : args.front());
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a model once per worker count and write a stats CSV");
    std::string config_path, save_path;
    std::vector<std::string> params;
    bool pin = false, check_serial = false;
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> settings;
    auto setting = [&](const std::string& flag, const std::string& key, const std::string& help) {
        settings.emplace_back(key, run->add_option(flag, values[key], help));
    };
    run->add_option("--config", config_path, "key=value config file; flags override it");
    setting("--model", "model", "model name (see list-models)");
    run->add_option("-p,--param", params, "model parameter NAME=VALUE (repeatable)");
    setting("--cycles", "cycles", "cycles to simulate");
    setting("--workers", "workers", "worker count, list (1,2,4) or range (1..8)");
    setting("--backend", "backend", "mutex | spinlock | atomic | common-atomic");
    setting("--partition", "partition", "round-robin | random");
    setting("--partition-seed", "partition_seed", "seed of the random partition");
    setting("--seed", "seed", "global model seed");
    setting("--spin", "spin", "spins before yielding, or auto");
    setting("--stats", "stats", "stats CSV path (default: stdout)");
    setting("--trace", "trace", "canonical trace output; gzip when the path ends in .gz");
    setting("--json", "json", "JSON report path");
    setting("--instrumentation", "instrumentation", "none | timing | phases");
    run->add_flag("--pin", pin, "pin worker threads to cores");
    run->add_flag("--check-serial", check_serial, "also run the serial reference and compare trace hashes");
    run->add_option("--save-config", save_path, "write the effective config to this path");

    // bench-barrier
    BenchArgs bench;
    auto* bb = app.add_subcommand("bench-barrier", "Measure barrier phases per second on the noop model");
    bb->add_option("--backends", bench.backends, "comma-separated backends")->capture_default_str();
    bb->add_option("--workers", bench.workers, "worker list or range (default 1..max(2, host contexts))");
    bb->add_option("--duration", bench.duration, "seconds per point")->capture_default_str();
    bb->add_option("--units", bench.units, "noop units (default: one per worker)");
    bb->add_option("--spin", bench.spin, "spins before yielding, or auto")->capture_default_str();
    bb->add_option("--out", bench.out_path, "CSV path (default: stdout)");

    // verify
    VerifyArgs verify;
    auto* vf = app.add_subcommand("verify", "Compare parallel against serial trace hashes on random models");
    vf->add_option("--models", verify.models, "random models")->capture_default_str();
    vf->add_option("--max-units", verify.max_units, "upper bound on units per model")->capture_default_str();
    vf->add_option("--cycles", verify.cycles, "cycles per run")->capture_default_str();
    vf->add_option("--workers", verify.workers, "worker counts")->capture_default_str();
    vf->add_option("--partitions", verify.partitions, "random partitions per (model, workers)")
        ->capture_default_str();
    vf->add_option("--seed", verify.seed, "seed of the model generator")->capture_default_str();
    vf->add_option("--backend", verify.backend, "sync backend")->capture_default_str();
    vf->add_flag("--inject-fault", verify.inject_fault, "build models with a unit that reads foreign state");
    vf->add_option("--case", verify.single_case, "run one MODEL_SEED:WORKERS:PARTITION_SEED case");
    vf->add_flag("--quiet", verify.quiet, "print mismatching cases only");

    app.add_subcommand("list-models", "List models and their parameters");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*run) {
            RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
            for (const auto& [key, option] : settings) {
                if (option->count() > 0) {
                    apply_setting(c, key, values[key]);
                }
            }
            for (const std::string& p : params) {
                const auto eq = p.find('=');
                if (eq == std::string::npos) {
                    throw ConfigError("--param expects NAME=VALUE, got '" + p + "'");
                }
                std::string key = p.substr(0, eq);
                if (!key.starts_with("model.")) {
                    key = "model." + key;
                }
                apply_setting(c, key, p.substr(eq + 1));
            }
            if (pin) apply_setting(c, "pin", "true");
            if (check_serial) apply_setting(c, "check_serial", "true");
            if (!save_path.empty()) {
                save_config(c, save_path);
            }
            return cmd_run(c, out, err);
        }
        if (*bb) {
            return cmd_bench(bench, out, err);
        }
        if (*vf) {
            return cmd_verify(verify, out, err);
        }
        return cmd_list(out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ModelError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

} // namespace lockstep::cli
