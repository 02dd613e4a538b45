#pragma once

// Command-line front end: run, validate, overlay.
//
//   occrisk run --map synthetic --scenarios 50 --others 5 --seed 7
//   occrisk validate map.json
//   occrisk overlay a/summary.csv b/summary.csv
//
// Exit codes: 0 success, 1 load failure or invalid map, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "occrisk/map_io.hpp"
#include "occrisk/metrics.hpp"
#include "occrisk/report.hpp"
#include "occrisk/simulator.hpp"

namespace occrisk {

/// Everything a `run` needs besides the map source.
struct RunParams {
    EpisodeConfig episode;
    ScenarioOptions scenario;
    FourWayGeometry fourway;
    double a_thresh = 4.0;
    double profile_bin = 0.5;
    // Unset means "follow the vehicle size" (0.5 l_v and 0.75 w_v).
    std::optional<double> sigma, b_bar;

    /// Pushes shared values into every struct that holds a copy.
    void sync() {
        auto& e = episode;
        e.risk.forecast_horizon = e.planner.forecast_horizon;
        e.planner.sigma = sigma.value_or(0.5 * e.vehicle.length);
        e.planner.max_offset = b_bar.value_or(0.75 * e.vehicle.width);
        e.risk.max_offset = e.planner.max_offset;
        scenario.vehicle = e.vehicle;
    }

    void validate() const {
        episode.validate();
        if (!(a_thresh > 0.0)) throw ConfigurationError("a_thresh must be positive");
        if (!(profile_bin > 0.0)) throw ConfigurationError("profile_bin must be positive");
        if (!(scenario.other_v_min >= 0.0 && scenario.other_v_min <= scenario.other_v_max))
            throw ConfigurationError("need 0 <= other_v_min <= other_v_max");
    }
};

struct ParamKey {
    const char* key;
    const char* doc;
    std::function<double(const RunParams&)> get;
    std::function<void(RunParams&, double)> set;
};

inline std::size_t to_count(double x, const char* key) {
    if (!(x >= 1.0) || x != std::floor(x)) throw ConfigurationError(std::string(key) + " must be a positive integer");
    return static_cast<std::size_t>(x);
}

/// The overridable parameters, one key each. The first block is the published parameter set.
inline const std::vector<ParamKey>& param_keys() {
    static const std::vector<ParamKey> keys{
        {"T_f", "forecast horizon, s", [](const RunParams& p) { return p.episode.planner.forecast_horizon; },
         [](RunParams& p, double x) { p.episode.planner.forecast_horizon = x; }},
        {"T_p", "replan period, s", [](const RunParams& p) { return p.episode.replan_period; },
         [](RunParams& p, double x) { p.episode.replan_period = x; }},
        {"l_v", "vehicle length, m", [](const RunParams& p) { return p.episode.vehicle.length; },
         [](RunParams& p, double x) { p.episode.vehicle.length = x; }},
        {"w_v", "vehicle width, m", [](const RunParams& p) { return p.episode.vehicle.width; },
         [](RunParams& p, double x) { p.episode.vehicle.width = x; }},
        {"N", "max particles per lane", [](const RunParams& p) { return double(p.episode.risk.max_particles_per_lane); },
         [](RunParams& p, double x) { p.episode.risk.max_particles_per_lane = to_count(x, "N"); }},
        {"lambda", "speed cost weight", [](const RunParams& p) { return p.episode.planner.lambda; },
         [](RunParams& p, double x) { p.episode.planner.lambda = x; }},
        {"sigma", "potential bandwidth, m", [](const RunParams& p) { return p.episode.planner.sigma; },
         [](RunParams& p, double x) { p.sigma = x; }},
        {"b_bar", "max lateral offset, m", [](const RunParams& p) { return p.episode.planner.max_offset; },
         [](RunParams& p, double x) { p.b_bar = x; }},
        {"v_des", "desired speed, m/s", [](const RunParams& p) { return p.episode.planner.v_des; },
         [](RunParams& p, double x) { p.episode.planner.v_des = x; }},
        {"v_min", "min speed, m/s", [](const RunParams& p) { return p.episode.planner.v_min; },
         [](RunParams& p, double x) { p.episode.planner.v_min = x; }},
        {"v_max", "max speed, m/s", [](const RunParams& p) { return p.episode.planner.v_max; },
         [](RunParams& p, double x) { p.episode.planner.v_max = x; }},
        {"a_min", "min acceleration, m/s^2", [](const RunParams& p) { return p.episode.planner.a_min; },
         [](RunParams& p, double x) { p.episode.planner.a_min = x; }},
        {"a_max", "max acceleration, m/s^2", [](const RunParams& p) { return p.episode.planner.a_max; },
         [](RunParams& p, double x) { p.episode.planner.a_max = x; }},
        {"a_thresh", "discomfort threshold, m/s^2", [](const RunParams& p) { return p.a_thresh; },
         [](RunParams& p, double x) { p.a_thresh = x; }},

        {"density", "particles per 100 m", [](const RunParams& p) { return p.episode.risk.density; },
         [](RunParams& p, double x) { p.episode.risk.density = x; }},
        {"dt", "integration substep, s", [](const RunParams& p) { return p.episode.dt; },
         [](RunParams& p, double x) { p.episode.dt = x; }},
        {"time_limit", "episode time limit, s", [](const RunParams& p) { return p.episode.time_limit; },
         [](RunParams& p, double x) { p.episode.time_limit = x; }},
        {"sensor_range", "sensor range, m", [](const RunParams& p) { return p.episode.sensor.max_range; },
         [](RunParams& p, double x) { p.episode.sensor.max_range = x; }},
        {"other_v_min", "slowest other vehicle, m/s", [](const RunParams& p) { return p.scenario.other_v_min; },
         [](RunParams& p, double x) { p.scenario.other_v_min = x; }},
        {"other_v_max", "fastest other vehicle, m/s", [](const RunParams& p) { return p.scenario.other_v_max; },
         [](RunParams& p, double x) { p.scenario.other_v_max = x; }},
        {"ego_speed", "initial ego speed, m/s", [](const RunParams& p) { return p.scenario.ego_speed; },
         [](RunParams& p, double x) { p.scenario.ego_speed = x; }},
        {"lane_width", "synthetic lane width, m", [](const RunParams& p) { return p.fourway.lane_width; },
         [](RunParams& p, double x) { p.fourway.lane_width = x; }},
        {"arm_length", "synthetic arm length, m", [](const RunParams& p) { return p.fourway.arm_length; },
         [](RunParams& p, double x) { p.fourway.arm_length = x; }},
        {"turn_radius", "synthetic curb radius, m", [](const RunParams& p) { return p.fourway.turn_radius; },
         [](RunParams& p, double x) { p.fourway.turn_radius = x; }},
        {"profile_bin", "profile time bin, s", [](const RunParams& p) { return p.profile_bin; },
         [](RunParams& p, double x) { p.profile_bin = x; }},
    };
    return keys;
}

inline void set_param(RunParams& p, const std::string& key, double value) {
    for (const auto& k : param_keys())
        if (key == k.key) {
            k.set(p, value);
            return;
        }
    throw ConfigurationError("unknown parameter '" + key + "'");
}

inline void apply_assignment(RunParams& p, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigurationError("expected KEY=VALUE, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    double x = 0.0;
    const auto r = std::from_chars(val.data(), val.data() + val.size(), x);
    if (r.ec != std::errc() || r.ptr != val.data() + val.size())
        throw ConfigurationError("bad value for " + key + ": '" + val + "'");
    set_param(p, key, x);
}

inline void print_params(std::ostream& os, const RunParams& p) {
    for (const auto& k : param_keys()) os << k.key << '=' << fmt_num(k.get(p)) << '\n';
}

// ---------------------------------------------------------------------------

struct RunOptions {
    std::string map = "synthetic";
    std::string map_dir;
    std::size_t scenarios = 100;
    std::size_t others = 5;
    std::vector<std::string> modes{"occlusion_aware", "observed_only"};
    std::uint64_t seed = 0;
    std::size_t parallelism = std::max(1u, std::thread::hardware_concurrency());
    std::string out;
    std::string ego_route;
    bool export_traces = false, export_particles = false, export_profiles = false, export_cdfs = false;
};

namespace detail {

struct UsageError : Error { using Error::Error; };

/// Applies a config document: run fields by flag name, parameters under "set".
inline void apply_config_file(const std::string& path, RunOptions& o, RunParams& p) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw UsageError("config " + path + ": expected an object");
    try {
        for (const auto& [k, v] : doc.items()) {
            if (k == "map") o.map = v.get<std::string>();
            else if (k == "map_dir") o.map_dir = v.get<std::string>();
            else if (k == "scenarios") o.scenarios = v.get<std::size_t>();
            else if (k == "others") o.others = v.get<std::size_t>();
            else if (k == "modes") o.modes = v.get<std::vector<std::string>>();
            else if (k == "seed") o.seed = v.get<std::uint64_t>();
            else if (k == "parallelism") o.parallelism = v.get<std::size_t>();
            else if (k == "out") o.out = v.get<std::string>();
            else if (k == "ego_route") o.ego_route = v.get<std::string>();
            else if (k == "export_traces") o.export_traces = v.get<bool>();
            else if (k == "export_particles") o.export_particles = v.get<bool>();
            else if (k == "export_profiles") o.export_profiles = v.get<bool>();
            else if (k == "export_cdfs") o.export_cdfs = v.get<bool>();
            else if (k == "set") {
                if (!v.is_object()) throw UsageError("config " + path + ": \"set\" must be an object");
                for (const auto& [pk, pv] : v.items()) set_param(p, pk, pv.get<double>());
            } else {
                throw UsageError("config " + path + ": unknown field '" + k + "'");
            }
        }
    } catch (const json::exception& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
}

struct LoadedMap {
    std::shared_ptr<const IntersectionMap> map;
    std::string source;
};

inline std::vector<LoadedMap> load_maps(const RunOptions& o, const RunParams& p) {
    std::vector<LoadedMap> maps;
    if (!o.map_dir.empty()) {
        if (!std::filesystem::is_directory(o.map_dir)) throw LoadError("not a directory: " + o.map_dir, o.map_dir);
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(o.map_dir))
            if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw LoadError("no .json maps in " + o.map_dir, o.map_dir);
        for (const auto& f : files) maps.push_back({load_intersection_file(f), f.string()});
    } else if (o.map == "synthetic") {
        MapSpec spec = synthetic_fourway_spec(p.fourway, p.episode.planner.v_min, p.episode.planner.v_max);
        spec.meta.name = "synthetic_fourway";
        maps.push_back({make_map(spec), "synthetic"});
    } else {
        maps.push_back({load_intersection_file(o.map), o.map});
    }
    return maps;
}

/// The named route, else the synthetic left turn, else the first route.
inline std::size_t pick_ego_route(const IntersectionMap& map, const std::string& name) {
    if (!name.empty()) {
        if (auto r = map.route_index(name)) return *r;
        throw ConfigurationError("map '" + map.meta().name + "' has no route '" + name + "'");
    }
    if (auto r = map.route_index("S_left")) return *r;
    return 0;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    return f;
}

inline int cmd_run(RunOptions o, RunParams p, std::ostream& out) {
    p.sync();
    p.validate();
    if (o.scenarios < 1) throw ConfigurationError("--scenarios must be >= 1");
    if (o.parallelism < 1) throw ConfigurationError("--parallelism must be >= 1");
    std::vector<RiskMode> modes;
    for (const auto& m : o.modes) modes.push_back(parse_risk_mode(m));
    if (modes.empty()) throw ConfigurationError("--modes is empty");

    const auto maps = load_maps(o, p);
    if (o.out.empty()) {
        const char* env = std::getenv("OCCRISK_OUT");
        o.out = env && *env ? env : "occrisk_out";
    }
    const std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    if (o.export_traces) std::filesystem::create_directories(dir / "traces");
    if (o.export_particles) std::filesystem::create_directories(dir / "particles");

    auto summary = open_out(dir / "summary.csv");
    write_summary_header(summary);
    std::ofstream cdfs, profiles;
    if (o.export_cdfs) { cdfs = open_out(dir / "cdf.csv"); write_cdf_header(cdfs); }
    if (o.export_profiles) { profiles = open_out(dir / "profiles.csv"); write_profile_header(profiles); }

    for (const auto& [map, source] : maps) {
        const std::string& name = map->meta().name;
        BatchOptions opt;
        opt.n_scenarios = o.scenarios;
        opt.n_others = o.others;
        opt.modes = modes;
        opt.base_seed = o.seed;
        opt.parallelism = o.parallelism;
        opt.ego_route = pick_ego_route(*map, o.ego_route);
        opt.scenario = p.scenario;
        opt.episode = p.episode;
        opt.episode.record_particles = o.export_particles;
        opt.keep_scenarios = false;
        const auto entries = run_batch(map, opt);

        const auto rows = summarize(entries, name, p.a_thresh);
        write_summary_rows(summary, rows, map->meta());
        for (const auto& r : rows) {
            out << name << ' ' << r.mode << ": collision_rate=" << fmt_num(r.collision_rate_pct)
                << "% discomfort_median=" << fmt_num(r.discomfort_median)
                << " discomfort_p95=" << fmt_num(r.discomfort_p95) << " n=" << r.n << " timeouts=" << r.timeout_count
                << " failed=" << r.failed_scenarios << '\n';
            if (o.export_cdfs) write_cdf_rows(cdfs, r);
        }
        for (RiskMode m : modes) {
            std::vector<EpisodeResult> results;
            for (const auto& e : entries)
                if (e.mode == m && e.result) results.push_back(*e.result);
            if (o.export_profiles && !results.empty())
                write_profile_rows(profiles, name, std::string(to_string(m)), profile_bands(results, p.profile_bin));
        }
        for (const auto& e : entries) {
            if (!e.result) continue;
            const std::string stem = name + "_" + std::string(to_string(e.mode)) + "_" + std::to_string(e.scenario_id);
            if (o.export_traces) {
                auto f = open_out(dir / "traces" / (stem + ".csv"));
                write_trace(f, *e.result);
            }
            if (o.export_particles) {
                auto f = open_out(dir / "particles" / (stem + ".csv"));
                write_particles(f, *e.result, *map);
            }
        }
    }
    out << "wrote " << (dir / "summary.csv").string() << '\n';
    return 0;
}

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
    MapSpec spec;
    try {
        spec = parse_map_document(read_json_file(path));
    } catch (const LoadError& e) {
        err << "error: " << e.what() << " [" << e.entity() << "]\n";
        return 1;
    }
    const auto violations = validate_map(spec);
    if (violations.empty()) {
        out << "OK\n";
        return 0;
    }
    for (const auto& v : violations) out << v.message() << '\n';
    return 1;
}

inline int cmd_overlay(const std::vector<std::string>& files, const std::string& out_path, std::ostream& out) {
    std::vector<std::vector<OverlayRow>> inputs;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw LoadError("cannot read " + f, f);
        inputs.push_back(read_summary(in, f));
    }
    const auto merged = merge_overlay(inputs);
    if (out_path.empty()) {
        write_overlay(out, merged);
    } else {
        auto f = open_out(out_path);
        write_overlay(f, merged);
    }
    return 0;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Occlusion-aware risk simulation", "occrisk"};
    app.require_subcommand(1);

    RunOptions ro;
    std::vector<std::string> sets;
    std::string config_path;
    bool print = false;
    auto* run = app.add_subcommand("run", "Simulate scenario batches and write summaries");
    run->add_option("--config", config_path, "JSON config; flags override its values");
    run->add_option("--map", ro.map, "'synthetic' or a map file");
    run->add_option("--map-dir", ro.map_dir, "Directory of map files (*.json)");
    run->add_option("--scenarios", ro.scenarios, "Scenarios per map");
    run->add_option("--others", ro.others, "Other vehicles per scenario");
    run->add_option("--modes", ro.modes, "Risk modes")->delimiter(',');
    run->add_option("--seed", ro.seed, "Base seed");
    run->add_option("--parallelism", ro.parallelism, "Worker threads");
    run->add_option("--out", ro.out, "Output directory (default $OCCRISK_OUT, then ./occrisk_out)");
    run->add_option("--ego-route", ro.ego_route, "Ego route id (default S_left if present, else the first)");
    run->add_flag("--export-traces", ro.export_traces, "Write one trace per episode");
    run->add_flag("--export-particles", ro.export_particles, "Write particle dumps per episode");
    run->add_flag("--export-profiles", ro.export_profiles, "Write speed/acceleration percentile bands");
    run->add_flag("--export-cdfs", ro.export_cdfs, "Write discomfort CDFs");
    run->add_option("--set", sets, "Parameter override KEY=VALUE (repeatable)");
    run->add_flag("--print-params", print, "Print the effective parameters and exit");

    std::string map_path;
    auto* validate = app.add_subcommand("validate", "Check a map file");
    validate->add_option("map", map_path, "Map file")->required();

    std::vector<std::string> summaries;
    std::string overlay_out;
    auto* overlay = app.add_subcommand("overlay", "Merge summaries into one row per intersection");
    overlay->add_option("summaries", summaries, "Summary files")->required();
    overlay->add_option("-o,--out", overlay_out, "Output file (default stdout)");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*run) {
            RunParams params;
            if (!config_path.empty()) {
                RunOptions from_file;
                detail::apply_config_file(config_path, from_file, params);
                // Flags given on the command line win over the file.
                auto given = [&](const char* flag) { return run->count(flag) > 0; };
                if (!given("--map")) ro.map = from_file.map;
                if (!given("--map-dir")) ro.map_dir = from_file.map_dir;
                if (!given("--scenarios")) ro.scenarios = from_file.scenarios;
                if (!given("--others")) ro.others = from_file.others;
                if (!given("--modes")) ro.modes = from_file.modes;
                if (!given("--seed")) ro.seed = from_file.seed;
                if (!given("--parallelism")) ro.parallelism = from_file.parallelism;
                if (!given("--out")) ro.out = from_file.out;
                if (!given("--ego-route")) ro.ego_route = from_file.ego_route;
                ro.export_traces |= from_file.export_traces;
                ro.export_particles |= from_file.export_particles;
                ro.export_profiles |= from_file.export_profiles;
                ro.export_cdfs |= from_file.export_cdfs;
            }
            for (const auto& kv : sets) apply_assignment(params, kv);
            if (print) {
                params.sync();
                params.validate();
                print_params(out, params);
                return 0;
            }
            return detail::cmd_run(ro, params, out);
        }
        if (*validate) return detail::cmd_validate(map_path, out, err);
        return detail::cmd_overlay(summaries, overlay_out, out);
    } catch (const detail::UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigurationError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const LoadError& e) {
        err << "error: " << e.what() << " [" << e.entity() << "]\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace occrisk
