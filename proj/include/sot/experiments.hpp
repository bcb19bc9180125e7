#pragma once

#include "sot/common.hpp"
#include "sot/csv.hpp"
#include "sot/gaussian.hpp"
#include "sot/measures.hpp"
#include "sot/metrics.hpp"
#include "sot/oracle.hpp"
#include "sot/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace sot {

using json = nlohmann::json;

namespace cfgdetail {

inline const json& member(const json& j, const std::string& path, const std::string& key) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(path + "." + key + ": missing required field");
    return j.at(key);
}

template <typename T>
T get_as(const json& j, const std::string& full_path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(full_path + ": wrong type");
    }
}

template <typename T>
T require_field(const json& j, const std::string& path, const std::string& key) {
    return get_as<T>(member(j, path, key), path + "." + key);
}

template <typename T>
T field_or(const json& j, const std::string& path, const std::string& key, T def) {
    if (!j.is_object() || !j.contains(key)) return def;
    return get_as<T>(j.at(key), path + "." + key);
}

inline std::vector<Vector> parse_centers(const json& j, const std::string& full_path) {
    auto raw = get_as<std::vector<std::vector<double>>>(j, full_path);
    if (raw.empty()) throw ConfigError(full_path + ": empty center list");
    std::vector<Vector> out;
    for (const auto& c : raw) {
        if (c.empty() || (out.size() && std::size_t(out.front().size()) != c.size()))
            throw ConfigError(full_path + ": inconsistent center dimensions");
        out.push_back(Eigen::Map<const Vector>(c.data(), Eigen::Index(c.size())));
    }
    return out;
}

inline Matrix parse_matrix(const json& j, const std::string& full_path) {
    auto raw = get_as<std::vector<std::vector<double>>>(j, full_path);
    if (raw.empty()) throw ConfigError(full_path + ": empty matrix");
    Matrix m(Eigen::Index(raw.size()), Eigen::Index(raw.front().size()));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i].size() != raw.front().size())
            throw ConfigError(full_path + ": ragged matrix rows");
        for (std::size_t k = 0; k < raw[i].size(); ++k)
            m(Eigen::Index(i), Eigen::Index(k)) = raw[i][k];
    }
    return m;
}

} // namespace cfgdetail

/// Instance section: which generator (or CSV pair) provides the measures.
struct InstanceSpec {
    std::string type; // clustered | symmetric_pairs | gaussian_mixture | csv
    std::vector<std::uint64_t> seeds{0};

    // gaussian_mixture / clustered
    std::vector<Vector> source_centers, target_centers;
    double variance = 0.04;
    Eigen::Index points_per_cluster = 10;

    // clustered
    Eigen::Index R = 2, g = 10;
    double rho = 0.0;
    ClusterMode mode = ClusterMode::Exact;
    double jitter_sigma = 0.0;

    // symmetric_pairs
    std::vector<Eigen::Index> cluster_sizes;
    std::vector<double> mu;
    double epsilon = 0.5;
    Eigen::Index dim = 2;

    // csv
    std::string source_path, target_path;
    WeightMode weight_mode = WeightMode::Uniform;
};

struct ProblemSpec {
    MapKind map = MapKind::Identity;
    std::vector<double> p_values{1.0};
    double q = 1.0;
    std::vector<double> lambdas;
    double cost_exponent = 2.0;
    std::optional<Matrix> subspace_projection;
};

struct OutputSpec {
    std::string dir = ".";
    std::string prefix = "run";
};

struct ConvergenceSpec {
    std::string reference = "long_run"; // lp | ground_truth | long_run
    int long_run_iters = 4000;
};

struct SweepSpec {
    bool average_seeds = false;
    std::string use = "averaged"; // averaged | final
};

struct GaussianSpec {
    std::string program = "cross_covariance"; // cross_covariance | displacement
    Eigen::Index dim = 3;
    std::string mode = "random_commuting"; // random_commuting | isotropic | explicit
    double sigma0_scale = 1.0, sigma1_scale = 1.0;
    std::optional<Matrix> sigma0, sigma1;
    std::uint64_t seed = 0;
    std::vector<double> lambdas;
};

struct ExperimentConfig {
    InstanceSpec instance;
    ProblemSpec problem;
    SolverOptions solver;
    OutputSpec output;
    ConvergenceSpec convergence;
    SweepSpec sweep;
    std::optional<GaussianSpec> gaussian;
    std::uint64_t config_hash = 0;
    int threads = 1;
};

namespace cfgdetail {

inline InstanceSpec parse_instance(const json& j) {
    InstanceSpec spec;
    const std::string path = "instance";
    spec.type = require_field<std::string>(j, path, "type");
    if (j.contains("seeds")) {
        spec.seeds = get_as<std::vector<std::uint64_t>>(j.at("seeds"), path + ".seeds");
        if (spec.seeds.empty()) throw ConfigError(path + ".seeds: empty seed list");
    }

    if (spec.type == "gaussian_mixture") {
        spec.source_centers = parse_centers(member(j, path, "source_centers"), path + ".source_centers");
        spec.target_centers = parse_centers(member(j, path, "target_centers"), path + ".target_centers");
        spec.variance = field_or(j, path, "variance", 0.04);
        spec.points_per_cluster = field_or<Eigen::Index>(j, path, "points_per_cluster", 10);
        if (spec.variance < 0) throw ConfigError(path + ".variance: must be nonnegative");
    } else if (spec.type == "clustered") {
        spec.R = require_field<Eigen::Index>(j, path, "R");
        spec.g = require_field<Eigen::Index>(j, path, "g");
        spec.source_centers = parse_centers(member(j, path, "source_centers"), path + ".source_centers");
        spec.target_centers = parse_centers(member(j, path, "target_centers"), path + ".target_centers");
        spec.rho = field_or(j, path, "rho", 0.0);
        const std::string mode = field_or<std::string>(j, path, "mode", "exact");
        if (mode == "exact")
            spec.mode = ClusterMode::Exact;
        else if (mode == "jitter")
            spec.mode = ClusterMode::Jitter;
        else
            throw ConfigError(path + ".mode: expected 'exact' or 'jitter'");
        spec.jitter_sigma = field_or(j, path, "jitter_sigma", 0.0);
    } else if (spec.type == "symmetric_pairs") {
        spec.R = require_field<Eigen::Index>(j, path, "R");
        spec.cluster_sizes =
            require_field<std::vector<Eigen::Index>>(j, path, "cluster_sizes");
        spec.mu = require_field<std::vector<double>>(j, path, "mu");
        spec.epsilon = require_field<double>(j, path, "epsilon");
        spec.rho = field_or(j, path, "rho", 0.0);
        spec.dim = field_or<Eigen::Index>(j, path, "dim", 2);
    } else if (spec.type == "csv") {
        spec.source_path = require_field<std::string>(j, path, "source_path");
        spec.target_path = require_field<std::string>(j, path, "target_path");
        const std::string wm = field_or<std::string>(j, path, "weight_mode", "uniform");
        if (wm == "uniform")
            spec.weight_mode = WeightMode::Uniform;
        else if (wm == "column_named")
            spec.weight_mode = WeightMode::ColumnNamed;
        else
            throw ConfigError(path + ".weight_mode: expected 'uniform' or 'column_named'");
        for (const auto& p : {spec.source_path, spec.target_path})
            if (!std::filesystem::exists(p))
                throw ConfigError(path + ": referenced file does not exist: " + p);
    } else {
        throw ConfigError(path + ".type: unknown instance type '" + spec.type + "'");
    }
    return spec;
}

inline ProblemSpec parse_problem(const json& j) {
    ProblemSpec spec;
    const std::string path = "problem";
    spec.map = map_kind_from_name(require_field<std::string>(j, path, "map"));
    if (j.contains("p") && j.at("p").is_array())
        spec.p_values = get_as<std::vector<double>>(j.at("p"), path + ".p");
    else
        spec.p_values = {field_or(j, path, "p", 1.0)};
    spec.q = field_or(j, path, "q", 1.0);
    spec.lambdas = require_field<std::vector<double>>(j, path, "lambdas");
    if (spec.lambdas.empty()) throw ConfigError(path + ".lambdas: empty lambda list");
    for (double l : spec.lambdas)
        if (l < 0) throw ConfigError(path + ".lambdas: lambda must be nonnegative");
    for (double p : spec.p_values)
        if (!(p >= 1)) throw ConfigError(path + ".p: p >= 1 required");
    if (!(spec.q >= 1)) throw ConfigError(path + ".q: q >= 1 required");
    spec.cost_exponent = field_or(j, path, "cost_exponent", 2.0);
    if (!(spec.cost_exponent > 0))
        throw ConfigError(path + ".cost_exponent: must be positive");
    if (j.contains("subspace_projection"))
        spec.subspace_projection =
            parse_matrix(j.at("subspace_projection"), path + ".subspace_projection");
    if (spec.map == MapKind::SubspaceElastic && !spec.subspace_projection)
        throw ConfigError(path + ".subspace_projection: required for subspace_elastic");
    return spec;
}

inline SolverOptions parse_solver(const json& j) {
    SolverOptions opts;
    const std::string path = "solver";
    opts.schedule = schedule_from_name(field_or<std::string>(j, path, "schedule", "sqrt_decay"));
    opts.eta0 = field_or(j, path, "eta0", 0.1);
    opts.ratio = field_or(j, path, "ratio", 0.95);
    opts.max_outer_iters = field_or(j, path, "max_outer_iters", 50);
    opts.sinkhorn_iters = field_or(j, path, "sinkhorn_iters", 500);
    opts.sinkhorn_tol = field_or(j, path, "sinkhorn_tol", 1e-12);
    opts.round_each_iter = field_or(j, path, "round_each_iter", true);
    opts.average_iterates = field_or(j, path, "average_iterates", true);
    try {
        opts.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
    return opts;
}

inline GaussianSpec parse_gaussian(const json& j) {
    GaussianSpec spec;
    const std::string path = "gaussian";
    spec.program = field_or<std::string>(j, path, "program", "cross_covariance");
    if (spec.program != "cross_covariance" && spec.program != "displacement")
        throw ConfigError(path + ".program: expected 'cross_covariance' or 'displacement'");
    spec.mode = field_or<std::string>(j, path, "mode", "random_commuting");
    spec.dim = field_or<Eigen::Index>(j, path, "dim", 3);
    spec.seed = field_or<std::uint64_t>(j, path, "seed", 0);
    spec.lambdas = require_field<std::vector<double>>(j, path, "lambdas");
    if (spec.lambdas.empty()) throw ConfigError(path + ".lambdas: empty lambda list");
    if (spec.mode == "isotropic") {
        spec.sigma0_scale = require_field<double>(j, path, "sigma0_scale");
        spec.sigma1_scale = require_field<double>(j, path, "sigma1_scale");
    } else if (spec.mode == "explicit") {
        spec.sigma0 = parse_matrix(member(j, path, "sigma0"), path + ".sigma0");
        spec.sigma1 = parse_matrix(member(j, path, "sigma1"), path + ".sigma1");
    } else if (spec.mode != "random_commuting") {
        throw ConfigError(path + ".mode: unknown mode '" + spec.mode + "'");
    }
    return spec;
}

} // namespace cfgdetail

/// Parses and fully validates a config document. All validation happens
/// here, before any solve begins.
inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.config_hash = csv::fnv1a(text);
    if (j.contains("gaussian")) {
        cfg.gaussian = cfgdetail::parse_gaussian(j.at("gaussian"));
        if (j.contains("output")) {
            cfg.output.dir = cfgdetail::field_or<std::string>(j.at("output"), "output", "dir", ".");
            cfg.output.prefix =
                cfgdetail::field_or<std::string>(j.at("output"), "output", "prefix", "run");
        }
        return cfg;
    }
    cfg.instance = cfgdetail::parse_instance(cfgdetail::member(j, "config", "instance"));
    cfg.problem = cfgdetail::parse_problem(cfgdetail::member(j, "config", "problem"));
    if (j.contains("solver")) cfg.solver = cfgdetail::parse_solver(j.at("solver"));
    if (j.contains("output")) {
        cfg.output.dir = cfgdetail::field_or<std::string>(j.at("output"), "output", "dir", ".");
        cfg.output.prefix =
            cfgdetail::field_or<std::string>(j.at("output"), "output", "prefix", "run");
    }
    if (j.contains("convergence")) {
        const auto& c = j.at("convergence");
        cfg.convergence.reference =
            cfgdetail::field_or<std::string>(c, "convergence", "reference", "long_run");
        cfg.convergence.long_run_iters =
            cfgdetail::field_or(c, "convergence", "long_run_iters", 4000);
        if (cfg.convergence.reference != "lp" && cfg.convergence.reference != "ground_truth" &&
            cfg.convergence.reference != "long_run")
            throw ConfigError("convergence.reference: expected lp, ground_truth, or long_run");
        if (cfg.convergence.long_run_iters < 1)
            throw ConfigError("convergence.long_run_iters: must be >= 1");
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        cfg.sweep.average_seeds = cfgdetail::field_or(s, "sweep", "average_seeds", false);
        cfg.sweep.use = cfgdetail::field_or<std::string>(s, "sweep", "use", "averaged");
        if (cfg.sweep.use != "averaged" && cfg.sweep.use != "final")
            throw ConfigError("sweep.use: expected 'averaged' or 'final'");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

/// A generated (or loaded) pair of measures plus any analytic structure
/// the generator provides.
struct BuiltInstance {
    DiscreteMeasure source, target;
    std::optional<Matrix> ground_truth;
    double lambda_window_upper = std::numeric_limits<double>::infinity();
    std::string id;
};

inline BuiltInstance build_instance(const InstanceSpec& spec, std::uint64_t seed) {
    BuiltInstance out;
    if (spec.type == "gaussian_mixture") {
        out.source = gen_gaussian_mixture(spec.source_centers, spec.variance,
                                          spec.points_per_cluster, seed * 2);
        out.target = gen_gaussian_mixture(spec.target_centers, spec.variance,
                                          spec.points_per_cluster, seed * 2 + 1);
        out.id = "gaussian_mixture-s" + std::to_string(seed);
    } else if (spec.type == "clustered") {
        ClusteredInstance inst =
            gen_clustered_instance(spec.R, spec.g, spec.source_centers, spec.target_centers,
                                   spec.rho, spec.mode, spec.jitter_sigma, seed);
        out.source = std::move(inst.source);
        out.target = std::move(inst.target);
        out.ground_truth = std::move(inst.ground_truth);
        out.lambda_window_upper = inst.lambda_window_upper;
        out.id = "clustered-s" + std::to_string(seed);
    } else if (spec.type == "symmetric_pairs") {
        SymmetricPairsInstance inst = gen_symmetric_pairs_instance(
            spec.R, spec.cluster_sizes, spec.mu, spec.epsilon, spec.rho, spec.dim, seed);
        out.source = std::move(inst.source);
        out.target = std::move(inst.target);
        out.ground_truth = std::move(inst.ground_truth);
        out.lambda_window_upper = inst.lambda_max;
        out.id = "symmetric_pairs-s" + std::to_string(seed);
    } else if (spec.type == "csv") {
        out.source = load_point_cloud(spec.source_path, spec.weight_mode);
        out.target = load_point_cloud(spec.target_path, spec.weight_mode);
        out.id = "csv";
    } else {
        throw ConfigError("instance.type: unknown instance type '" + spec.type + "'");
    }
    return out;
}

inline Problem build_problem(const BuiltInstance& inst, const ProblemSpec& spec,
                             double p, double lambda) {
    std::vector<RegularizerTerm> terms;
    Matrix proj = spec.subspace_projection ? *spec.subspace_projection : Matrix();
    terms.emplace_back(lambda, p, spec.q,
                       AffineCouplingMap(spec.map, inst.source, inst.target, proj));
    return make_problem(inst.source, inst.target, std::move(terms), spec.cost_exponent);
}

namespace detail {

inline void run_tasks(int threads, std::vector<std::function<void()>>& tasks) {
    if (threads <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            tasks[i]();
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(threads, int(tasks.size()));
    pool.reserve(std::size_t(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

inline void write_provenance(csv::Writer& w, const ExperimentConfig& cfg) {
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    w.comment("config_hash=" + std::string(hash));
    std::string seeds;
    for (auto s : cfg.instance.seeds) seeds += (seeds.empty() ? "" : " ") + std::to_string(s);
    w.comment("seeds=" + (seeds.empty() ? std::string("-") : seeds));
    w.comment("build=schatten-ot-0.1.0");
}

/// Transport cost of the epsilon = 1 entropic coupling on C; the
/// cost-reference baseline used in sweep outputs.
inline double sinkhorn_reference_cost(const Problem& problem) {
    const Matrix kernel = (-problem.cost.entries).array().exp();
    KlProjection proj = kl_project(kernel, problem.a, problem.b, 2000, 1e-10);
    return problem.cost.entries.cwiseProduct(proj.coupling.plan).sum();
}

inline std::string out_path(const OutputSpec& out, const std::string& suffix) {
    std::filesystem::create_directories(out.dir);
    return (std::filesystem::path(out.dir) / (out.prefix + "_" + suffix)).string();
}

} // namespace detail

struct SweepRow {
    std::string instance_id;
    double seed = 0; // -1 on seed-averaged rows
    double lambda = 0, p = 1, q = 1;
    std::string map_kind;
    QualityReport quality;
    double objective = 0;
    double rel_cost_vs_sinkhorn1 = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string csv_path;
};

inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols = {
        "instance_id", "seed", "lambda", "p", "q", "map_kind",
        "transport_cost", "effective_rank_coupling", "effective_rank_map_image",
        "marginal_error", "support_size", "objective", "rel_cost_vs_sinkhorn1"};
    return cols;
}

/// Runs the (seed, p, lambda) grid and writes one quality row per point
/// (or per (p, lambda) pair when seed-averaging is on). Tasks execute in
/// parallel; rows are written in deterministic grid order.
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    const auto& seeds = cfg.instance.seeds;
    const auto& ps = cfg.problem.p_values;
    const auto& lambdas = cfg.problem.lambdas;

    struct Point {
        std::size_t si, pi, li;
    };
    std::vector<Point> grid;
    for (std::size_t si = 0; si < seeds.size(); ++si)
        for (std::size_t pi = 0; pi < ps.size(); ++pi)
            for (std::size_t li = 0; li < lambdas.size(); ++li) grid.push_back({si, pi, li});

    std::vector<SweepRow> rows(grid.size());
    std::vector<std::function<void()>> tasks;
    tasks.reserve(grid.size());
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        tasks.emplace_back([&, gi] {
            const Point pt = grid[gi];
            BuiltInstance inst = build_instance(cfg.instance, seeds[pt.si]);
            Problem problem = build_problem(inst, cfg.problem, ps[pt.pi], lambdas[pt.li]);
            SolveReport report = solve(problem, cfg.solver);
            const Matrix& plan =
                cfg.sweep.use == "final" ? report.final.plan : report.averaged.plan;

            SweepRow row;
            row.instance_id = inst.id;
            row.seed = double(seeds[pt.si]);
            row.lambda = lambdas[pt.li];
            row.p = ps[pt.pi];
            row.q = cfg.problem.q;
            row.map_kind = map_kind_name(cfg.problem.map);
            row.quality = evaluate(problem, plan);
            row.objective = objective(problem, plan);
            const double ref = detail::sinkhorn_reference_cost(problem);
            row.rel_cost_vs_sinkhorn1 = ref > 0 ? row.quality.transport_cost / ref : 0.0;
            rows[gi] = std::move(row);
        });
    }
    detail::run_tasks(cfg.threads, tasks);

    if (cfg.sweep.average_seeds && seeds.size() > 1) {
        std::vector<SweepRow> averaged;
        for (std::size_t pi = 0; pi < ps.size(); ++pi)
            for (std::size_t li = 0; li < lambdas.size(); ++li) {
                SweepRow acc;
                acc.instance_id = cfg.instance.type + "-avg";
                acc.seed = -1;
                acc.lambda = lambdas[li];
                acc.p = ps[pi];
                acc.q = cfg.problem.q;
                acc.map_kind = map_kind_name(cfg.problem.map);
                double n = 0;
                for (std::size_t gi = 0; gi < grid.size(); ++gi) {
                    if (grid[gi].pi != pi || grid[gi].li != li) continue;
                    const SweepRow& r = rows[gi];
                    acc.quality.transport_cost += r.quality.transport_cost;
                    acc.quality.effective_rank_coupling += r.quality.effective_rank_coupling;
                    if (r.quality.effective_rank_map_image)
                        acc.quality.effective_rank_map_image =
                            acc.quality.effective_rank_map_image.value_or(0.0) +
                            *r.quality.effective_rank_map_image;
                    acc.quality.marginal_error += r.quality.marginal_error;
                    acc.quality.support_size += r.quality.support_size;
                    acc.objective += r.objective;
                    acc.rel_cost_vs_sinkhorn1 += r.rel_cost_vs_sinkhorn1;
                    n += 1;
                }
                acc.quality.transport_cost /= n;
                acc.quality.effective_rank_coupling /= n;
                if (acc.quality.effective_rank_map_image)
                    acc.quality.effective_rank_map_image =
                        *acc.quality.effective_rank_map_image / n;
                acc.quality.marginal_error /= n;
                acc.quality.support_size = long(double(acc.quality.support_size) / n);
                acc.objective /= n;
                acc.rel_cost_vs_sinkhorn1 /= n;
                averaged.push_back(std::move(acc));
            }
        rows = std::move(averaged);
    }

    SweepResult result;
    result.csv_path = detail::out_path(cfg.output, "sweep.csv");
    csv::Writer w(result.csv_path);
    detail::write_provenance(w, cfg);
    w.row(sweep_columns());
    for (const auto& r : rows) {
        w.out << r.instance_id << "," << csv::format_number(r.seed) << ","
              << csv::format_number(r.lambda) << "," << csv::format_number(r.p) << ","
              << csv::format_number(r.q) << "," << r.map_kind << ","
              << csv::format_number(r.quality.transport_cost) << ","
              << csv::format_number(r.quality.effective_rank_coupling) << ","
              << csv::format_number(r.quality.effective_rank_map_image.value_or(
                     std::numeric_limits<double>::quiet_NaN()))
              << "," << csv::format_number(r.quality.marginal_error) << ","
              << r.quality.support_size << "," << csv::format_number(r.objective) << ","
              << csv::format_number(r.rel_cost_vs_sinkhorn1) << "\n";
    }
    result.rows = std::move(rows);
    return result;
}

struct ConvergenceRow {
    double lambda = 0;
    int iter = 0;
    double tau = 0, objective = 0, excess = 0, best_excess = 0, marginal_error = 0;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    std::string csv_path;
    double reference_value = 0;
};

/// Per-iteration excess-objective trace against a reference optimum
/// (exact LP for lambda = 0, the generator's ground truth, or a long
/// solver run).
inline ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
    if (cfg.convergence.reference == "lp")
        for (double l : cfg.problem.lambdas)
            if (l != 0)
                throw ConfigError(
                    "convergence.reference: 'lp' is only exact when every lambda is 0");

    BuiltInstance inst = build_instance(cfg.instance, cfg.instance.seeds.front());
    if (cfg.convergence.reference == "ground_truth" && !inst.ground_truth)
        throw ConfigError("convergence.reference: instance type provides no ground truth");

    ConvergenceResult result;
    result.csv_path = detail::out_path(cfg.output, "convergence.csv");
    csv::Writer w(result.csv_path);
    detail::write_provenance(w, cfg);
    w.comment("schedule=" + schedule_name(cfg.solver.schedule) +
              " eta0=" + csv::format_number(cfg.solver.eta0));
    w.row({"lambda", "iter", "tau", "objective", "excess", "best_excess", "marginal_error"});

    for (double lambda : cfg.problem.lambdas) {
        Problem problem =
            build_problem(inst, cfg.problem, cfg.problem.p_values.front(), lambda);

        double reference = 0;
        if (cfg.convergence.reference == "lp") {
            reference = exact_ot_lp(problem.cost, problem.a, problem.b).value;
        } else if (cfg.convergence.reference == "ground_truth") {
            reference = objective(problem, *inst.ground_truth);
        } else {
            SolverOptions long_opts = cfg.solver;
            long_opts.max_outer_iters = cfg.convergence.long_run_iters;
            SolveReport long_run = solve(problem, long_opts);
            reference = *std::min_element(long_run.objective_trace.begin(),
                                          long_run.objective_trace.end());
            reference = std::min(reference, objective(problem, long_run.averaged.plan));
        }
        result.reference_value = reference;

        SolveReport report = solve(problem, cfg.solver);
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < report.iterations_used; ++k) {
            best = std::min(best, report.objective_trace[std::size_t(k)]);
            ConvergenceRow row;
            row.lambda = lambda;
            row.iter = k + 1;
            row.tau = report.step_trace[std::size_t(k)];
            row.objective = report.objective_trace[std::size_t(k)];
            row.excess = row.objective - reference;
            row.best_excess = best - reference;
            row.marginal_error = report.marginal_error_trace[std::size_t(k)];
            w.numeric_row({row.lambda, double(row.iter), row.tau, row.objective, row.excess,
                           row.best_excess, row.marginal_error});
            result.rows.push_back(row);
        }
    }
    return result;
}

struct CertifyRow {
    double lambda = 0;
    CertificateReport certificate;
    bool capacity_error = false;
};

struct CertifyResult {
    std::vector<CertifyRow> rows;
    std::string csv_path;
};

/// Solves per lambda, then checks the tilted-cost optimality certificate
/// of the returned coupling. Capacity errors are reported per row and
/// the run continues.
inline CertifyResult run_certify(const ExperimentConfig& cfg) {
    BuiltInstance inst = build_instance(cfg.instance, cfg.instance.seeds.front());

    CertifyResult result;
    result.csv_path = detail::out_path(cfg.output, "certify.csv");
    csv::Writer w(result.csv_path);
    detail::write_provenance(w, cfg);
    w.row({"lambda", "candidate_value", "lp_value", "gap", "passed"});

    for (double lambda : cfg.problem.lambdas) {
        CertifyRow row;
        row.lambda = lambda;
        Problem problem =
            build_problem(inst, cfg.problem, cfg.problem.p_values.front(), lambda);
        SolveReport report = solve(problem, cfg.solver);
        try {
            row.certificate = kkt_certificate(problem, report.final.plan);
            w.numeric_row(row.certificate.csv_row());
        } catch (const CapacityError& e) {
            row.capacity_error = true;
            w.comment("lambda=" + csv::format_number(lambda) + " capacity error: " + e.what());
            const double nan = std::numeric_limits<double>::quiet_NaN();
            w.numeric_row({lambda, nan, nan, nan, 0.0});
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

struct GaussianSweepRow {
    double lambda = 0;
    int rank = 0;
    double objective = 0;
};

struct GaussianSweepResult {
    std::vector<GaussianSweepRow> rows;
    std::string csv_path;
};

inline GaussianPair build_gaussian_pair(const GaussianSpec& spec) {
    if (spec.mode == "isotropic") {
        if (!(spec.sigma0_scale > 0) || !(spec.sigma1_scale > 0))
            throw ConfigError("gaussian: isotropic scales must be positive");
        return GaussianPair(spec.sigma0_scale * spec.sigma0_scale *
                                Matrix::Identity(spec.dim, spec.dim),
                            spec.sigma1_scale * spec.sigma1_scale *
                                Matrix::Identity(spec.dim, spec.dim));
    }
    if (spec.mode == "explicit") {
        try {
            return GaussianPair(*spec.sigma0, *spec.sigma1);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("gaussian.sigma0/sigma1: ") + e.what());
        }
    }
    // Random commuting pair: shared random eigenbasis, independent spectra.
    Rng rng = make_rng(spec.seed);
    Matrix raw(spec.dim, spec.dim);
    for (Eigen::Index i = 0; i < spec.dim; ++i)
        for (Eigen::Index j = 0; j < spec.dim; ++j) raw(i, j) = standard_normal(rng);
    const Matrix basis = Eigen::HouseholderQR<Matrix>(raw).householderQ();
    Vector a(spec.dim), b(spec.dim);
    for (Eigen::Index i = 0; i < spec.dim; ++i) {
        a[i] = uniform_in(rng, 0.2, 3.0);
        b[i] = uniform_in(rng, 0.2, 3.0);
    }
    return GaussianPair(basis * a.asDiagonal() * basis.transpose(),
                        basis * b.asDiagonal() * basis.transpose());
}

/// (lambda, rank, objective) sweep of the closed-form Gaussian programs.
inline GaussianSweepResult run_gaussian(const ExperimentConfig& cfg) {
    if (!cfg.gaussian) throw ConfigError("gaussian: missing config section");
    const GaussianSpec& spec = *cfg.gaussian;
    GaussianPair pair = build_gaussian_pair(spec);

    GaussianSweepResult result;
    result.csv_path = detail::out_path(cfg.output, "gaussian.csv");
    csv::Writer w(result.csv_path);
    detail::write_provenance(w, cfg);
    w.comment("program=" + spec.program);
    w.row({"lambda", "rank", "objective"});

    for (double lambda : spec.lambdas) {
        GaussianSweepRow row;
        row.lambda = lambda;
        if (spec.program == "cross_covariance") {
            CrossCovSolution sol = gaussian_cross_cov_solution(pair, lambda);
            row.rank = sol.rank;
            row.objective = gaussian_cross_cov_objective(pair, sol.k_lambda, lambda);
        } else {
            DisplacementSolution sol = gaussian_displacement_solution(pair, lambda);
            row.rank = sol.rank_deviation;
            row.objective = gaussian_displacement_objective(sol.basis, sol.m_star, lambda);
        }
        w.numeric_row({row.lambda, double(row.rank), row.objective});
        result.rows.push_back(row);
    }
    return result;
}

} // namespace sot
