#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sbbd/apps.hpp"
#include "sbbd/engine.hpp"
#include "sbbd/io.hpp"
#include "sbbd/saa_stats.hpp"

namespace fs = std::filesystem;
using namespace sbbd;
using Json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitCapacity = 4;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string output;
    std::vector<std::string> argv;
};

// Application flags shared by generate and validate; unset values keep the defaults.
struct AppFlags {
    std::string app;
    std::string params_file;
    std::optional<int> n, tau, levels, n_scen;
    std::optional<double> gamma, sigma_r, sigma_u, zeta, r_bar, dispersion, variance, kappa, budget, outside;
    std::optional<std::uint64_t> s1, s2;
    std::string sampling;
};

const std::vector<std::string> kApps = {"caop-exponomial", "caop-mmnl", "caop-probit", "caop-kappa", "flop", "msmflp"};

void add_app_flags(CLI::App *sub, AppFlags &f, bool n_required) {
    sub->add_option("app", f.app, "Application")->required()->check(CLI::IsMember(kApps));
    auto *n = sub->add_option("--n,--n-prod", f.n, "Products (CAOP), options (caop-kappa) or facilities");
    auto *params = sub->add_option("--params", f.params_file, "Application parameters as JSON")->check(CLI::ExistingFile);
    if (n_required) n->required();
    n->excludes(params);
    sub->add_option("--tau", f.tau, "Cardinality limit");
    sub->add_option("--gamma", f.gamma, "Cardinality fraction (caop-exponomial)");
    sub->add_option("--sigma-r", f.sigma_r, "Lognormal reward scale (caop-exponomial)");
    sub->add_option("--sigma-u", f.sigma_u, "Variance of deterministic utilities (caop-exponomial)");
    sub->add_option("--zeta", f.zeta, "Exponential rate (caop-exponomial)");
    sub->add_option("--r-bar", f.r_bar, "Reward upper bound (caop-mmnl)");
    sub->add_option("--D", f.dispersion, "Dispersion (caop-mmnl)");
    sub->add_option("--var", f.variance, "Noise variance (caop-probit)");
    sub->add_option("--kappa", f.kappa, "Reward-utility coupling (caop-kappa)");
    sub->add_option("--levels", f.levels, "Price levels (flop)");
    sub->add_option("--budget", f.budget, "Budget (flop)");
    sub->add_option("--outside", f.outside, "Outside option utility (msmflp)");
    sub->add_option("--n-scen", f.n_scen, "Scenarios N");
    sub->add_option("--s1", f.s1, "Instance seed");
    sub->add_option("--s2", f.s2, "Scenario seed");
    sub->add_option("--sampling", f.sampling, "Sampling scheme")->check(CLI::IsMember({"lhs", "mcs"}));
}

template <class T, class U>
void set_if(T &dst, const std::optional<U> &v) {
    if (v) dst = static_cast<T>(*v);
}

AppParams build_params(const AppFlags &f, const Globals &g) {
    AppParams p;
    if (!f.params_file.empty()) {
        p = app_params_from_json(read_json(f.params_file));
        if (app_name(p) != f.app) throw UsageError("parameter file describes " + app_name(p) + ", not " + f.app);
    } else if (f.app == "caop-exponomial") {
        p = CaopExponomialParams{};
    } else if (f.app == "caop-mmnl") {
        p = CaopMmnlParams{};
    } else if (f.app == "caop-probit") {
        p = CaopProbitParams{};
    } else if (f.app == "caop-kappa") {
        p = CaopKappaParams{};
    } else if (f.app == "flop") {
        p = FlopParams{};
    } else {
        p = MsmflpParams{};
    }
    auto common = [&](auto &q) {
        if (g.seed) q.instance_seed = *g.seed;
        set_if(q.instance_seed, f.s1);
        set_if(q.scenario_seed, f.s2);
        set_if(q.n_scenarios, f.n_scen);
        if (!f.sampling.empty()) q.scheme = f.sampling == "lhs" ? SamplingScheme::LHS : SamplingScheme::MCS;
    };
    std::visit(
        [&](auto &q) {
            using T = std::decay_t<decltype(q)>;
            common(q);
            if constexpr (std::is_same_v<T, CaopExponomialParams>) {
                set_if(q.n_products, f.n);
                set_if(q.gamma, f.gamma);
                set_if(q.sigma_r, f.sigma_r);
                set_if(q.sigma_u, f.sigma_u);
                set_if(q.zeta, f.zeta);
                if (f.tau) q.gamma = (*f.tau + 1.0) / (q.n_products + 1.0);
            } else if constexpr (std::is_same_v<T, CaopMmnlParams>) {
                set_if(q.n_products, f.n);
                set_if(q.tau, f.tau);
                set_if(q.r_bar, f.r_bar);
                set_if(q.D, f.dispersion);
            } else if constexpr (std::is_same_v<T, CaopProbitParams>) {
                set_if(q.n_products, f.n);
                set_if(q.tau, f.tau);
                set_if(q.variance, f.variance);
            } else if constexpr (std::is_same_v<T, CaopKappaParams>) {
                set_if(q.n_options, f.n);
                set_if(q.tau, f.tau);
                set_if(q.kappa, f.kappa);
            } else if constexpr (std::is_same_v<T, FlopParams>) {
                set_if(q.n_facilities, f.n);
                set_if(q.tau, f.tau);
                set_if(q.n_levels, f.levels);
                set_if(q.budget, f.budget);
            } else {
                set_if(q.n_facilities, f.n);
                set_if(q.tau, f.tau);
                set_if(q.outside, f.outside);
            }
        },
        p);
    try {
        validate(p);
    } catch (const std::invalid_argument &e) {
        throw UsageError(e.what());
    }
    return p;
}

struct SolverFlags {
    std::string method = "sbbd";
    double time_limit = 3600.0;
    double mrv = 1e-5;
    bool reduced = false;
    std::size_t cap = 400000;
};

void add_solver_flags(CLI::App *sub, SolverFlags &s) {
    sub->add_option("--method", s.method, "sbbd, extensive (alias milp) or enum")
        ->check(CLI::IsMember({"sbbd", "extensive", "milp", "enum"}));
    sub->add_option("--time-limit", s.time_limit, "Seconds per solve")->check(CLI::PositiveNumber);
    sub->add_option("--mrv", s.mrv, "Minimum relative violation for cuts")->check(CLI::NonNegativeNumber);
    sub->add_flag("--reduced", s.reduced, "Extensive form without dominance rows");
    sub->add_option("--cap", s.cap, "Extensive-form cap on N * |J|");
}

SolveConfig build_config(const SolverFlags &s, const Globals &g) {
    SolveConfig cfg;
    cfg.method = method_from_string(s.method);
    cfg.time_limit = s.time_limit;
    cfg.mrv = s.mrv;
    cfg.reduced_model = s.reduced;
    cfg.extensive_cap = s.cap;
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

fs::path with_suffix(const fs::path &prefix, const std::string &suffix) { return fs::path(prefix.string() + suffix); }

RunManifest manifest_for(const std::string &command, const Globals &g) {
    RunManifest m;
    m.command = command;
    std::string line;
    for (const auto &a : g.argv) line += (line.empty() ? "" : " ") + a;
    m.extra["argv"] = line;
    m.extra["threads"] = g.threads;
    return m;
}

int cmd_generate(const AppFlags &f, bool compact, const Globals &g) {
    const auto params = build_params(f, g);
    if (g.output.empty()) throw UsageError("generate needs --output");
    const fs::path out = g.output;
    const auto inst = generate(params);
    save_instance(out, inst, compact);
    auto m = manifest_for("generate", g);
    m.experiment_id = out.stem().string();
    m.app_params = to_json(params);
    m.outputs["instance"] = out.string();
    m.seeds["instance"] = std::visit([](const auto &q) { return q.instance_seed; }, params);
    m.seeds["scenario"] = scenario_seed(params);
    write_json(with_suffix(out, ".manifest.json"), to_json(m));
    std::cout << out.string() << "\n";
    return kExitOk;
}

int cmd_solve(const std::string &path, const SolverFlags &s, const std::string &id, const Globals &g) {
    const auto inst = load_instance(path);
    const auto cfg = build_config(s, g);
    const std::string instance_id = id.empty() ? fs::path(path).stem().string() : id;
    fs::path prefix = g.output;
    if (prefix.empty()) prefix = fs::path(path).replace_extension("").string() + "." + to_string(cfg.method);
    const auto sol = solve(inst, cfg);

    const auto row = solve_csv_row(instance_id, sol);
    write_text(with_suffix(prefix, ".csv"), std::string(kSolveCsvHeader) + "\n" + row + "\n");
    auto j = to_json(sol);
    j["instance"] = instance_id;
    if (!sol.x.empty()) j["cooperative_fraction"] = cooperative_fraction(sol.x, inst);
    write_json(with_suffix(prefix, ".json"), j);

    auto m = manifest_for("solve", g);
    m.experiment_id = instance_id;
    m.solver = to_json(cfg);
    m.outputs["csv"] = with_suffix(prefix, ".csv").string();
    m.outputs["json"] = with_suffix(prefix, ".json").string();
    m.extra["instance_file"] = path;
    m.seeds["solver"] = cfg.seed;
    write_json(with_suffix(prefix, ".manifest.json"), to_json(m));

    std::cout << kSolveCsvHeader << "\n" << row << "\n";
    return sol.status == SolveStatus::Infeasible ? kExitInfeasible : kExitOk;
}

int cmd_validate(const AppFlags &f, const SolverFlags &s, int m, double alpha, std::size_t n_prime,
                 std::optional<std::uint64_t> eval_seed, const Globals &g) {
    if (m < 2) throw UsageError("variance needs M >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
    const auto params = build_params(f, g);
    const auto cfg = build_config(s, g);
    const std::uint64_t base = scenario_seed(params);
    const std::uint64_t eseed = eval_seed ? *eval_seed : base + 1000003;
    const auto reps = replicate_solve(params, n_scenarios(params), m, base, cfg);
    const auto report = estimate_gap(reps, params, n_prime, alpha, eseed);

    fs::path prefix = g.output;
    if (prefix.empty()) prefix = "validate-" + app_name(params) + "-" + to_string(scheme(params));
    auto j = to_json(report);
    j["app_params"] = to_json(params);
    Json values = Json::array();
    for (const auto &r : reps) values.push_back({{"scenario_seed", r.scenario_seed}, {"value", r.value}, {"x", r.x}});
    j["replications"] = values;
    write_json(with_suffix(prefix, ".json"), j);
    const auto row = gap_csv_row(report);
    write_text(with_suffix(prefix, ".csv"), std::string(kGapCsvHeader) + "\n" + row + "\n");

    auto man = manifest_for("validate", g);
    man.experiment_id = prefix.filename().string();
    man.app_params = to_json(params);
    man.solver = to_json(cfg);
    man.outputs["json"] = with_suffix(prefix, ".json").string();
    man.outputs["csv"] = with_suffix(prefix, ".csv").string();
    man.seeds["base"] = base;
    man.seeds["evaluation"] = eseed;
    man.extra["M"] = m;
    man.extra["alpha"] = alpha;
    man.extra["N_prime"] = n_prime;
    write_json(with_suffix(prefix, ".manifest.json"), to_json(man));

    std::cout << kGapCsvHeader << "\n" << row << "\n";
    return kExitOk;
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> source;
};

Table read_tables(const std::vector<std::string> &files) {
    Table t;
    for (const auto &file : files) {
        std::ifstream in(file);
        if (!in) throw UsageError("cannot open " + file);
        std::string line;
        if (!std::getline(in, line)) continue;
        const auto header = split_csv(line);
        if (t.header.empty()) {
            t.header = header;
        } else if (header != t.header) {
            throw UsageError("mixed CSV schemas: " + file + " differs from " + files.front());
        }
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_csv(line);
            if (cells.size() != t.header.size()) throw UsageError("ragged row in " + file);
            t.rows.push_back(std::move(cells));
            t.source.push_back(fs::path(file).stem().string());
        }
    }
    if (t.rows.empty()) throw UsageError("no rows to report");
    return t;
}

std::optional<double> as_number(const std::string &s) {
    if (s.empty()) return std::nullopt;
    char *end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

// Average of one metric per group as a minimal SVG bar chart.
std::string svg_bars(const std::vector<std::pair<std::string, double>> &bars, const std::string &metric) {
    const double w = 80.0, h = 240.0, pad = 40.0;
    double top = 0.0;
    for (const auto &b : bars) top = std::max(top, std::isfinite(b.second) ? b.second : 0.0);
    if (top <= 0.0) top = 1.0;
    std::ostringstream os;
    const double width = pad * 2 + w * static_cast<double>(bars.size());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << h + pad * 2 << "\">\n";
    os << "<text x=\"" << pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">avg " << metric
       << "</text>\n";
    for (std::size_t k = 0; k < bars.size(); ++k) {
        const double v = std::isfinite(bars[k].second) ? std::max(0.0, bars[k].second) : 0.0;
        const double bh = v / top * h;
        const double x = pad + w * static_cast<double>(k) + 10.0;
        os << "<rect x=\"" << x << "\" y=\"" << pad + h - bh << "\" width=\"" << w - 20.0 << "\" height=\"" << bh
           << "\" fill=\"#4878a8\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << pad + h + 16.0 << "\" font-family=\"sans-serif\" font-size=\"11\">"
           << bars[k].first << "</text>\n";
        os << "<text x=\"" << x << "\" y=\"" << pad + h - bh - 4.0
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << bars[k].second << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

int cmd_report(const std::vector<std::string> &files, const std::string &group_by, const std::string &plot,
               const std::string &plot_metric, const Globals &g) {
    if (files.empty()) throw UsageError("report needs at least one CSV");
    const auto t = read_tables(files);
    int key = -1;
    if (group_by != "file") {
        const auto it = std::find(t.header.begin(), t.header.end(), group_by);
        if (it == t.header.end()) throw UsageError("no column named " + group_by);
        key = static_cast<int>(it - t.header.begin());
    }
    // Numeric columns are those that parse in every row.
    std::vector<int> numeric;
    for (int c = 0; c < static_cast<int>(t.header.size()); ++c) {
        if (c == key) continue;
        bool ok = true;
        for (const auto &r : t.rows) ok = ok && as_number(r[c]).has_value();
        if (ok) numeric.push_back(c);
    }
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto &k = key < 0 ? t.source[i] : t.rows[i][key];
        if (!groups.count(k)) order.push_back(k);
        groups[k].push_back(i);
    }
    std::ostringstream os;
    os.precision(10);
    os << group_by << ",count";
    for (int c : numeric) os << ",min_" << t.header[c] << ",max_" << t.header[c] << ",avg_" << t.header[c];
    os << "\n";
    std::vector<std::pair<std::string, double>> bars;
    for (const auto &k : order) {
        const auto &idx = groups[k];
        os << k << "," << idx.size();
        for (int c : numeric) {
            double lo = kInf, hi = -kInf, sum = 0.0;
            for (auto i : idx) {
                const double v = *as_number(t.rows[i][c]);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                sum += v;
            }
            const double avg = sum / static_cast<double>(idx.size());
            os << "," << lo << "," << hi << "," << avg;
            if (t.header[c] == plot_metric) bars.emplace_back(k, avg);
        }
        os << "\n";
    }
    if (g.output.empty()) {
        std::cout << os.str();
    } else {
        write_text(g.output, os.str());
        std::cout << g.output << "\n";
    }
    if (!plot.empty()) {
        if (bars.empty()) throw UsageError("no numeric column named " + plot_metric);
        write_text(plot, svg_bars(bars, plot_metric));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Sample-average choice-based planning: instance generation, solving and validation"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    for (int k = 0; k < argc; ++k) g.argv.emplace_back(argv[k]);
    app.add_option("--seed", g.seed, "Seed override (instance seed for generate/validate, solver seed for solve)");
    app.add_option("--threads", g.threads, "Worker threads (the solver runs single-threaded)")
        ->check(CLI::PositiveNumber);
    app.add_option("-o,--output", g.output, "Output file or prefix");

    auto *gen = app.add_subcommand("generate", "Write an instance file");
    AppFlags gen_flags;
    bool compact = false;
    add_app_flags(gen, gen_flags, true);
    gen->add_flag("--compact", compact, "Store scenario matrices as base64 float64 blocks");

    auto *sol = app.add_subcommand("solve", "Solve an instance file");
    std::string inst_path, inst_id;
    SolverFlags sol_flags;
    sol->add_option("instance", inst_path, "Instance JSON")->required();
    sol->add_option("--id", inst_id, "Instance id for the CSV row (default: file stem)");
    add_solver_flags(sol, sol_flags);

    auto *val = app.add_subcommand("validate", "Estimate the SAA optimality gap");
    AppFlags val_flags;
    SolverFlags val_solver;
    int m = 20;
    double alpha = 0.95;
    double n_prime = 1e6;
    std::optional<std::uint64_t> eval_seed;
    add_app_flags(val, val_flags, false);
    add_solver_flags(val, val_solver);
    val->add_option("--m", m, "Replications M");
    val->add_option("--alpha", alpha, "Confidence level");
    val->add_option("--n-prime", n_prime, "Evaluation sample size N'")->check(CLI::Range(2.0, 1e9));
    val->add_option("--eval-seed", eval_seed, "Seed of the evaluation sample");

    auto *rep = app.add_subcommand("report", "Summarize result CSVs");
    std::vector<std::string> files;
    std::string group_by = "method", plot, plot_metric = "t_s";
    rep->add_option("csv", files, "Result CSV files");
    rep->add_option("--group-by", group_by, "Column to group by, or 'file' to group by source file");
    rep->add_option("--plot", plot, "Write an SVG bar chart of a group average");
    rep->add_option("--plot-metric", plot_metric, "Column plotted by --plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitUsage;
    }

    try {
        if (*gen) return cmd_generate(gen_flags, compact, g);
        if (*sol) return cmd_solve(inst_path, sol_flags, inst_id, g);
        if (*val) {
            return cmd_validate(val_flags, val_solver, m, alpha, static_cast<std::size_t>(n_prime), eval_seed, g);
        }
        if (*rep) return cmd_report(files, group_by, plot, plot_metric, g);
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CapacityError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const InfeasibleError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const ReplicationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
