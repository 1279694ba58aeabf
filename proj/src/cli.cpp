#include "kahan/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include "kahan/csv.hpp"

namespace kahan::cli {

namespace {

using nlohmann::json;

struct RunConfig {
    std::string command;
    std::string system;
    std::string file;
    std::string method = "kahan";
    std::string a;  // single value, or a comma-separated list for `drift`
    double h = std::numeric_limits<double>::quiet_NaN();
    std::optional<long> steps;
    std::string x0;
    std::vector<double> bbox;
    int res = 200;
    long stride = 0;
    unsigned long seed = 1;
    std::string out;
    bool full_scale = false;
    bool dump = false;
    std::string quantity = "htilde";
};

class Usage : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

CatalogEntry load_entry(const RunConfig& cfg) {
    if (cfg.system.empty() == cfg.file.empty()) throw Usage("exactly one of --system or --file is required");
    if (!cfg.system.empty()) {
        try {
            return catalog_entry(cfg.system);
        } catch (const std::out_of_range& e) {
            throw Usage(e.what());
        }
    }
    return entry_from_spec(load_system(cfg.file));
}

double require_h(const RunConfig& cfg) {
    if (!std::isfinite(cfg.h)) throw Usage("--h is required");
    if (cfg.h == 0.0) throw Usage("--h must be nonzero");
    return cfg.h;
}

double first_a(const RunConfig& cfg) {
    if (cfg.a.empty()) return -0.5;
    const auto values = parse_list(cfg.a);
    if (values.size() != 1) throw Usage("--a takes a single value for this command");
    return values.front();
}

VectorXd initial_state(const RunConfig& cfg, const CatalogEntry& entry) {
    if (cfg.x0.empty()) return entry.x0;
    const auto values = parse_list(cfg.x0);
    if (static_cast<long>(values.size()) != entry.spec.n)
        throw Usage("--x0 needs " + std::to_string(entry.spec.n) + " comma-separated values");
    return Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

GridBox grid_box(const RunConfig& cfg, const CatalogEntry& entry) {
    const long n = entry.spec.n;
    GridBox box;
    if (cfg.bbox.empty()) {
        if (n != 2) throw Usage("--bbox is required for systems with n != 2");
        box.x_lo = box.y_lo = -2.0;
        box.x_hi = box.y_hi = 2.0;
        return box;
    }
    if (cfg.bbox.size() == 4) {
        box.x_lo = cfg.bbox[0];
        box.x_hi = cfg.bbox[1];
        box.y_lo = cfg.bbox[2];
        box.y_hi = cfg.bbox[3];
        return box;
    }
    if (static_cast<long>(cfg.bbox.size()) != 2 * n) throw Usage("--bbox takes 4 or 2n floats");
    // lo == hi pins a coordinate; exactly two axes must span an interval.
    std::vector<Eigen::Index> axes;
    box.base = VectorXd::Zero(n);
    for (long i = 0; i < n; ++i) {
        const double lo = cfg.bbox[static_cast<std::size_t>(2 * i)];
        const double hi = cfg.bbox[static_cast<std::size_t>(2 * i + 1)];
        if (lo == hi) {
            box.base[i] = lo;
        } else {
            axes.push_back(i);
        }
    }
    if (axes.size() != 2) throw Usage("--bbox with 2n floats must span exactly two axes");
    box.ax = axes[0];
    box.ay = axes[1];
    box.x_lo = cfg.bbox[static_cast<std::size_t>(2 * box.ax)];
    box.x_hi = cfg.bbox[static_cast<std::size_t>(2 * box.ax + 1)];
    box.y_lo = cfg.bbox[static_cast<std::size_t>(2 * box.ay)];
    box.y_hi = cfg.bbox[static_cast<std::size_t>(2 * box.ay + 1)];
    return box;
}

void emit(const RunConfig& cfg, const std::string& content, std::ostream& out) {
    if (cfg.out.empty()) {
        out << content;
    } else {
        write_file_atomic(cfg.out, content);
    }
}

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

int cmd_integrate(const RunConfig& cfg, std::ostream& out) {
    const auto entry = load_entry(cfg);
    const double h = require_h(cfg);
    const auto method = parse_method(cfg.method, first_a(cfg));
    const long steps = cfg.steps.value_or(1000);
    IterateOptions opts;
    opts.stride = cfg.stride;
    const VectorXd x0 = initial_state(cfg, entry);
    const auto vf = entry.spec.vector_field();
    const auto traj = iterate(method, vf, x0, h, steps, {}, opts);

    json report{{"system", entry.spec.name},
                {"method", method.name()},
                {"h", h},
                {"steps", steps},
                {"steps_completed", traj.steps_completed},
                {"truncation", to_string(traj.truncation)},
                {"x0", vec_json(x0)}};
    if (entry.spec.hamiltonian) {
        const auto sys = entry.spec.hamiltonian_system();
        report["conserved"] = report_json(conserved_report(sys, traj));
        emit(cfg, trajectory_csv(traj, &sys), out);
    } else {
        emit(cfg, trajectory_csv(traj, nullptr), out);
    }
    if (!cfg.out.empty()) {
        write_file_atomic(cfg.out + ".report.json", report.dump(2) + "\n");
        out << report.dump(2) << "\n";
    }
    return kOk;
}

int cmd_drift(const RunConfig& cfg, std::ostream& out) {
    const auto entry = load_entry(cfg);
    const double h = require_h(cfg);
    std::vector<double> as;
    if (cfg.a.empty()) {
        for (int i = -10; i <= 10; ++i) as.push_back(i / 20.0);
        as.push_back(1.0 / 6.0);
        as.push_back(-0.3);
        as.push_back(0.35);
        std::sort(as.begin(), as.end());
    } else {
        as = parse_list(cfg.a);
    }
    const long steps = cfg.steps.value_or(cfg.full_scale ? 2000000 : 200000);
    const auto sweep = drift_sweep(entry, as, h, steps, initial_state(cfg, entry));
    emit(cfg, sweep_csv(sweep), out);
    return kOk;
}

int cmd_levelset(const RunConfig& cfg, std::ostream& out) {
    const auto entry = load_entry(cfg);
    GridQuantity q;
    double h = 0.0;
    if (cfg.quantity == "h" || cfg.quantity == "H") {
        q = GridQuantity::H;
        if (std::isfinite(cfg.h)) h = cfg.h;
    } else if (cfg.quantity == "htilde" || cfg.quantity == "Htilde") {
        q = GridQuantity::Htilde;
        h = require_h(cfg);
    } else {
        throw Usage("--quantity must be h or htilde");
    }
    if (!entry.spec.hamiltonian) throw Usage("levelset needs a Hamiltonian system");
    if (cfg.res < 1) throw Usage("--res must be positive");
    emit(cfg, grid_csv(level_set_grid(entry, q, h, grid_box(cfg, entry), cfg.res)), out);
    return kOk;
}

int cmd_portrait(const RunConfig& cfg, std::ostream& out) {
    const auto entry = load_entry(cfg);
    const double h = require_h(cfg);
    const auto method = parse_method(cfg.method, first_a(cfg));
    const long steps = cfg.steps.value_or(1000);
    std::vector<VectorXd> inits = entry.portrait_inits;
    if (!cfg.x0.empty()) inits = {initial_state(cfg, entry)};
    const auto orbits = phase_portrait(entry, method, h, inits, steps, std::max(1L, cfg.stride));
    emit(cfg, portrait_csv(orbits, entry.spec.n), out);
    return kOk;
}

int cmd_singular(const RunConfig& cfg, std::ostream& out) {
    const auto entry = load_entry(cfg);
    const double h = require_h(cfg);
    if (cfg.res < 1) throw Usage("--res must be positive");
    emit(cfg, points_csv(singular_scan(entry, h, grid_box(cfg, entry), cfg.res), entry.spec.n), out);
    return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
    const auto entry = load_entry(cfg);
    const auto report = verify_report(entry, require_h(cfg), cfg.seed);
    emit(cfg, report.dump(2) + "\n", out);
    if (!cfg.out.empty()) out << (report.at("pass").get<bool>() ? "PASS" : "FAIL") << "\n";
    return report.at("pass").get<bool>() ? kOk : kVerifyFailed;
}

int cmd_catalog(const RunConfig& cfg, std::ostream& out) {
    if (cfg.dump) {
        const auto entry = load_entry(cfg);
        emit(cfg, system_to_json(entry.spec).dump(2) + "\n", out);
        return kOk;
    }
    json listing = json::array();
    for (const auto& e : catalog())
        listing.push_back({{"name", e.spec.name},
                           {"n", e.spec.n},
                           {"notes", e.spec.notes},
                           {"recommended_h", e.recommended_h},
                           {"x0", vec_json(e.x0)},
                           {"provenance", e.provenance}});
    emit(cfg, listing.dump(2) + "\n", out);
    return kOk;
}

// verify helpers

json check(const std::string& name, double value, double tolerance, bool pass) {
    json j{{"name", name}, {"pass", pass}, {"tolerance", tolerance}};
    j["value"] = std::isfinite(value) ? json(value) : json(nullptr);
    return j;
}

json check_le(const std::string& name, double value, double tolerance) {
    return check(name, value, tolerance, std::isfinite(value) && value <= tolerance);
}

double rel(const VectorXd& a, const VectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

}  // namespace

MethodId parse_method(const std::string& text, double a) {
    if (text == "kahan") return MethodId::kahan();
    if (text == "suzuki") return MethodId::suzuki_kahan();
    if (text == "midpoint") return MethodId::midpoint();
    if (text == "trapezoidal") return MethodId::trapezoidal();
    if (text == "simpson") return MethodId::simpson();
    if (text == "family") return MethodId::family(a);
    if (text.rfind("family:", 0) == 0) {
        const auto values = parse_list(text.substr(7));
        if (values.size() != 1) throw std::invalid_argument("method family:<a> needs one number");
        return MethodId::family(values.front());
    }
    throw std::invalid_argument("unknown method '" + text + "'");
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("not a number: '" + item + "'");
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used != item.size()) throw std::invalid_argument("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty number list");
    return out;
}

json verify_report(const CatalogEntry& entry, double h, unsigned long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto vf = entry.spec.vector_field();
    const Eigen::Index n = vf.dim();
    const auto near_x0 = [&] {
        VectorXd x = entry.x0;
        for (Eigen::Index i = 0; i < n; ++i) x[i] += 0.05 * gauss(rng);
        return x;
    };
    const std::vector<double> family = {-0.5, 0.0, 1.0 / 6.0, 0.5};
    json checks = json::array();

    {
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const VectorXd x = near_x0();
            const VectorXd k = kahan_step(vf, x, h).x_next;
            worst = std::max({worst, rel(kahan_step_rosenbrock(vf, x, h).x_next, k),
                              rel(family_step(-0.5, vf, x, h).x_next, k)});
        }
        checks.push_back(check_le("equivalence", worst, 1e-10));
    }
    {
        double worst = 0.0;
        for (double a : family)
            for (int trial = 0; trial < 5; ++trial) {
                const VectorXd x = near_x0();
                const VectorXd y = family_step(a, vf, x, h).x_next;
                worst = std::max(worst, rel(family_step(a, vf, y, -h).x_next, x));
            }
        checks.push_back(check_le("symmetry", worst, 1e-10));
    }
    {
        // Global error at t = 1 for h = 0.1, 0.05, 0.025; each halving should gain 4 +- 15%.
        const VectorXd exact = reference_flow(vf, entry.x0, 1.0, 1e-13);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double a : family) {
            std::vector<double> errs;
            for (int steps : {10, 20, 40}) {
                VectorXd x = entry.x0;
                for (int s = 0; s < steps; ++s) x = family_step(a, vf, x, 1.0 / steps).x_next;
                errs.push_back((x - exact).norm());
            }
            for (std::size_t i = 1; i < errs.size(); ++i) {
                lo = std::min(lo, errs[i - 1] / errs[i]);
                hi = std::max(hi, errs[i - 1] / errs[i]);
            }
        }
        json c = check("order", lo, 0.15, lo >= 4.0 * 0.85 && hi <= 4.0 * 1.15);
        c["ratio_min"] = lo;
        c["ratio_max"] = hi;
        checks.push_back(std::move(c));
    }
    if (entry.spec.hamiltonian) {
        const auto sys = entry.spec.hamiltonian_system();
        const auto traj = iterate(MethodId::kahan(), vf, entry.x0, h, 1000);
        const auto report = conserved_report(sys, traj);
        const auto* ht = report.find("Htilde");
        checks.push_back(check_le("conservation_htilde", traj.truncated() ? NAN : ht->max_relative_drift, 1e-10));
        double cas = 0.0;
        for (const auto& s : report.series)
            if (s.name.rfind("casimir_", 0) == 0) {
                for (double v : s.values) cas = std::max(cas, std::abs(v - s.values.front()));
                cas /= 1.0 + std::abs(s.values.front());
            }
        checks.push_back(check_le("conservation_casimir", traj.truncated() ? NAN : cas, 1e-12));
        double even = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const VectorXd x = near_x0();
            const double p = modified_hamiltonian(sys, x, h);
            even = std::max(even, std::abs(p - modified_hamiltonian(sys, x, -h)) / (1.0 + std::abs(p)));
        }
        checks.push_back(check_le("evenness", even, 1e-11));

        double measure = 0.0;
        for (double a : {-0.5, 0.0, 0.5}) {
            const auto t = iterate(MethodId::family(a), vf, entry.x0, h, 200);
            measure = std::max(measure, t.truncated() ? NAN : measure_defect(a, vf, t.states, h));
        }
        checks.push_back(check_le("measure", measure, 1e-9));

        const auto degrees = verify_degree_bounds(sys, h, 3, rng);
        json c = check("degree_bounds", 0.0, 0.0, degrees.all_hold());
        for (const auto& d : degrees.checks) c[d.name] = {{"bound", d.bound}, {"observed", d.observed}};
        checks.push_back(std::move(c));
    }
    bool pass = true;
    for (const auto& c : checks) pass = pass && c.at("pass").get<bool>();
    return {{"system", entry.spec.name}, {"h", h}, {"seed", seed}, {"checks", std::move(checks)}, {"pass", pass}};
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Kahan's discretization of quadratic vector fields: integrate, sweep, and verify",
                 "kahan-geom"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");  // -h would collide with --h

    const auto source = [&](CLI::App* sub) {
        sub->add_option("--system", cfg.system, "catalog system name");
        sub->add_option("--file", cfg.file, "JSON system spec");
        sub->add_option("--out", cfg.out, "output file (default stdout)");
    };
    const auto stepping = [&](CLI::App* sub) {
        sub->add_option("--method", cfg.method, "kahan | family:<a> | family | suzuki | midpoint | trapezoidal | simpson");
        sub->add_option("--a", cfg.a, "family parameter (drift: comma-separated list)");
        sub->add_option("--h", cfg.h, "step size");
        sub->add_option("--steps", cfg.steps, "number of steps")->check(CLI::NonNegativeNumber);
        sub->add_option("--x0", cfg.x0, "initial state, comma-separated");
        sub->add_option("--stride", cfg.stride, "recording stride");
    };
    const auto grid = [&](CLI::App* sub) {
        sub->add_option("--h", cfg.h, "step size");
        sub->add_option("--bbox", cfg.bbox, "4 floats (x_lo x_hi y_lo y_hi) or 2n floats (lo hi per axis)")
            ->expected(4, 64);
        sub->add_option("--res", cfg.res, "grid resolution per axis");
    };

    auto* integrate = app.add_subcommand("integrate", "trajectory CSV and conserved-quantity report");
    source(integrate);
    stepping(integrate);

    auto* drift = app.add_subcommand("drift", "energy-drift sweep over the family parameter");
    source(drift);
    stepping(drift);
    drift->add_flag("--full-scale", cfg.full_scale, "use 2e6 steps by default");

    auto* levelset = app.add_subcommand("levelset", "grid of H or Htilde with singular-set mask");
    source(levelset);
    grid(levelset);
    levelset->add_option("--quantity", cfg.quantity, "h | htilde");

    auto* portrait = app.add_subcommand("portrait", "orbit points for phase portraits");
    source(portrait);
    stepping(portrait);

    auto* singular = app.add_subcommand("singular", "grid points near det(I - h/2 f') = 0");
    source(singular);
    grid(singular);

    auto* verify = app.add_subcommand("verify", "randomized property checks (JSON report)");
    source(verify);
    verify->add_option("--h", cfg.h, "step size");
    verify->add_option("--seed", cfg.seed, "random seed");

    auto* cat = app.add_subcommand("catalog", "list built-in systems");
    cat->add_option("--system", cfg.system, "system to dump");
    cat->add_option("--out", cfg.out, "output file (default stdout)");
    cat->add_flag("--dump", cfg.dump, "print the SystemSpec JSON of --system");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }

    try {
        if (integrate->parsed()) return cmd_integrate(cfg, out);
        if (drift->parsed()) return cmd_drift(cfg, out);
        if (levelset->parsed()) return cmd_levelset(cfg, out);
        if (portrait->parsed()) return cmd_portrait(cfg, out);
        if (singular->parsed()) return cmd_singular(cfg, out);
        if (verify->parsed()) return cmd_verify(cfg, out);
        if (cat->parsed()) return cmd_catalog(cfg, out);
    } catch (const std::ios_base::failure& e) {
        err << "kahan-geom: " << e.what() << "\n";
        return kIo;
    } catch (const nlohmann::json::exception& e) {
        err << "kahan-geom: invalid system file: " << e.what() << "\n";
        return kValidation;
    } catch (const std::invalid_argument& e) {
        err << "kahan-geom: " << e.what() << "\n" << app.help();
        return kValidation;
    } catch (const std::exception& e) {
        err << "kahan-geom: " << e.what() << "\n";
        return kValidation;
    }
    return kValidation;
}

}  // namespace kahan::cli
