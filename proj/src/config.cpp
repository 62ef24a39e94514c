#include "aggdiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "aggdiff/error.hpp"

namespace aggdiff {
namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
    throw Error("config", "line " + std::to_string(line_no) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& v, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) fail(line_no, "trailing characters in number '" + v + "'");
        return d;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(line_no, "expected a number, got '" + v + "'");
    }
}

std::size_t parse_count(const std::string& v, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const long long n = std::stoll(v, &used);
        if (used != v.size() || n < 0) fail(line_no, "expected a nonnegative integer, got '" + v + "'");
        return static_cast<std::size_t>(n);
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail(line_no, "expected a nonnegative integer, got '" + v + "'");
    }
}

/// Parse "name(arg1, arg2)" into kind + args.
InitialSpec parse_shape(const std::string& v, std::size_t line_no) {
    const std::size_t open = v.find('(');
    const std::size_t close = v.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open ||
        close + 1 != v.size()) {
        fail(line_no, "expected shape(args), got '" + v + "'");
    }
    InitialSpec spec;
    spec.kind = trim(v.substr(0, open));
    const std::string inner = v.substr(open + 1, close - open - 1);

    std::vector<std::string> args;
    std::string cur;
    std::stringstream ss(inner);
    while (std::getline(ss, cur, ',')) args.push_back(trim(cur));
    if (args.size() == 1 && args[0].empty()) args.clear();

    if (spec.kind == "triangle" || spec.kind == "gaussian" || spec.kind == "uniform") {
        if (args.size() != 2) fail(line_no, spec.kind + " takes two numeric arguments");
        spec.a = parse_double(args[0], line_no);
        spec.b = parse_double(args[1], line_no);
        if (spec.kind == "uniform" && !(spec.b > spec.a)) {
            fail(line_no, "uniform(a, b) needs b > a");
        }
        if (spec.kind != "uniform" && !(spec.b > 0.0)) {
            fail(line_no, spec.kind + " needs a positive scale argument");
        }
    } else if (spec.kind == "table") {
        if (args.size() != 1 || args[0].empty()) fail(line_no, "table takes one path argument");
        spec.table_path = args[0];
    } else {
        fail(line_no, "unknown shape '" + spec.kind + "'");
    }
    return spec;
}

struct KeyHandler {
    std::function<void(ExperimentConfig&, const std::string&, std::size_t)> set;
};

void set_kernel_spec_key(KernelSpec& ks, const std::string& field, const std::string& v,
                         std::size_t line_no) {
    if (field == "family") {
        if (v != "gaussian" && v != "tabulated") fail(line_no, "unknown kernel family '" + v + "'");
        ks.family = v;
    } else if (field == "amplitude") {
        ks.amplitude = parse_double(v, line_no);
    } else if (field == "width") {
        ks.width = parse_double(v, line_no);
    } else if (field == "table") {
        ks.table_path = v;
    } else {
        fail(line_no, "unknown kernel field '" + field + "'");
    }
}

Kernel build_kernel(const KernelSpec& ks) {
    if (ks.family == "tabulated") {
        std::ifstream in(ks.table_path);
        if (!in) throw Error("config", "cannot open kernel table '" + ks.table_path + "'");
        std::vector<double> xs, vals;
        double x = 0.0, val = 0.0;
        while (in >> x >> val) {
            xs.push_back(x);
            vals.push_back(val);
        }
        if (xs.size() < 2) {
            throw Error("config", "kernel table '" + ks.table_path + "' needs at least 2 rows");
        }
        const double dx = xs[1] - xs[0];
        if (!(dx > 0.0)) {
            throw Error("config", "kernel table '" + ks.table_path + "' must have increasing x");
        }
        for (std::size_t i = 1; i < xs.size(); ++i) {
            if (std::abs(xs[i] - xs[i - 1] - dx) > 1e-9 * dx) {
                throw Error("config",
                            "kernel table '" + ks.table_path + "' must be uniformly spaced");
            }
        }
        return make_tabulated(xs.front(), dx, std::move(vals));
    }
    return make_gaussian(ks.amplitude, ks.width);
}

GridDensity load_table_density(const std::string& path, double x0, double dx,
                               std::size_t n_nodes) {
    std::ifstream in(path);
    if (!in) throw Error("config", "cannot open density table '" + path + "'");
    std::vector<double> xs, vals;
    double x = 0.0, v = 0.0;
    while (in >> x >> v) {
        xs.push_back(x);
        vals.push_back(v);
    }
    if (xs.size() < 2) throw Error("config", "density table '" + path + "' needs at least 2 rows");
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
            throw Error("config", "density table '" + path + "' must have strictly increasing x");
        }
    }
    // Linear interpolation onto the grid, zero outside the tabulated window.
    std::vector<double> out(n_nodes, 0.0);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        const double xi = x0 + static_cast<double>(i) * dx;
        if (xi < xs.front() || xi > xs.back()) continue;
        const auto it = std::lower_bound(xs.begin(), xs.end(), xi);
        std::size_t j = static_cast<std::size_t>(it - xs.begin());
        if (j == 0) {
            out[i] = vals[0];
            continue;
        }
        if (j >= xs.size()) j = xs.size() - 1;
        const double t = (xi - xs[j - 1]) / (xs[j] - xs[j - 1]);
        out[i] = (1.0 - t) * vals[j - 1] + t * vals[j];
    }
    return make_grid_density(x0, dx, std::move(out));
}

void format_kernel_block(std::ostream& os, const char* prefix, const KernelSpec& ks) {
    os << prefix << "family = " << ks.family << '\n';
    if (ks.family == "tabulated") {
        os << prefix << "table = " << ks.table_path << '\n';
    } else {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", ks.amplitude);
        os << prefix << "amplitude = " << buf << '\n';
        std::snprintf(buf, sizeof(buf), "%.17g", ks.width);
        os << prefix << "width = " << buf << '\n';
    }
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    bool saw_anything = false;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        saw_anything = true;

        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"model",    "kernels", "initial1", "initial2",
                                          "particles", "grid",    "steady",   "map",
                                          "coercivity", "compare", "run"};
            bool ok = false;
            for (const char* s : known) ok = ok || section == s;
            if (!ok) fail(line_no, "unknown section '" + section + "'");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) fail(line_no, "empty key");
        if (val.empty()) fail(line_no, "empty value for '" + key + "'");
        if (section.empty()) fail(line_no, "key '" + key + "' outside any section");

        if (section == "model") {
            if (key == "eps") cfg.eps = parse_double(val, line_no);
            else if (key == "mass1") cfg.mass1 = parse_double(val, line_no);
            else if (key == "mass2") cfg.mass2 = parse_double(val, line_no);
            else fail(line_no, "unknown key '" + key + "' in [model]");
        } else if (section == "kernels") {
            if (key == "sigma1") cfg.sigma1 = parse_double(val, line_no);
            else if (key == "sigma2") cfg.sigma2 = parse_double(val, line_no);
            else if (key.rfind("base_", 0) == 0) set_kernel_spec_key(cfg.base, key.substr(5), val, line_no);
            else if (key.rfind("s1_", 0) == 0) { cfg.explicit_kernels = true; set_kernel_spec_key(cfg.s1, key.substr(3), val, line_no); }
            else if (key.rfind("s2_", 0) == 0) { cfg.explicit_kernels = true; set_kernel_spec_key(cfg.s2, key.substr(3), val, line_no); }
            else if (key.rfind("k_", 0) == 0) { cfg.explicit_kernels = true; set_kernel_spec_key(cfg.k, key.substr(2), val, line_no); }
            else fail(line_no, "unknown key '" + key + "' in [kernels]");
        } else if (section == "initial1" || section == "initial2") {
            if (key != "shape") fail(line_no, "unknown key '" + key + "' in [" + section + "]");
            InitialSpec spec = parse_shape(val, line_no);
            (section == "initial1" ? cfg.init1 : cfg.init2) = spec;
        } else if (section == "particles") {
            if (key == "n") cfg.n_particles = parse_count(val, line_no);
            else if (key == "t_final") cfg.t_final = parse_double(val, line_no);
            else if (key == "dt") cfg.dt = parse_double(val, line_no);
            else if (key == "dt_min") cfg.dt_min = parse_double(val, line_no);
            else if (key == "gap_min") cfg.gap_min = parse_double(val, line_no);
            else if (key == "bandwidth_scale") cfg.bandwidth_scale = parse_double(val, line_no);
            else if (key == "bandwidth") cfg.bandwidth_override = parse_double(val, line_no);
            else if (key == "stability_safety") cfg.stability_safety = parse_double(val, line_no);
            else if (key == "snapshot_every") cfg.snapshot_every = parse_double(val, line_no);
            else fail(line_no, "unknown key '" + key + "' in [particles]");
        } else if (section == "grid") {
            if (key == "xmin") cfg.grid_xmin = parse_double(val, line_no);
            else if (key == "xmax") cfg.grid_xmax = parse_double(val, line_no);
            else if (key == "cells") cfg.grid_cells = parse_count(val, line_no);
            else fail(line_no, "unknown key '" + key + "' in [grid]");
        } else if (section == "steady") {
            if (key == "l1") cfg.steady_l1 = parse_double(val, line_no);
            else if (key == "l2") cfg.steady_l2 = parse_double(val, line_no);
            else if (key == "n1") cfg.steady_n1 = parse_count(val, line_no);
            else if (key == "n2") cfg.steady_n2 = parse_count(val, line_no);
            else if (key == "profile_cells") cfg.steady_profile_cells = parse_count(val, line_no);
            else if (key == "tol") cfg.steady_tol = parse_double(val, line_no);
            else if (key == "max_iter") cfg.steady_max_iter = parse_count(val, line_no);
            else fail(line_no, "unknown key '" + key + "' in [steady]");
        } else if (section == "map") {
            if (key == "l2_min") cfg.map_l2_min = parse_double(val, line_no);
            else if (key == "l2_max") cfg.map_l2_max = parse_double(val, line_no);
            else if (key == "steps") cfg.map_steps = parse_count(val, line_no);
            else if (key == "l1_fraction") cfg.map_l1_fraction = parse_double(val, line_no);
            else fail(line_no, "unknown key '" + key + "' in [map]");
        } else if (section == "coercivity") {
            if (key == "xi_max") cfg.coercivity_xi_max = parse_double(val, line_no);
            else if (key == "n_xi") cfg.coercivity_n_xi = parse_count(val, line_no);
            else fail(line_no, "unknown key '" + key + "' in [coercivity]");
        } else if (section == "compare") {
            if (key == "t_long") cfg.compare_t_long = parse_double(val, line_no);
            else if (key == "n") cfg.compare_n_particles = parse_count(val, line_no);
            else fail(line_no, "unknown key '" + key + "' in [compare]");
        } else if (section == "run") {
            if (key == "mode") cfg.mode = val;
            else if (key == "out") cfg.out_dir = val;
            else fail(line_no, "unknown key '" + key + "' in [run]");
        }
    }

    if (!saw_anything) throw Error("config", "empty config");
    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config", "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw Error("config", msg);
    };
    require(cfg.eps > 0.0, "eps must be > 0");
    require(cfg.mass1 > 0.0 && cfg.mass2 > 0.0, "masses must be > 0");
    require(cfg.n_particles >= 2, "n must be >= 2");
    require(cfg.t_final >= 0.0, "t_final must be >= 0");
    require(cfg.dt > 0.0, "dt must be > 0");
    require(cfg.dt_min > 0.0 && cfg.dt_min <= cfg.dt, "need 0 < dt_min <= dt");
    require(cfg.gap_min > 0.0, "gap_min must be > 0");
    require(cfg.bandwidth_scale > 0.0, "bandwidth_scale must be > 0");
    require(cfg.bandwidth_override >= 0.0, "bandwidth must be >= 0");
    require(cfg.stability_safety > 0.0 && cfg.stability_safety <= 1.0,
            "stability_safety must be in (0, 1]");
    require(cfg.snapshot_every > 0.0, "snapshot_every must be > 0");
    require(cfg.grid_xmax > cfg.grid_xmin, "grid needs xmax > xmin");
    require(cfg.grid_cells >= 2, "grid needs at least 2 cells");
    require(cfg.steady_l1 > 0.0 && cfg.steady_l2 > cfg.steady_l1,
            "steady supports need 0 < l1 < l2");
    require(cfg.steady_n1 >= 8 && cfg.steady_n2 >= 8, "steady grids need n1, n2 >= 8");
    require(cfg.steady_profile_cells >= 16, "steady profile needs >= 16 cells");
    require(cfg.steady_tol > 0.0, "steady tol must be > 0");
    require(cfg.steady_max_iter >= 1, "steady max_iter must be >= 1");
    require(cfg.map_l2_min > 0.0 && cfg.map_l2_max >= cfg.map_l2_min,
            "map needs 0 < l2_min <= l2_max");
    require(cfg.map_steps >= 1, "map steps must be >= 1");
    require(cfg.map_l1_fraction > 0.0 && cfg.map_l1_fraction < 1.0,
            "map l1_fraction must be in (0, 1)");
    require(cfg.coercivity_xi_max >= 0.0, "coercivity xi_max must be >= 0");
    require(cfg.coercivity_n_xi >= 2, "coercivity n_xi must be >= 2");
    require(cfg.compare_t_long >= 0.0, "compare t_long must be >= 0");
    require(cfg.compare_n_particles >= 2, "compare n must be >= 2");
    require(!cfg.explicit_kernels || (!cfg.s1.family.empty() && !cfg.s2.family.empty() &&
                                      !cfg.k.family.empty()),
            "explicit kernels need s1_*, s2_*, k_* blocks");
    static const char* modes[] = {"simulate", "steady-kr", "steady-asymptotic",
                                  "coercivity-check", "eps-map", "compare"};
    bool mode_ok = false;
    for (const char* m : modes) mode_ok = mode_ok || cfg.mode == m;
    require(mode_ok, "unknown mode '" + cfg.mode + "'");
}

KernelTriple build_triple(const ExperimentConfig& cfg) {
    if (cfg.explicit_kernels) {
        return KernelTriple{build_kernel(cfg.s1), build_kernel(cfg.s2), build_kernel(cfg.k)};
    }
    return make_triple_from_base(build_kernel(cfg.base), cfg.sigma1, cfg.sigma2);
}

GridDensity build_initial(const InitialSpec& spec, double mass, double x0, double dx,
                          std::size_t n_nodes) {
    GridDensity rho;
    if (spec.kind == "table") {
        rho = load_table_density(spec.table_path, x0, dx, n_nodes);
    } else {
        std::vector<double> vals(n_nodes, 0.0);
        for (std::size_t i = 0; i < n_nodes; ++i) {
            const double x = x0 + static_cast<double>(i) * dx;
            if (spec.kind == "triangle") {
                vals[i] = std::max(0.0, 1.0 - std::abs(x - spec.a) / spec.b);
            } else if (spec.kind == "gaussian") {
                const double z = (x - spec.a) / spec.b;
                vals[i] = std::exp(-0.5 * z * z);
            } else if (spec.kind == "uniform") {
                vals[i] = (x >= spec.a && x <= spec.b) ? 1.0 : 0.0;
            } else {
                throw Error("config", "unknown shape '" + spec.kind + "'");
            }
        }
        rho = make_grid_density(x0, dx, std::move(vals));
    }
    if (!(rho.mass > 0.0)) {
        throw Error("empty-density", "initial shape has zero mass on the grid");
    }
    const double scale = mass / rho.mass;
    for (double& v : rho.values) v *= scale;
    rho.mass = trapezoid_mass(rho);
    return rho;
}

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    auto shape = [&num](const InitialSpec& s) {
        if (s.kind == "table") return "table(" + s.table_path + ")";
        return s.kind + "(" + num(s.a) + ", " + num(s.b) + ")";
    };

    os << "[model]\n"
       << "eps = " << num(cfg.eps) << "\n"
       << "mass1 = " << num(cfg.mass1) << "\n"
       << "mass2 = " << num(cfg.mass2) << "\n\n";

    os << "[kernels]\n";
    if (cfg.explicit_kernels) {
        format_kernel_block(os, "s1_", cfg.s1);
        format_kernel_block(os, "s2_", cfg.s2);
        format_kernel_block(os, "k_", cfg.k);
    } else {
        format_kernel_block(os, "base_", cfg.base);
        os << "sigma1 = " << num(cfg.sigma1) << "\n"
           << "sigma2 = " << num(cfg.sigma2) << "\n";
    }
    os << "\n[initial1]\nshape = " << shape(cfg.init1) << "\n";
    os << "\n[initial2]\nshape = " << shape(cfg.init2) << "\n";

    os << "\n[particles]\n"
       << "n = " << cfg.n_particles << "\n"
       << "t_final = " << num(cfg.t_final) << "\n"
       << "dt = " << num(cfg.dt) << "\n"
       << "dt_min = " << num(cfg.dt_min) << "\n"
       << "gap_min = " << num(cfg.gap_min) << "\n"
       << "bandwidth_scale = " << num(cfg.bandwidth_scale) << "\n"
       << "bandwidth = " << num(cfg.bandwidth_override) << "\n"
       << "stability_safety = " << num(cfg.stability_safety) << "\n"
       << "snapshot_every = " << num(cfg.snapshot_every) << "\n";

    os << "\n[grid]\n"
       << "xmin = " << num(cfg.grid_xmin) << "\n"
       << "xmax = " << num(cfg.grid_xmax) << "\n"
       << "cells = " << cfg.grid_cells << "\n";

    os << "\n[steady]\n"
       << "l1 = " << num(cfg.steady_l1) << "\n"
       << "l2 = " << num(cfg.steady_l2) << "\n"
       << "n1 = " << cfg.steady_n1 << "\n"
       << "n2 = " << cfg.steady_n2 << "\n"
       << "profile_cells = " << cfg.steady_profile_cells << "\n"
       << "tol = " << num(cfg.steady_tol) << "\n"
       << "max_iter = " << cfg.steady_max_iter << "\n";

    os << "\n[map]\n"
       << "l2_min = " << num(cfg.map_l2_min) << "\n"
       << "l2_max = " << num(cfg.map_l2_max) << "\n"
       << "steps = " << cfg.map_steps << "\n"
       << "l1_fraction = " << num(cfg.map_l1_fraction) << "\n";

    os << "\n[coercivity]\n"
       << "xi_max = " << num(cfg.coercivity_xi_max) << "\n"
       << "n_xi = " << cfg.coercivity_n_xi << "\n";

    os << "\n[compare]\n"
       << "t_long = " << num(cfg.compare_t_long) << "\n"
       << "n = " << cfg.compare_n_particles << "\n";

    os << "\n[run]\n"
       << "mode = " << cfg.mode << "\n"
       << "out = " << cfg.out_dir << "\n";
    return os.str();
}

} // namespace aggdiff
