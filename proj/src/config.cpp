#include "vslab/config.hpp"

#include "vslab/fields.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace vslab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

ScenarioConfig ScenarioConfig::from_string(const std::string& text) {
    ScenarioConfig cfg;
    std::map<std::string, std::function<void(const std::string&)>> setters;

    auto set_real = [&](const char* key, real& ref) { setters[key] = [&ref](const std::string& v) { ref = std::stod(v); }; };
    auto set_int = [&](const char* key, int& ref) { setters[key] = [&ref](const std::string& v) { ref = std::stoi(v); }; };
    auto set_str = [&](const char* key, std::string& ref) { setters[key] = [&ref](const std::string& v) { ref = v; }; };
    auto set_bool = [&](const char* key, bool& ref) {
        setters[key] = [&ref](const std::string& v) { ref = (v == "1" || v == "true" || v == "yes"); };
    };

    set_real("T", cfg.T);
    setters["tau_splits"] = [&cfg](const std::string& v) {
        std::istringstream ss(v);
        std::string tok;
        for (int i = 0; i < 3; ++i) {
            if (!std::getline(ss, tok, ',')) throw VslabError("config: tau_splits needs three comma-separated values");
            cfg.tau_splits[i] = std::stod(tok);
        }
    };
    set_real("x0_1", cfg.x0_1);
    set_real("x0_2", cfg.x0_2);
    set_real("r0", cfg.r0);
    set_int("Nx", cfg.Nx);
    set_int("Nv", cfg.Nv);
    set_real("Vmax", cfg.Vmax);
    set_real("gamma", cfg.gamma);
    set_real("epsilon", cfg.epsilon);
    set_real("lambda", cfg.lambda);
    set_str("f0.kind", cfg.f0_kind);
    set_real("f0.sigma1", cfg.f0_sigma1);
    set_real("f0.sigma2", cfg.f0_sigma2);
    set_real("f0.mod1", cfg.f0_mod1);
    set_real("f0.mod2", cfg.f0_mod2);
    set_str("f0.snapshot", cfg.f0_snapshot);
    set_str("f1.kind", cfg.f1_kind);
    set_real("f1.sigma1", cfg.f1_sigma1);
    set_real("f1.sigma2", cfg.f1_sigma2);
    set_real("f1.mod1", cfg.f1_mod1);
    set_real("f1.mod2", cfg.f1_mod2);
    set_real("tol", cfg.tol);
    set_real("ctrl_tol", cfg.ctrl_tol);
    set_real("mean_tol", cfg.mean_tol);
    set_real("lap_tol", cfg.lap_tol);
    set_real("eps_fit", cfg.eps_fit);
    set_int("max_iter", cfg.max_iter);
    set_int("n_slices", cfg.n_slices);
    set_int("n_steps_per_unit", cfg.n_steps_per_unit);
    set_int("spray_samples", cfg.spray_samples);
    set_int("potential_table_n", cfg.potential_table_n);
    set_real("max_direction_norm", cfg.max_direction_norm);
    set_real("M_low", cfg.M_low);
    set_int("sweep_samples", cfg.sweep_samples);
    set_int("export_stride", cfg.export_stride);
    set_str("outdir", cfg.outdir);
    setters["seed"] = [&cfg](const std::string& v) { cfg.seed = std::stoull(v); };
    set_int("threads", cfg.threads);
    set_bool("two_phase", cfg.run_two_phase);
    set_bool("verify_sweeps", cfg.verify_sweeps);

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw VslabError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw VslabError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(val);
    }

    if (const char* env = std::getenv("VSLAB_OUTDIR")) cfg.outdir = env;
    cfg.validate();
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw VslabError("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_string(ss.str());
}

void ScenarioConfig::validate() const {
    if (!(gamma > 2.0)) throw VslabError("config: Theorem hypotheses require gamma > 2");
    if (!(r0 > 0.0) || !(2.0 * r0 < 0.5)) throw VslabError("config: need 0 < 2*r0 < 1/2");
    if (std::fabs(tau_splits[0] + tau_splits[1] + tau_splits[2] - T) > 1e-9)
        throw VslabError("config: tau_splits must sum to T");
    if (!(epsilon > 0)) throw VslabError("config: epsilon must be positive");
    PhaseGrid(Nx, Nv, Vmax);  // validates grid invariants
}

std::string ScenarioConfig::summary() const {
    std::ostringstream os;
    os << "T=" << T << " r0=" << r0 << " grid=" << Nx << "x" << Nv << " Vmax=" << Vmax << " gamma=" << gamma
       << " eps=" << epsilon << " lambda=" << lambda << " seed=" << seed;
    if (lambda != 1.0) os << "  [lambda != 1: outside certified regime]";
    return os.str();
}

}  // namespace vslab
