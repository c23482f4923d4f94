#include "spinbath/config.hpp"

#include <cmath>
#include <sstream>

#include "spinbath/errors.hpp"
#include "spinbath/io.hpp"

namespace spinbath {

std::string to_string(Task task) {
    switch (task) {
        case Task::simulate: return "simulate";
        case Task::stcf: return "stcf";
        case Task::blp: return "blp";
        case Task::volume: return "volume";
        case Task::rates: return "rates";
        case Task::kernel: return "kernel";
        case Task::sweep: return "sweep";
    }
    throw ConfigError("unreachable task value");
}

Task task_from_string(const std::string& name) {
    if (name == "simulate") return Task::simulate;
    if (name == "stcf") return Task::stcf;
    if (name == "blp") return Task::blp;
    if (name == "volume") return Task::volume;
    if (name == "rates") return Task::rates;
    if (name == "kernel") return Task::kernel;
    if (name == "sweep") return Task::sweep;
    throw ConfigError("unknown task '" + name + "'");
}

void RunConfig::validate() const {
    model.validate();
    heom.validate();
    if (task == Task::sweep) {
        if (!sweep || sweep->values.empty()) {
            throw ConfigError("sweep_values: required and non-empty for "
                              "task=sweep");
        }
        if (sweep->name != "omega_drive" && sweep->name != "eta" &&
            sweep->name != "beta") {
            throw ConfigError("sweep_axis: must be omega_drive, eta or beta");
        }
        for (double v : sweep->values) {
            if (!std::isfinite(v)) {
                throw ConfigError("sweep_values: values must be finite");
            }
        }
    }
    const bool uses_mc = task == Task::blp || task == Task::sweep;
    if (uses_mc && !mc.seed) {
        throw ConfigError("seed: required for tasks with Monte Carlo "
                          "sampling (blp, sweep)");
    }
    if (mc.n_samples < 1) throw ConfigError("n_samples: must be >= 1");
    if (!(kernel_delta > 0.0 && kernel_delta < 1.0)) {
        throw ConfigError("kernel_delta: must be in (0, 1)");
    }
    if (threads < 1) throw ConfigError("threads: must be >= 1");
    if (output_dir.empty()) throw ConfigError("out_dir: must not be empty");
}

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    bool have_sweep_axis = false;
    bool have_sweep_values = false;
    SweepAxis axis;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key=value, got '" + stripped + "'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));

        if (key == "delta") cfg.model.delta = parse_double(value, key);
        else if (key == "eps0") cfg.model.eps0 = parse_double(value, key);
        else if (key == "epsd") cfg.model.epsd = parse_double(value, key);
        else if (key == "omega") cfg.model.omega_drive = parse_double(value, key);
        else if (key == "eta") cfg.model.eta = parse_double(value, key);
        else if (key == "omega_c") cfg.model.omega_c = parse_double(value, key);
        else if (key == "beta") cfg.model.beta = parse_double(value, key);
        else if (key == "max_tier") {
            cfg.heom.max_tier = static_cast<int>(parse_double(value, key));
        } else if (key == "n_matsubara") {
            cfg.heom.n_matsubara = static_cast<int>(parse_double(value, key));
        } else if (key == "dt") {
            cfg.heom.dt = parse_double(value, key);
        } else if (key == "t_final") {
            cfg.heom.t_final = parse_double(value, key);
        } else if (key == "terminator") {
            if (value == "drop") cfg.heom.terminator = Terminator::drop;
            else if (value == "markovian_closure") {
                cfg.heom.terminator = Terminator::markovian_closure;
            } else {
                throw ConfigError("terminator: expected drop or "
                                  "markovian_closure, got '" + value + "'");
            }
        } else if (key == "task") {
            cfg.task = task_from_string(value);
        } else if (key == "sweep_axis") {
            axis.name = value;
            have_sweep_axis = true;
        } else if (key == "sweep_values") {
            for (const auto& tok : split(value, ',')) {
                axis.values.push_back(parse_double(tok, key));
            }
            have_sweep_values = true;
        } else if (key == "n_samples") {
            cfg.mc.n_samples = static_cast<int>(parse_double(value, key));
        } else if (key == "seed") {
            cfg.mc.seed = static_cast<std::uint64_t>(
                std::stoull(std::string(trim(value))));
        } else if (key == "out_dir") {
            cfg.output_dir = value;
        } else if (key == "v0x") cfg.v0x = parse_double(value, key);
        else if (key == "v0y") cfg.v0y = parse_double(value, key);
        else if (key == "v0z") cfg.v0z = parse_double(value, key);
        else if (key == "kernel_delta") cfg.kernel_delta = parse_double(value, key);
        else if (key == "eternal_t_min") cfg.eternal_t_min = parse_double(value, key);
        else if (key == "threads") {
            cfg.threads = static_cast<int>(parse_double(value, key));
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    if (have_sweep_axis || have_sweep_values) {
        if (!have_sweep_axis) throw ConfigError("sweep_axis: missing");
        if (!have_sweep_values) throw ConfigError("sweep_values: missing");
        cfg.sweep = axis;
    }
    cfg.validate();
    return cfg;
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    out << "task=" << to_string(task) << "\n";
    out << model.to_text();
    out << "max_tier=" << heom.max_tier << "\n"
        << "n_matsubara=" << heom.n_matsubara << "\n"
        << "dt=" << format_double(heom.dt) << "\n"
        << "t_final=" << format_double(heom.t_final) << "\n"
        << "terminator="
        << (heom.terminator == Terminator::drop ? "drop" : "markovian_closure")
        << "\n";
    if (sweep) {
        out << "sweep_axis=" << sweep->name << "\n";
        out << "sweep_values=";
        for (std::size_t i = 0; i < sweep->values.size(); ++i) {
            if (i) out << ',';
            out << format_double(sweep->values[i]);
        }
        out << "\n";
    }
    out << "n_samples=" << mc.n_samples << "\n";
    if (mc.seed) out << "seed=" << *mc.seed << "\n";
    out << "out_dir=" << output_dir << "\n";
    if (task == Task::simulate) {
        out << "v0x=" << format_double(v0x) << "\n"
            << "v0y=" << format_double(v0y) << "\n"
            << "v0z=" << format_double(v0z) << "\n";
    }
    out << "kernel_delta=" << format_double(kernel_delta) << "\n"
        << "eternal_t_min=" << format_double(eternal_t_min) << "\n"
        << "threads=" << threads << "\n";
    return out.str();
}

}  // namespace spinbath
