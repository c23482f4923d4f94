// config.hpp - flat key=value run configuration for the CLI front end

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinbath/heom.hpp"
#include "spinbath/model.hpp"

namespace spinbath {

enum class Task { simulate, stcf, blp, volume, rates, kernel, sweep };

std::string to_string(Task task);
Task task_from_string(const std::string& name);

struct SweepAxis {
    std::string name;  // omega_drive | eta | beta
    std::vector<double> values;
};

struct McConfig {
    int n_samples = 10000;
    std::optional<std::uint64_t> seed;
};

struct RunConfig {
    ModelParams model;
    HeomConfig heom;
    Task task = Task::stcf;
    std::optional<SweepAxis> sweep;
    McConfig mc;
    std::string output_dir = ".";
    // initial Bloch vector for task=simulate
    double v0x = 0.0, v0y = 0.0, v0z = 1.0;
    double kernel_delta = 0.9;     // delta of the kernel timescale
    double eternal_t_min = 0.5;    // rate-negativity window start
    int threads = 1;

    void validate() const;

    // Parses the documented key=value grammar ('#' comments allowed).
    // Unknown or malformed keys raise ConfigError naming the key.
    static RunConfig from_text(const std::string& text);
    // Canonical serialization; from_text(to_text()) round-trips.
    std::string to_text() const;
};

}  // namespace spinbath
