#include "spinbath/run.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <sstream>

#include <json.hpp>

#include "spinbath/diagnostics.hpp"
#include "spinbath/errors.hpp"
#include "spinbath/gqme.hpp"
#include "spinbath/io.hpp"
#include "spinbath/stcf.hpp"

namespace spinbath {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json model_json(const ModelParams& p) {
    return json{{"delta", p.delta},   {"eps0", p.eps0},
                {"epsd", p.epsd},     {"omega", p.omega_drive},
                {"eta", p.eta},       {"omega_c", p.omega_c},
                {"beta", p.beta}};
}

json heom_json(const HeomConfig& h) {
    return json{{"max_tier", h.max_tier},
                {"n_matsubara", h.n_matsubara},
                {"dt", h.dt},
                {"t_final", h.t_final},
                {"terminator", h.terminator == Terminator::drop
                                   ? "drop"
                                   : "markovian_closure"}};
}

// Tracks files written by one run so failures can clean up after
// themselves.
class OutputTracker {
  public:
    explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    void write(const std::string& name, std::string_view content,
               RunManifest& manifest) {
        const fs::path path = dir_ / name;
        write_file(path, content);
        written_.push_back(path);
        manifest.outputs.push_back({name, fnv1a64_hex(content)});
    }

    void discard_all() {
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written_.clear();
    }

    const fs::path& dir() const { return dir_; }

  private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

std::string scalar_csv(const char* header, const std::vector<double>& t,
                       const std::vector<double>& y) {
    std::ostringstream out;
    out << header << "\n";
    for (std::size_t k = 0; k < y.size(); ++k) {
        out << format_double(t[k]) << ',' << format_double(y[k]) << "\n";
    }
    return out.str();
}

std::vector<double> grid_times(double t0, double dt, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = t0 + static_cast<double>(k) * dt;
    return t;
}

void task_simulate(const RunConfig& cfg, OutputTracker& out,
                   RunManifest& manifest) {
    const BathExpansion bath = bath_expansion(cfg.model, cfg.heom.n_matsubara);
    InitialCondition ic{pauli::from_bloch(1.0, cfg.v0x, cfg.v0y, cfg.v0z)};
    const OperatorTrajectory traj =
        propagate(ic, cfg.model, bath, cfg.heom);
    std::ostringstream csv;
    csv << "t,v0,vx,vy,vz\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        csv << format_double(traj.time(k));
        for (int mu = 0; mu < 4; ++mu) {
            csv << ',' << format_double(pauli::expectation(traj.op[k], mu));
        }
        csv << "\n";
    }
    out.write("bloch.csv", csv.str(), manifest);
    out.write("rho.csv", trajectory_to_csv(traj), manifest);
}

void task_stcf(const RunConfig& cfg, OutputTracker& out,
               RunManifest& manifest) {
    const StcfTrajectory traj = compute_stcf(cfg.model, cfg.heom);
    out.write("stcf.csv", stcf_to_csv(traj), manifest);
    json meta{{"model", model_json(cfg.model)},
              {"heom", heom_json(cfg.heom)},
              {"version", kVersion},
              {"start_time", traj.t0},
              {"max_imag_residue", traj.max_imag_residue}};
    out.write("stcf_meta.json", meta.dump(2) + "\n", manifest);
}

void task_blp(const RunConfig& cfg, OutputTracker& out,
              RunManifest& manifest) {
    const StcfTrajectory traj = compute_stcf(cfg.model, cfg.heom);
    const BlpResult blp =
        blp_measure(traj, cfg.mc.n_samples, *cfg.mc.seed, cfg.threads);
    out.write("dmax.csv",
              scalar_csv("t,D", grid_times(traj.t0, traj.dt, traj.size()),
                         blp.d_max),
              manifest);
    json summary{{"n_blp", blp.n_blp},
                 {"argmax_v", {blp.argmax.vx, blp.argmax.vy, blp.argmax.vz}},
                 {"seed", blp.seed},
                 {"n_samples", blp.n_samples}};
    out.write("blp.json", summary.dump(2) + "\n", manifest);
}

void task_volume(const RunConfig& cfg, OutputTracker& out,
                 RunManifest& manifest) {
    const StcfTrajectory traj = compute_stcf(cfg.model, cfg.heom);
    const VolumeTrajectory vol = volume_traj(traj);
    out.write("volume.csv",
              scalar_csv("t,V", grid_times(vol.t0, vol.dt, vol.size()),
                         vol.v),
              manifest);
    json summary{{"n_v", nv_measure(vol)}, {"tau_th", vol.tau_th}};
    out.write("volume.json", summary.dump(2) + "\n", manifest);
}

void task_rates(const RunConfig& cfg, OutputTracker& out,
                RunManifest& manifest) {
    const StcfTrajectory traj = compute_stcf(cfg.model, cfg.heom);
    const RateTrajectory rates = canonical_rates(traj);
    std::ostringstream csv;
    csv << "t,gamma1,gamma2,gamma3\n";
    for (std::size_t k = 0; k < rates.size(); ++k) {
        csv << format_double(rates.time(k));
        for (int i = 0; i < 3; ++i) {
            csv << ',' << format_double(rates.gamma[k](i));
        }
        csv << "\n";
    }
    out.write("rates.csv", csv.str(), manifest);

    json summary{{"tau_th", volume_traj(traj).tau_th},
                 {"valid_until", rates.valid_until}};
    try {
        const EternalNmReport enm =
            eternal_nm_detector(rates, cfg.eternal_t_min);
        summary["eternal_nm"] = enm.eternal;
        summary["max_min_rate"] = enm.max_min_rate;
    } catch (const ConfigError&) {
        summary["eternal_nm"] = nullptr;  // window too short to decide
    }
    out.write("rates.json", summary.dump(2) + "\n", manifest);
}

void task_kernel(const RunConfig& cfg, OutputTracker& out,
                 RunManifest& manifest) {
    const StcfTrajectory traj = compute_stcf(cfg.model, cfg.heom);
    const BathExpansion bath =
        bath_expansion(cfg.model, cfg.heom.n_matsubara);
    const DriftMatrix x =
        effective_drift(cfg.model, bath, 0.0, traj.dt, 1);
    const auto k3 = kernel_k3(traj, x);
    const auto k1 = kernel_k1(k3, traj.dt, x);
    const KernelTrajectory kernel = solve_volterra(k1, k3, traj.dt);
    const double residual = gqme_residual(traj, x, kernel);
    const auto tau_k = kernel_timescale(kernel, cfg.kernel_delta);

    std::ostringstream csv;
    csv << "s,K00,K0x,K0y,K0z,Kx0,Kxx,Kxy,Kxz,Ky0,Kyx,Kyy,Kyz,Kz0,Kzx,Kzy,"
           "Kzz\n";
    for (std::size_t j = 0; j < kernel.size(); ++j) {
        csv << format_double(kernel.lag(j));
        for (int mu = 0; mu < 4; ++mu) {
            for (int nu = 0; nu < 4; ++nu) {
                csv << ',' << format_double(kernel.k[j](mu, nu));
            }
        }
        csv << "\n";
    }
    out.write("kernel.csv", csv.str(), manifest);

    const Matrix4d m_bm = bm_generator(x, kernel);
    const Eigen::Vector4cd eig = m_bm.eigenvalues();
    json eigs = json::array();
    for (int i = 0; i < 4; ++i) {
        eigs.push_back({eig(i).real(), eig(i).imag()});
    }
    json summary{{"delta", cfg.kernel_delta},
                 {"residual", residual},
                 {"bm_eigenvalues", eigs}};
    if (tau_k) summary["tau_k"] = *tau_k;
    else summary["tau_k"] = nullptr;
    out.write("kernel.json", summary.dump(2) + "\n", manifest);
}

struct SweepPoint {
    double value = 0.0;
    double n_blp = std::nan("");
    double n_v = std::nan("");
    double tau_th = std::nan("");
    double tau_k = std::nan("");
    int eternal = -1;  // -1 unknown, else 0/1
    std::string error;
};

SweepPoint sweep_point(const RunConfig& cfg, double value) {
    SweepPoint point;
    point.value = value;
    ModelParams p = cfg.model;
    if (cfg.sweep->name == "omega_drive") p.omega_drive = value;
    else if (cfg.sweep->name == "eta") p.eta = value;
    else p.beta = value;
    try {
        const StcfTrajectory traj = compute_stcf(p, cfg.heom);
        point.n_blp =
            blp_measure(traj, cfg.mc.n_samples, *cfg.mc.seed, 1).n_blp;
        const VolumeTrajectory vol = volume_traj(traj);
        point.n_v = nv_measure(vol);
        point.tau_th = vol.tau_th;
        const RateTrajectory rates = canonical_rates(traj);
        try {
            point.eternal =
                eternal_nm_detector(rates, cfg.eternal_t_min).eternal ? 1 : 0;
        } catch (const ConfigError&) {
            point.eternal = -1;
        }
        if (p.epsd == 0.0) {
            const DriftMatrix x = effective_drift(
                p, bath_expansion(p, cfg.heom.n_matsubara), 0.0, traj.dt, 1);
            const auto k3 = kernel_k3(traj, x);
            const auto k1 = kernel_k1(k3, traj.dt, x);
            const auto tau = kernel_timescale(
                solve_volterra(k1, k3, traj.dt), cfg.kernel_delta);
            if (tau) point.tau_k = *tau;
        }
    } catch (const std::exception& e) {
        point.error = e.what();
    }
    return point;
}

void task_sweep(const RunConfig& cfg, OutputTracker& out,
                RunManifest& manifest) {
    const auto& values = cfg.sweep->values;
    std::vector<SweepPoint> points(values.size());

    // bounded worker pool; summary keeps input order
    const std::size_t width = static_cast<std::size_t>(cfg.threads);
    for (std::size_t base = 0; base < values.size(); base += width) {
        const std::size_t hi = std::min(base + width, values.size());
        std::vector<std::future<SweepPoint>> batch;
        for (std::size_t i = base; i < hi; ++i) {
            batch.push_back(std::async(std::launch::async, sweep_point,
                                       std::cref(cfg), values[i]));
        }
        for (std::size_t i = base; i < hi; ++i) {
            points[i] = batch[i - base].get();
        }
    }

    std::ostringstream csv;
    csv << cfg.sweep->name << ",n_blp,n_v,tau_th,tau_k,eternal_nm,error\n";
    json rows = json::array();
    for (const auto& pt : points) {
        csv << format_double(pt.value) << ',' << format_double(pt.n_blp)
            << ',' << format_double(pt.n_v) << ','
            << format_double(pt.tau_th) << ',' << format_double(pt.tau_k)
            << ','
            << (pt.eternal < 0 ? "" : (pt.eternal ? "1" : "0")) << ','
            << pt.error << "\n";
        json row{{"value", pt.value}, {"n_blp", pt.n_blp},
                 {"n_v", pt.n_v},     {"tau_th", pt.tau_th},
                 {"tau_k", pt.tau_k}};
        if (pt.eternal >= 0) row["eternal_nm"] = pt.eternal == 1;
        else row["eternal_nm"] = nullptr;
        if (!pt.error.empty()) row["error"] = pt.error;
        rows.push_back(row);
    }
    out.write("sweep.csv", csv.str(), manifest);
    json summary{{"axis", cfg.sweep->name},
                 {"seed", *cfg.mc.seed},
                 {"n_samples", cfg.mc.n_samples},
                 {"points", rows}};
    out.write("sweep.json", summary.dump(2) + "\n", manifest);
}

}  // namespace

RunManifest run(const RunConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    RunManifest manifest;
    manifest.config_text = config.to_text();
    manifest.version = kVersion;

    OutputTracker out(config.output_dir);
    try {
        switch (config.task) {
            case Task::simulate: task_simulate(config, out, manifest); break;
            case Task::stcf: task_stcf(config, out, manifest); break;
            case Task::blp: task_blp(config, out, manifest); break;
            case Task::volume: task_volume(config, out, manifest); break;
            case Task::rates: task_rates(config, out, manifest); break;
            case Task::kernel: task_kernel(config, out, manifest); break;
            case Task::sweep: task_sweep(config, out, manifest); break;
        }
    } catch (...) {
        out.discard_all();
        throw;
    }

    manifest.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    json mj{{"version", manifest.version},
            {"wall_time_s", manifest.wall_time_s},
            {"config", manifest.config_text}};
    json outputs = json::array();
    for (const auto& rec : manifest.outputs) {
        outputs.push_back({{"file", rec.file}, {"checksum", rec.checksum}});
    }
    mj["outputs"] = outputs;
    write_file(fs::path(config.output_dir) / "manifest.json",
               mj.dump(2) + "\n");
    return manifest;
}

}  // namespace spinbath
