// nfrlab: scenario-driven front door for the near-field FMCW radar lab.
// Subcommands: synth, crb, af, estimate, sweep, demo-multitarget.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "nfr/ambiguity.hpp"
#include "nfr/bounds.hpp"
#include "nfr/common.hpp"
#include "nfr/cube_io.hpp"
#include "nfr/estimate.hpp"
#include "nfr/harness.hpp"
#include "nfr/scenario.hpp"
#include "nfr/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw nfr::ValidationError("cannot write " + path.string());
    os << text;
}

void write_manifest(const fs::path& dir, const nfr::Scene& scene, const std::string& cmd) {
    write_file(dir / "manifest.json", nfr::manifest_json(scene, cmd) + "\n");
}

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> g;
    const auto colon = std::count(s.begin(), s.end(), ':');
    if (colon == 2) {
        double start, stop;
        int count;
        if (std::sscanf(s.c_str(), "%lf:%lf:%d", &start, &stop, &count) != 3 || count < 1)
            throw nfr::ValidationError("bad grid spec: " + s);
        for (int i = 0; i < count; ++i)
            g.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
        return g;
    }
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) g.push_back(std::stod(tok));
    if (g.empty()) throw nfr::ValidationError("empty grid spec");
    return g;
}

std::array<int, 3> parse_pad(const std::string& s) {
    std::array<int, 3> p{4, 4, 8};
    if (std::sscanf(s.c_str(), "%d,%d,%d", &p[0], &p[1], &p[2]) != 3)
        throw nfr::ValidationError("bad pad spec (want r,d,a): " + s);
    return p;
}

json result_to_json(const nfr::EstimationResult& r) {
    json j;
    j["range_m"] = r.estimate.range_m;
    j["radial_velocity_mps"] = r.estimate.radial_velocity_mps;
    j["tangential_velocity_mps"] = r.estimate.tangential_velocity_mps;
    j["doa_deg"] = r.estimate.doa_rad * 180.0 / nfr::kPi;
    j["vtheta_trace"] = r.vtheta_trace;
    j["objective_trace"] = r.objective_trace;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["sign_ambiguous"] = r.sign_ambiguous;
    j["paired"] = r.paired;
    j["objective"] = r.objective;
    if (!r.warning.empty()) j["warning"] = r.warning;
    json subs = json::array();
    for (const auto& p : r.per_subarray)
        subs.push_back({{"range_m", p.range_m},
                        {"radial_velocity_mps", p.radial_velocity_mps},
                        {"sin_theta", p.sin_theta}});
    j["per_subarray"] = subs;
    return j;
}

std::string estimates_csv(const std::vector<nfr::EstimationResult>& rs) {
    std::ostringstream os;
    os << "target,range_m,radial_velocity_mps,tangential_velocity_mps,doa_deg,iterations,"
          "converged,sign_ambiguous,objective\n";
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const auto& r = rs[i];
        os << i << ',' << r.estimate.range_m << ',' << r.estimate.radial_velocity_mps << ','
           << r.estimate.tangential_velocity_mps << ','
           << r.estimate.doa_rad * 180.0 / nfr::kPi << ',' << r.iterations << ','
           << r.converged << ',' << r.sign_ambiguous << ',' << r.objective << "\n";
    }
    return os.str();
}

int run(int argc, char** argv) {
    CLI::App app{"near-field FMCW radar simulation and estimation lab"};
    app.require_subcommand(1);
    int threads = 0;
    bool serial = false;
    app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");
    app.add_flag("--serial", serial, "run the serial reference path");

    std::string scene_path, out_dir = ".", cube_path, name = "cube.nfrc";
    bool f32 = false, noiseless = false, force = false;

    auto* synth = app.add_subcommand("synth", "synthesize a raw data cube");
    synth->add_option("scene", scene_path)->required();
    synth->add_option("--out", out_dir);
    synth->add_option("--name", name);
    synth->add_flag("--f32", f32, "store complex64 payload");
    synth->add_flag("--noiseless", noiseless);

    std::string sweep_param = "snr_db", grid_spec;
    auto* crb = app.add_subcommand("crb", "closed-form and numeric CRB report");
    crb->add_option("scene", scene_path)->required();
    crb->add_option("--out", out_dir);
    crb->add_option("--sweep", sweep_param, "snr_db | dbar | vtheta");
    crb->add_option("--grid", grid_spec, "a,b,c or start:stop:count");

    std::string cut = "vtheta";
    int points = 512;
    auto* af = app.add_subcommand("af", "ambiguity function cuts");
    af->add_option("scene", scene_path)->required();
    af->add_option("--out", out_dir);
    af->add_option("--cut", cut, "vtheta | vrvtheta");
    af->add_option("--points", points);

    double eps = 0.05;
    int max_iter = 10, targets = 1;
    std::string pad_spec;
    auto* est = app.add_subcommand("estimate", "run the estimation algorithms on a cube");
    est->add_option("--cube", cube_path)->required();
    est->add_option("--out", out_dir);
    est->add_option("--eps", eps);
    est->add_option("--max-iter", max_iter);
    est->add_option("--pad", pad_spec, "zero-padding r,d,a");
    est->add_option("--targets", targets);

    int trials = 100;
    std::uint64_t sweep_seed = 0;
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo RMSE sweep");
    sweep->add_option("scene", scene_path)->required();
    sweep->add_option("--out", out_dir);
    sweep->add_option("--param", sweep_param);
    sweep->add_option("--grid", grid_spec)->required();
    sweep->add_option("--trials", trials);
    sweep->add_option("--seed", sweep_seed);
    sweep->add_option("--pad", pad_spec);
    sweep->add_flag("--force", force);

    auto* demo = app.add_subcommand("demo-multitarget", "Table-II style map bundle");
    demo->add_option("scene", scene_path)->required();
    demo->add_option("--out", out_dir);
    demo->add_option("--targets", targets);
    demo->add_option("--pad", pad_spec);

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif
    if (serial) nfr::exec::set_parallel(false);

    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    std::string cmdline;
    for (int i = 0; i < argc; ++i) cmdline += std::string(i ? " " : "") + argv[i];

    if (synth->parsed()) {
        nfr::Scene scene = nfr::scene_from_json_file(scene_path);
        const nfr::DataCube cube =
            noiseless ? nfr::synthesize_noiseless(scene) : nfr::synthesize(scene);
        nfr::write_cube((out / name).string(), cube, scene, f32);
        // echo the assumption report for the first target
        if (!scene.targets.empty()) {
            const auto rep = nfr::check_assumptions(scene.radar, scene.targets[0], 10.0, &scene);
            std::cout << rep.table();
        }
        write_manifest(out, scene, cmdline);
        return 0;
    }

    if (crb->parsed()) {
        nfr::Scene scene = nfr::scene_from_json_file(scene_path);
        if (scene.targets.empty()) throw nfr::ValidationError("crb needs a target");
        std::vector<double> grid =
            grid_spec.empty() ? std::vector<double>{scene.snr_db} : parse_grid(grid_spec);
        const auto param = nfr::sweep_param_from_string(sweep_param);
        std::ostringstream csv;
        csv << "param,value,closed_form,numeric,ratio\n";
        for (double v : grid) {
            nfr::Scene s = scene;
            if (param == nfr::SweepParam::SnrDb) s.snr_db = v;
            if (param == nfr::SweepParam::Dbar) {
                s.radar.subarray_separation_m = v;
                s.mode = v > 0 ? nfr::ArrayMode::Separated : nfr::ArrayMode::UlaNearField;
            }
            if (param == nfr::SweepParam::Vtheta) s.targets[0].tangential_velocity_mps = v;
            const double nv = nfr::noise_variance_for_snr(s.radar, s.snr_db);
            const auto rep = nfr::fim_numeric(s.radar, s.targets[0], s.mode, nv);
            csv << sweep_param << ',' << v << ',' << rep.crb_vtheta_closed << ','
                << rep.crb_vtheta_numeric << ','
                << rep.crb_vtheta_closed / rep.crb_vtheta_numeric << "\n";
        }
        write_file(out / "crb.csv", csv.str());
        write_manifest(out, scene, cmdline);
        std::cout << "wrote " << (out / "crb.csv").string() << "\n";
        return 0;
    }

    if (af->parsed()) {
        nfr::Scene scene = nfr::scene_from_json_file(scene_path);
        if (scene.targets.empty()) throw nfr::ValidationError("af needs a target");
        const auto& tgt = scene.targets[0];
        json header;
        header["scene"] = json::parse(nfr::scene_to_json_text(scene));
        header["cut"] = cut;
        if (cut == "vtheta") {
            const auto grid = nfr::default_vtheta_grid(tgt, points);
            const auto surf = nfr::af_cut_vtheta_ula(scene.radar, tgt, grid);
            std::ostringstream csv;
            csv << "v_theta_mps,magnitude,magnitude_db\n";
            for (std::size_t i = 0; i < grid.size(); ++i)
                csv << grid[i] << ',' << surf.magnitude[i] << ','
                    << nfr::magnitude_db(surf.magnitude[i]) << "\n";
            write_file(out / "af_vtheta.csv", csv.str());
        } else if (cut == "vrvtheta") {
            const auto vth = nfr::default_vtheta_grid(tgt, points);
            const auto vr = nfr::default_vr_grid(tgt, points / 2);
            const auto res = nfr::af_cut_vr_vtheta(scene.radar, tgt, vr, vth);
            std::ostringstream csv;
            csv << "v_r_mps,v_theta_mps,magnitude_db,magnitude_db_q0,magnitude_db_q1\n";
            for (std::size_t i = 0; i < vr.size(); ++i)
                for (std::size_t j = 0; j < vth.size(); ++j)
                    csv << vr[i] << ',' << vth[j] << ','
                        << nfr::magnitude_db(res.combined.magnitude[res.combined.index(i, j)])
                        << ','
                        << nfr::magnitude_db(
                               res.per_subarray[0].magnitude[res.per_subarray[0].index(i, j)])
                        << ','
                        << nfr::magnitude_db(
                               res.per_subarray[1].magnitude[res.per_subarray[1].index(i, j)])
                        << "\n";
            write_file(out / "af_vr_vtheta.csv", csv.str());
            header["ridge_slope_q0"] = res.ridge_slope[0];
            header["ridge_slope_q1"] = res.ridge_slope[1];
        } else {
            throw nfr::ValidationError("unknown cut: " + cut);
        }
        write_file(out / "af_header.json", header.dump(2) + "\n");
        write_manifest(out, scene, cmdline);
        return 0;
    }

    if (est->parsed()) {
        auto loaded = nfr::read_cube(cube_path);
        nfr::EstimateOptions opts;
        opts.eps = eps;
        opts.max_iter = max_iter;
        if (!pad_spec.empty()) opts.pad = parse_pad(pad_spec);
        json j;
        std::vector<nfr::EstimationResult> results;
        bool shortfall = false;
        if (targets <= 1) {
            results.push_back(nfr::estimate_single(loaded.cube, opts));
        } else {
            auto multi = nfr::estimate_multi(loaded.cube, targets, opts);
            results = std::move(multi.targets);
            shortfall = multi.shortfall;
        }
        j["targets"] = json::array();
        for (const auto& r : results) j["targets"].push_back(result_to_json(r));
        j["shortfall"] = shortfall;
        write_file(out / "estimate.json", j.dump(2) + "\n");
        write_file(out / "estimates.csv", estimates_csv(results));
        write_manifest(out, loaded.scene, cmdline);
        if (shortfall) {
            std::cerr << "estimator shortfall: found " << results.size() << " of " << targets
                      << " targets\n";
            return 3;
        }
        return 0;
    }

    if (sweep->parsed()) {
        nfr::SweepSpec spec;
        spec.base = nfr::scene_from_json_file(scene_path);
        spec.param = nfr::sweep_param_from_string(sweep_param);
        spec.grid = parse_grid(grid_spec);
        spec.trials = trials;
        spec.seed = sweep_seed ? sweep_seed : spec.base.seed;
        spec.force = force;
        if (!pad_spec.empty()) spec.opts.pad = parse_pad(pad_spec);
        const auto result = nfr::run_sweep(spec);
        write_file(out / "sweep.csv", result.csv());
        write_file(out / "sweep.json", result.json() + "\n");
        write_manifest(out, spec.base, cmdline);
        std::cout << result.csv();
        return 0;
    }

    if (demo->parsed()) {
        nfr::Scene scene = nfr::scene_from_json_file(scene_path);
        nfr::EstimateOptions opts;
        if (!pad_spec.empty()) opts.pad = parse_pad(pad_spec);
        const auto bundle = nfr::run_multitarget_demo(scene, targets, opts);
        json j;
        j["targets"] = json::array();
        for (const auto& t : bundle.targets) {
            json tj = result_to_json(t.estimate);
            tj["smear_before"] = t.smear_before;
            tj["smear_after"] = t.smear_after;
            tj["improvement_db"] = t.improvement_db;
            j["targets"].push_back(tj);
        }
        j["shortfall"] = bundle.estimates.shortfall;
        write_file(out / "demo.json", j.dump(2) + "\n");
        std::vector<nfr::EstimationResult> rs;
        for (const auto& t : bundle.estimates.targets) rs.push_back(t);
        write_file(out / "estimates.csv", estimates_csv(rs));
        // Fig-9/10 style theta-maximized images, long format
        for (std::size_t q = 0; q < bundle.raw_subarray_maps.size(); ++q) {
            std::ostringstream csv;
            csv << "range_bin,doppler_bin,power\n";
            const auto& img = bundle.raw_subarray_maps[q];
            for (int r = 0; r < bundle.n_range; ++r)
                for (int d = 0; d < bundle.n_doppler; ++d)
                    csv << r << ',' << d << ','
                        << img[static_cast<std::size_t>(r) * bundle.n_doppler + d] << "\n";
            write_file(out / ("raw_map_q" + std::to_string(q) + ".csv"), csv.str());
        }
        for (const auto& t : bundle.targets) {
            std::ostringstream csv;
            csv << "range_bin,doppler_bin,power\n";
            for (int r = 0; r < t.n_range; ++r)
                for (int d = 0; d < t.n_doppler; ++d)
                    csv << r << ',' << d << ','
                        << t.compensated_map[static_cast<std::size_t>(r) * t.n_doppler + d]
                        << "\n";
            write_file(out / ("compensated_map_t" + std::to_string(t.target_index) + ".csv"),
                       csv.str());
        }
        write_manifest(out, scene, cmdline);
        if (bundle.estimates.shortfall) return 3;
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const nfr::EstimatorShortfall& e) {
        std::cerr << "estimator shortfall: " << e.what() << "\n";
        return 3;
    } catch (const nfr::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
