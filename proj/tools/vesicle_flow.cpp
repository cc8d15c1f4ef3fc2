// vesicle_flow: run, validate and derivative-check vesicle flow scenarios.

#include "vesicle/vesicle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace vesicle;

namespace {

std::string frame_name(std::size_t step, const char* ext)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "frame_%06zu.%s", step, ext);
    return buf;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::size_t frames_every,
            bool svg_flag)
{
    const ScenarioConfig cfg = parse_config(config_path);
    const std::size_t stride = frames_every > 0 ? frames_every : cfg.output.frame_stride;
    const bool svg = svg_flag || cfg.output.svg;
    ScenarioState initial = to_scenario(cfg);
    const Viewbox vb = cfg.output.viewbox ? *cfg.output.viewbox : default_viewbox(initial.meshes(), 0.3);

    const fs::path out(out_dir);
    fs::create_directories(out / "frames");

    std::vector<MetricsRow> rows;
    std::size_t last_frame = static_cast<std::size_t>(-1);
    auto emit_frame = [&](const ScenarioState& s) {
        write_frame(s, (out / "frames" / frame_name(s.iteration, "csv")).string());
        if (svg) {
            render_svg(make_frame(s), s.barrier, vb, (out / "frames" / frame_name(s.iteration, "svg")).string());
        }
        last_frame = s.iteration;
    };
    auto on_iteration = [&](const ScenarioState& s) {
        rows.insert(rows.end(), s.metrics.begin() + static_cast<std::ptrdiff_t>(rows.size()), s.metrics.end());
        if (s.iteration % stride == 0) {
            emit_frame(s);
        }
    };

    RunResult result;
    try {
        result = run_scenario(std::move(initial), on_iteration);
    } catch (const Error& e) {
        write_metrics(rows, (out / "metrics.csv").string());
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    const ScenarioState& s = result.state;
    if (last_frame != s.iteration) {
        emit_frame(s);
    }
    write_metrics(s.metrics, (out / "metrics.csv").string());

    nlohmann::json summary;
    summary["config"] = config_path;
    summary["model"] = model_name(cfg.model);
    summary["stop_reason"] = stop_reason_name(result.reason);
    summary["iterations"] = s.iteration;
    summary["t"] = s.t;
    summary["schedule"] = "cyclic rotation: iteration n steps vesicles n mod M, n+1 mod M, ...";
    summary["vesicles"] = nlohmann::json::array();
    for (std::size_t i = 0; i < s.vesicles.size(); ++i) {
        const MetricsRow& first = s.metrics[i];
        const MetricsRow& final = s.metrics[s.metrics.size() - s.vesicles.size() + i];
        summary["vesicles"].push_back({{"target_length", s.vesicles[i].target_length},
                                       {"final_length", final.length},
                                       {"W_initial", first.W},
                                       {"W_final", final.W},
                                       {"J_final", final.J}});
    }
    std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
    std::cout << "stop: " << stop_reason_name(result.reason) << " after " << s.iteration
              << " iterations (t = " << s.t << ")\n";
    for (std::size_t i = 0; i < s.vesicles.size(); ++i) {
        const MetricsRow& final = s.metrics[s.metrics.size() - s.vesicles.size() + i];
        std::printf("vesicle %zu: length %.12g  W %.10g  J %.10g\n", i, final.length, final.W, final.J);
    }
    return 0;
}

int cmd_check(const std::string& config_path)
{
    const ScenarioConfig cfg = parse_config(config_path);
    const ScenarioState s = to_scenario(cfg);
    std::cout << config_path << ": ok (" << model_name(cfg.model) << ", " << s.vesicles.size()
              << " vesicle" << (s.vesicles.size() == 1 ? "" : "s") << ")\n";
    for (std::size_t i = 0; i < s.vesicles.size(); ++i) {
        std::printf("  vesicle %zu: %zu elements, length %.12g, W %.10g\n", i,
                    s.vesicles[i].mesh.element_count(), s.vesicles[i].target_length, s.metrics[i].W);
    }
    return 0;
}

int cmd_derivcheck(const std::string& config_path)
{
    const ScenarioConfig cfg = parse_config(config_path);
    DerivcheckSetup setup;
    setup.primary = cfg.shapes.front();
    if (cfg.shapes.size() > 1) {
        setup.other = cfg.shapes[1];
    }
    setup.barrier = cfg.barrier;
    setup.seed = cfg.output.seed;
    const auto rows = run_derivcheck(setup);
    std::printf("%-6s %14s %14s %8s %s\n", "term", "err n=64", "err n=128", "ratio", "result");
    bool ok = true;
    for (const DerivcheckRow& r : rows) {
        std::printf("%-6s %14.3e %14.3e %8.2f %s\n", r.name.c_str(), r.error_coarse, r.error_fine,
                    r.error_coarse / std::max(r.error_fine, 1e-300), r.passed() ? "PASS" : "FAIL");
        ok = ok && r.passed();
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Length-conserving Willmore flow of closed planar curves"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::size_t frames_every = 0;
    bool svg = false;

    CLI::App* run = app.add_subcommand("run", "run a scenario and write metrics and frames");
    run->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--frames-every", frames_every, "frame stride (overrides the config)");
    run->add_flag("--svg", svg, "also render SVG frames");

    CLI::App* check = app.add_subcommand("check", "validate a scenario config");
    check->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);

    CLI::App* deriv = app.add_subcommand("derivcheck", "finite-difference check of shape derivatives");
    deriv->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config, out_dir, frames_every, svg);
        }
        if (*check) {
            return cmd_check(config);
        }
        if (*deriv) {
            return cmd_derivcheck(config);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
