// Command-line entry point for the fare pipeline:
//   simulate | preprocess | train-pp | train-ip | calibrate | evaluate |
//   ablate | predict
// Every command takes --config, --seed and --out (the shared workspace
// directory). Exit code 0 on success; otherwise one machine-parsable line
// "error: <category>: <message>" on stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "fare/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment configuration file");
    cmd->add_option("--seed", args.seed, "master seed (default 1)");
    cmd->add_option("--out", args.out_dir, "workspace directory")->required();
}

fare::ExperimentConfig resolve_config(const CommonArgs& args) {
    if (args.config_path.empty()) {
        fare::ExperimentConfig cfg;
        cfg.validate();
        return cfg;
    }
    return fare::load_config(args.config_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FMCW radar face recognition with reconstruction-based OOD detection"};
    app.require_subcommand(1);

    CommonArgs sim_args, pre_args, pp_args, ip_args, cal_args, eval_args, abl_args, pred_args;
    bool force = false;
    std::string predict_input;

    CLI::App* sim = app.add_subcommand("simulate", "generate the synthetic radar dataset");
    add_common(sim, sim_args);
    sim->add_flag("--force", force, "overwrite an existing dataset");

    CLI::App* pre = app.add_subcommand("preprocess", "build RDI / micro-RDI containers");
    add_common(pre, pre_args);

    CLI::App* tpp = app.add_subcommand("train-pp", "stage 1: triplet training of the primary path");
    add_common(tpp, pp_args);

    CLI::App* tip = app.add_subcommand("train-ip", "stage 2: reconstruction training of the IPs");
    add_common(tip, ip_args);

    CLI::App* cal = app.add_subcommand("calibrate", "fit the score normalizer and threshold");
    add_common(cal, cal_args);

    CLI::App* ev = app.add_subcommand("evaluate", "OOD metrics, accuracy and confusion matrix");
    add_common(ev, eval_args);

    CLI::App* abl = app.add_subcommand("ablate", "OOD metrics over nested IP subsets");
    add_common(abl, abl_args);

    CLI::App* pred = app.add_subcommand("predict", "classify one raw frame container");
    add_common(pred, pred_args);
    pred->add_option("--input", predict_input, "raw complex64 container with >= 8 frames")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fprintf(stderr, "error: usage: %s\n", e.what());
        return 1;
    }

    try {
        if (sim->parsed()) {
            cmd_simulate(resolve_config(sim_args), sim_args.seed, {sim_args.out_dir}, force);
            std::printf("dataset written to %s\n", sim_args.out_dir.c_str());
        } else if (pre->parsed()) {
            cmd_preprocess(resolve_config(pre_args), pre_args.seed, {pre_args.out_dir});
            std::printf("preprocessed samples written to %s\n", pre_args.out_dir.c_str());
        } else if (tpp->parsed()) {
            cmd_train_pp(resolve_config(pp_args), pp_args.seed, {pp_args.out_dir});
            std::printf("stage-1 checkpoint written to %s\n",
                        fare::Workspace{pp_args.out_dir}.checkpoint_pp().string().c_str());
        } else if (tip->parsed()) {
            cmd_train_ip(resolve_config(ip_args), ip_args.seed, {ip_args.out_dir});
            std::printf("stage-2 checkpoint written to %s\n",
                        fare::Workspace{ip_args.out_dir}.checkpoint_ip().string().c_str());
        } else if (cal->parsed()) {
            cmd_calibrate(resolve_config(cal_args), cal_args.seed, {cal_args.out_dir});
            std::printf("calibrated checkpoint written to %s\n",
                        fare::Workspace{cal_args.out_dir}.checkpoint_calibrated().string().c_str());
        } else if (ev->parsed()) {
            const fare::EvaluationReport report =
                cmd_evaluate(resolve_config(eval_args), eval_args.seed, {eval_args.out_dir});
            std::printf("%s", report.to_text().c_str());
        } else if (abl->parsed()) {
            const fare::AblationReport report =
                cmd_ablate(resolve_config(abl_args), abl_args.seed, {abl_args.out_dir});
            std::printf("%s", report.to_text().c_str());
        } else if (pred->parsed()) {
            const fare::Decision d = cmd_predict(resolve_config(pred_args), pred_args.seed,
                                                 {pred_args.out_dir}, predict_input);
            if (d.is_ood)
                std::printf("verdict=OOD score=%.6f\n", d.score);
            else
                std::printf("verdict=ID class=%s score=%.6f\n", d.class_label.c_str(), d.score);
        }
    } catch (const fare::FareError& e) {
        std::fprintf(stderr, "error: %s: %s\n", e.category_name(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
