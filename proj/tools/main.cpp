#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "config.hpp"

using egokit::cli::EstimateInputs;
using egokit::cli::RunConfig;
using egokit::cli::UsageError;

int main(int argc, char** argv) {
    CLI::App app{"egokit: ego-sensed human motion estimation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global --config/--set work after the subcommand

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key=value configuration file");
    app.add_option("--set", overrides, "override a config key (key=value), repeatable");

    std::string out_dir, data_dir, checkpoint, loss_csv;
    auto* gen = app.add_subcommand("gen", "generate a synthetic motion dataset");
    gen->add_option("--out", out_dir, "output directory")->required();
    std::string gen_count, gen_seed, gen_families;
    gen->add_option("--count", gen_count, "number of sequences");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--families", gen_families, "comma-separated motion families");

    auto* train = app.add_subcommand("train", "train the motion prior");
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", checkpoint, "checkpoint output path")->required();
    train->add_option("--loss-csv", loss_csv, "loss curve CSV path");
    std::string train_steps, train_seed, train_conditioning;
    train->add_option("--steps", train_steps, "optimizer steps");
    train->add_option("--seed", train_seed, "training seed");
    train->add_option("--conditioning", train_conditioning,
                      "egoallo|abs-local-rel|abs-global-deltas|seq-canonical|absolute");

    EstimateInputs est;
    auto* estimate = app.add_subcommand("estimate", "estimate motion from a CPF trajectory");
    estimate->add_option("--checkpoint", est.checkpoint, "trained checkpoint")->required();
    estimate->add_option("--input", est.motion_path, "ground-truth motion file (CPF source)");
    estimate->add_option("--cpf", est.cpf_path, "bare CPF trajectory file");
    estimate->add_option("--hands", est.hands_path, "hand observation file");
    estimate->add_option("--cloud", est.cloud_path, "SLAM point cloud for floor estimation");
    estimate->add_option("--out", est.out_motion, "estimated motion output")->required();
    estimate->add_option("--metrics", est.out_metrics, "metrics CSV (needs --input)");
    std::string est_steps, est_seed;
    estimate->add_option("--steps", est_steps, "DDIM steps");
    estimate->add_option("--seed", est_seed, "sampling seed");

    std::string pred_path, gt_path, eval_csv;
    auto* eval = app.add_subcommand("eval", "metrics between two motion files");
    eval->add_option("--pred", pred_path, "predicted motion file")->required();
    eval->add_option("--gt", gt_path, "ground-truth motion file")->required();
    eval->add_option("--out", eval_csv, "metrics CSV path");

    std::string cloud_path;
    auto* floor = app.add_subcommand("floor", "estimate the floor height from a point cloud");
    floor->add_option("--cloud", cloud_path, "point cloud file")->required();

    std::string ablate_data, ablate_out, ablate_variants;
    auto* ablate = app.add_subcommand("ablate", "train and compare conditioning variants");
    ablate->add_option("--data", ablate_data, "dataset directory")->required();
    ablate->add_option("--out", ablate_out, "output directory")->required();
    ablate->add_option("--variants", ablate_variants, "comma-separated variant subset");

    std::string skeleton_out;
    auto* skeleton = app.add_subcommand("skeleton-dump", "print the skeleton constants");
    skeleton->add_option("--out", skeleton_out, "write to a file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config;
        if (!config_path.empty()) config.load_file(config_path);
        for (const std::string& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value: " + kv);
            config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        // Convenience flags map onto config keys; flags win.
        if (!gen_count.empty()) config.set("gen.count", gen_count);
        if (!gen_seed.empty()) config.set("gen.seed", gen_seed);
        if (!gen_families.empty()) config.set("gen.families", gen_families);
        if (!train_steps.empty()) config.set("train.steps", train_steps);
        if (!train_seed.empty()) config.set("train.seed", train_seed);
        if (!train_conditioning.empty()) config.set("train.conditioning", train_conditioning);
        if (!est_steps.empty()) config.set("estimate.steps", est_steps);
        if (!est_seed.empty()) config.set("estimate.seed", est_seed);
        if (!ablate_variants.empty()) config.set("ablate.variants", ablate_variants);

        if (gen->parsed()) return egokit::cli::cmd_gen(config, out_dir);
        if (train->parsed()) {
            return egokit::cli::cmd_train(config, data_dir, checkpoint, loss_csv);
        }
        if (estimate->parsed()) return egokit::cli::cmd_estimate(config, est);
        if (eval->parsed()) return egokit::cli::cmd_eval(pred_path, gt_path, eval_csv);
        if (floor->parsed()) return egokit::cli::cmd_floor(config, cloud_path);
        if (ablate->parsed()) return egokit::cli::cmd_ablate(config, ablate_data, ablate_out);
        if (skeleton->parsed()) return egokit::cli::cmd_skeleton_dump(skeleton_out);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
