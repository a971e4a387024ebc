#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "commands.hpp"
#include "config.hpp"
#include "egokit/diffusion.hpp"

using namespace egokit;
using namespace egokit::cli;
namespace fs = std::filesystem;

namespace {

std::vector<MotionSequence> toy_sequences(int count, std::uint64_t seed) {
    GeneratorConfig gen;
    gen.seed = seed;
    gen.duration_min = 60;
    gen.duration_max = 100;
    return generate(gen, count);
}

RunConfig toy_train_config(int steps) {
    RunConfig config;
    config.set("train.steps", std::to_string(steps));
    config.set("train.batch", "4");
    config.set("train.width", "32");
    config.set("train.heads", "2");
    config.set("train.ffn_hidden", "64");
    config.set("train.enc_blocks", "1");
    config.set("train.dec_blocks", "1");
    config.set("train.schedule_steps", "256");
    config.set("train.crop_min", "24");
    config.set("train.crop_max", "48");
    return config;
}

double mean_loss(const DenoiserParams& params, const std::vector<MotionSequence>& seqs,
                 std::uint64_t seed, int batches) {
    Rng rng(seed);
    double total = 0.0;
    for (int b = 0; b < batches; ++b) {
        std::vector<TrainingBatchItem> batch;
        for (int i = 0; i < 4; ++i) {
            const MotionSequence& seq = seqs[rng.uniform_index(seqs.size())];
            const int crop = std::min(seq.length(), 32);
            const int start = static_cast<int>(rng.uniform_index(seq.length() - crop + 1));
            TrainingBatchItem item;
            item.x0 = seq.states().middleRows(start, crop);
            const std::vector<PoseSE3> cpf(seq.cpf.begin() + start,
                                           seq.cpf.begin() + start + crop);
            item.cond = conditioning_matrix(encode(params.variant, cpf));
            batch.push_back(std::move(item));
        }
        total += training_loss(params, batch, rng).loss;
    }
    return total / batches;
}

}  // namespace

TEST_CASE("200 steps on 20 sequences reduce the loss") {
    const auto seqs = toy_sequences(20, 800);
    const RunConfig config = toy_train_config(200);
    const DenoiserParams params =
        train_model(config, seqs, ConditioningVariant::kEgoAllo);

    // Loss at the initial parameters vs the trained ones over identical
    // evaluation batches.
    DenoiserParams fresh = init_denoiser(params.arch, params.variant, params.schedule,
                                         config.get_seed("train.seed"));
    fresh.norm_mean = params.norm_mean;
    fresh.norm_std = params.norm_std;
    const double before = mean_loss(fresh, seqs, 41, 8);
    const double after = mean_loss(params, seqs, 41, 8);
    CHECK(after < before);
}

TEST_CASE("same seed trains to byte-identical checkpoints") {
    const auto seqs = toy_sequences(8, 801);
    RunConfig config = toy_train_config(12);
    const DenoiserParams a = train_model(config, seqs, ConditioningVariant::kAbsolute);
    const DenoiserParams b = train_model(config, seqs, ConditioningVariant::kAbsolute);

    const auto dir = fs::temp_directory_path() / "egokit_train_det";
    fs::create_directories(dir);
    save_checkpoint((dir / "a.ckpt").string(), a);
    save_checkpoint((dir / "b.ckpt").string(), b);
    std::ifstream fa(dir / "a.ckpt", std::ios::binary), fb(dir / "b.ckpt", std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(fa)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(fb)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);
    fs::remove_all(dir);
}

TEST_CASE("toy convergence keeps held-out loss within 2x of train loss") {
    auto all = toy_sequences(30, 802);
    std::vector<MotionSequence> train_split, held_out;
    for (auto& seq : all) {
        (train_split.size() < 22 ? train_split : held_out).push_back(std::move(seq));
    }
    const RunConfig config = toy_train_config(500);
    const DenoiserParams params =
        train_model(config, train_split, ConditioningVariant::kEgoAllo);

    const double train_loss_value = mean_loss(params, train_split, 99, 10);
    const double held_out_loss = mean_loss(params, held_out, 99, 10);
    CHECK(held_out_loss < 2.0 * train_loss_value);
}
