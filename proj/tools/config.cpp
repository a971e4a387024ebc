#include "config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace egokit::cli {

const std::vector<RunConfig::KeySpec>& RunConfig::known_keys() {
    static const std::vector<KeySpec> specs = {
        {"gen.count", "200", "number of sequences to generate"},
        {"gen.seed", "0", "generator master seed"},
        {"gen.families", "walk,turn,squat,reach,idle", "motion families"},
        {"gen.height_min", "0.85", "height-scale range low"},
        {"gen.height_max", "1.15", "height-scale range high"},
        {"gen.arm_min", "0.95", "arm-scale range low"},
        {"gen.arm_max", "1.05", "arm-scale range high"},
        {"gen.duration_min", "150", "sequence length low, timesteps"},
        {"gen.duration_max", "300", "sequence length high, timesteps"},
        {"gen.placement_radius", "15", "world xy placement radius, meters"},

        {"train.steps", "2000", "optimizer steps"},
        {"train.batch", "8", "crops per step"},
        {"train.lr", "1e-3", "Adam learning rate"},
        {"train.seed", "0", "training master seed"},
        {"train.crop_min", "32", "minimum crop length"},
        {"train.crop_max", "128", "maximum crop length"},
        {"train.conditioning", "egoallo", "conditioning variant"},
        {"train.width", "64", "transformer hidden width"},
        {"train.enc_blocks", "2", "encoder blocks"},
        {"train.dec_blocks", "2", "decoder blocks"},
        {"train.heads", "4", "attention heads"},
        {"train.ffn_hidden", "256", "feedforward hidden width"},
        {"train.schedule_steps", "1000", "diffusion schedule length N"},

        {"estimate.steps", "30", "DDIM sampling steps"},
        {"estimate.seed", "0", "sampling seed"},
        {"estimate.guide_last", "10", "run guidance on the final k steps"},
        {"estimate.lm_iters", "12", "LM iterations per guided step"},

        {"guidance.hands3d", "50", "3D hand term weight"},
        {"guidance.reproj", "0.01", "reprojection term weight"},
        {"guidance.skate", "10", "skating term weight"},
        {"guidance.prior_abs", "1", "absolute-rotation prior weight"},
        {"guidance.prior_vel", "10", "rotational-velocity prior weight"},
        {"guidance.prior_fk", "1", "FK-position prior weight"},

        {"floor.tolerance", "0.01", "RANSAC inlier tolerance, meters"},
        {"floor.iterations", "1000", "RANSAC rounds"},
        {"floor.confidence", "0.5", "point confidence threshold"},
        {"floor.min_points", "50", "minimum filtered points"},
        {"floor.seed", "0", "RANSAC seed"},

        {"ablate.variants", "egoallo,abs-local-rel,abs-global-deltas,seq-canonical,absolute",
         "variants to train"},
        {"ablate.seqlens", "32,128", "evaluation window lengths"},
        {"ablate.eval_count", "200", "held-out evaluation windows per length"},
        {"ablate.eval_seed", "7", "evaluation crop/sampling seed"},
    };
    return specs;
}

RunConfig::RunConfig() {
    for (const KeySpec& spec : known_keys()) values_[spec.key] = spec.default_value;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            if (a == std::string::npos) return std::string();
            const auto b = s.find_last_not_of(" \t");
            return s.substr(a, b - a + 1);
        };
        try {
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::exception& e) {
            throw UsageError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (values_.find(key) == values_.end()) {
        throw UsageError("unknown config key: " + key);
    }
    values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key: " + key);
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw UsageError("config " + key + ": not a number: " + v);
    return out;
}

int RunConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw UsageError("config " + key + ": not an integer: " + v);
    return out;
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
    return static_cast<std::uint64_t>(std::stoull(get(key)));
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace egokit::cli
