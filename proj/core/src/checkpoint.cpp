#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "egokit/denoiser.hpp"

// Checkpoint layout (all little-endian):
//   magic "EGOKITCK" (8 bytes), u32 version
//   u32 conditioning variant id
//   u32 x8 architecture: state_dim, cond_dim, width, encoder_blocks,
//       decoder_blocks, heads, ffn_hidden, max_window; f64 rope_base
//   u32 schedule steps N; f64 alpha_bar[N+1]; f64 sigma[N+1]; f64 w[N+1]
//   u32 norm dim D; f64 mean[D]; f64 std[D]
//   u32 tensor count; per tensor u32 rows, u32 cols, f64 data row-major
//       in declaration order (denoiser_tensor_specs)

namespace egokit {

namespace {

constexpr char kMagic[8] = {'E', 'G', 'O', 'K', 'I', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) put_f64(out, v[i]);
}

Eigen::VectorXd get_vector(std::istream& in, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = get_f64(in);
    return v;
}

std::uint32_t variant_id(ConditioningVariant v) { return static_cast<std::uint32_t>(v); }

ConditioningVariant variant_from_id(std::uint32_t id) {
    if (id > 4) throw std::runtime_error("checkpoint: unknown conditioning variant id");
    return static_cast<ConditioningVariant>(id);
}

}  // namespace

void save_checkpoint(const std::string& path, const DenoiserParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    put_u32(out, variant_id(params.variant));
    const DenoiserArch& a = params.arch;
    for (int v : {a.state_dim, a.cond_dim, a.width, a.encoder_blocks, a.decoder_blocks,
                  a.heads, a.ffn_hidden, a.max_window}) {
        put_u32(out, static_cast<std::uint32_t>(v));
    }
    put_f64(out, a.rope_base);
    put_u32(out, static_cast<std::uint32_t>(params.schedule.steps));
    put_vector(out, params.schedule.alpha_bar);
    put_vector(out, params.schedule.sigma);
    put_vector(out, params.schedule.weights);
    put_u32(out, static_cast<std::uint32_t>(params.norm_mean.size()));
    put_vector(out, params.norm_mean);
    put_vector(out, params.norm_std);
    put_u32(out, static_cast<std::uint32_t>(params.weights.size()));
    for (const Mat& m : params.weights) {
        put_u32(out, static_cast<std::uint32_t>(m.rows()));
        put_u32(out, static_cast<std::uint32_t>(m.cols()));
        for (int i = 0; i < m.rows(); ++i) {
            for (int j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
        }
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

DenoiserParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    const std::uint32_t version = get_u32(in);
    if (version != kVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    DenoiserParams params;
    params.variant = variant_from_id(get_u32(in));
    DenoiserArch& a = params.arch;
    a.state_dim = static_cast<int>(get_u32(in));
    a.cond_dim = static_cast<int>(get_u32(in));
    a.width = static_cast<int>(get_u32(in));
    a.encoder_blocks = static_cast<int>(get_u32(in));
    a.decoder_blocks = static_cast<int>(get_u32(in));
    a.heads = static_cast<int>(get_u32(in));
    a.ffn_hidden = static_cast<int>(get_u32(in));
    a.max_window = static_cast<int>(get_u32(in));
    a.rope_base = get_f64(in);
    a.validate();

    params.schedule.steps = static_cast<int>(get_u32(in));
    params.schedule.alpha_bar = get_vector(in, params.schedule.steps + 1);
    params.schedule.sigma = get_vector(in, params.schedule.steps + 1);
    params.schedule.weights = get_vector(in, params.schedule.steps + 1);
    params.schedule.validate();

    const int norm_dim = static_cast<int>(get_u32(in));
    if (norm_dim != a.state_dim) throw std::runtime_error("checkpoint: norm dim mismatch");
    params.norm_mean = get_vector(in, norm_dim);
    params.norm_std = get_vector(in, norm_dim);

    const auto specs = denoiser_tensor_specs(a);
    const std::uint32_t count = get_u32(in);
    if (count != specs.size()) throw std::runtime_error("checkpoint: tensor count mismatch");
    params.weights.reserve(count);
    for (const TensorSpec& spec : specs) {
        const int rows = static_cast<int>(get_u32(in));
        const int cols = static_cast<int>(get_u32(in));
        if (rows != spec.rows || cols != spec.cols) {
            throw std::runtime_error("checkpoint: shape mismatch for " + spec.name);
        }
        Mat m(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) m(i, j) = get_f64(in);
        }
        params.weights.push_back(std::move(m));
    }
    return params;
}

}  // namespace egokit
