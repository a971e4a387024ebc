#include "egokit/denoiser.hpp"

#include <cmath>
#include <stdexcept>

#include "egokit/random.hpp"

namespace egokit {

void DenoiserArch::validate() const {
    if (width <= 0 || heads <= 0 || width % heads != 0 || head_dim() % 2 != 0) {
        throw std::invalid_argument("DenoiserArch: width must split into even-sized heads");
    }
    if (state_dim <= 0 || cond_dim <= 0 || encoder_blocks < 0 || decoder_blocks < 1 ||
        ffn_hidden <= 0 || max_window < 1) {
        throw std::invalid_argument("DenoiserArch: invalid sizes");
    }
}

std::vector<TensorSpec> denoiser_tensor_specs(const DenoiserArch& arch) {
    std::vector<TensorSpec> specs;
    const int w = arch.width;
    auto push = [&specs](const std::string& name, int r, int c) {
        specs.push_back(TensorSpec{name, r, c});
    };
    auto push_attention = [&](const std::string& prefix) {
        for (const char* part : {"wq", "wk", "wv", "wo"}) {
            push(prefix + "." + part, w, w);
            push(prefix + "." + part + "_b", 1, w);
        }
    };
    auto push_layer_norm = [&](const std::string& prefix) {
        push(prefix + ".gain", 1, w);
        push(prefix + ".bias", 1, w);
    };
    auto push_ffn = [&](const std::string& prefix) {
        push(prefix + ".w1", w, arch.ffn_hidden);
        push(prefix + ".w1_b", 1, arch.ffn_hidden);
        push(prefix + ".w2", arch.ffn_hidden, w);
        push(prefix + ".w2_b", 1, w);
    };

    push("embed.x", arch.state_dim, w);
    push("embed.x_b", 1, w);
    push("embed.c", arch.cond_dim, w);
    push("embed.c_b", 1, w);
    push("time.w1", w, w);
    push("time.w1_b", 1, w);
    push("time.w2", w, w);
    push("time.w2_b", 1, w);
    for (int b = 0; b < arch.encoder_blocks; ++b) {
        const std::string p = "enc" + std::to_string(b);
        push_layer_norm(p + ".ln1");
        push_attention(p + ".attn");
        push_layer_norm(p + ".ln2");
        push_ffn(p + ".ffn");
    }
    push_layer_norm("enc.final_ln");
    for (int b = 0; b < arch.decoder_blocks; ++b) {
        const std::string p = "dec" + std::to_string(b);
        push_layer_norm(p + ".ln1");
        push_attention(p + ".self");
        push_layer_norm(p + ".ln2");
        push_attention(p + ".cross");
        push_layer_norm(p + ".ln3");
        push_ffn(p + ".ffn");
    }
    push_layer_norm("dec.final_ln");
    push("head.w", w, arch.state_dim);
    push("head.b", 1, arch.state_dim);
    return specs;
}

std::size_t DenoiserParams::scalar_count() const {
    std::size_t n = 0;
    for (const Mat& m : weights) n += static_cast<std::size_t>(m.size());
    return n;
}

DenoiserParams init_denoiser(const DenoiserArch& arch, ConditioningVariant variant,
                             const NoiseSchedule& schedule, std::uint64_t seed) {
    arch.validate();
    schedule.validate();
    if (arch.cond_dim != conditioning_dim(variant)) {
        throw std::invalid_argument("init_denoiser: cond_dim does not match the variant");
    }
    DenoiserParams params;
    params.arch = arch;
    params.variant = variant;
    params.schedule = schedule;
    params.norm_mean = Eigen::VectorXd::Zero(arch.state_dim);
    params.norm_std = Eigen::VectorXd::Ones(arch.state_dim);

    Rng rng(seed);
    for (const TensorSpec& spec : denoiser_tensor_specs(arch)) {
        Mat m(spec.rows, spec.cols);
        const bool is_bias = spec.name.ends_with("_b") || spec.name.ends_with(".bias");
        const bool is_gain = spec.name.ends_with(".gain");
        const bool is_head = spec.name.starts_with("head.");
        if (is_head) {
            m.setZero();  // zero output head: the fresh model predicts 0
        } else if (is_gain) {
            m.setOnes();
        } else if (is_bias) {
            m.setZero();
        } else {
            const double limit = std::sqrt(6.0 / (spec.rows + spec.cols));
            for (int i = 0; i < m.rows(); ++i) {
                for (int j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-limit, limit);
            }
        }
        params.weights.push_back(std::move(m));
    }
    return params;
}

namespace {

// Sinusoidal embedding of the noise step, 1 x width.
Mat noise_step_embedding(int n, int width) {
    Mat emb(1, width);
    const int half = width / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
        emb(0, i) = std::sin(n * freq);
        emb(0, half + i) = std::cos(n * freq);
    }
    if (width % 2 == 1) emb(0, width - 1) = 0.0;
    return emb;
}

struct WeightCursor {
    const std::vector<Tape::Var>& vars;
    std::size_t at = 0;
    Tape::Var next() { return vars[at++]; }
};

Tape::Var linear(Tape& tape, Tape::Var x, Tape::Var w, Tape::Var b) {
    return tape.add_row_broadcast(tape.matmul(x, w), b);
}

// Multi-head attention block; queries from q_src, keys/values from kv_src.
// Rotary embeddings are applied per head to Q and K.
Tape::Var attention(Tape& tape, const DenoiserArch& arch, WeightCursor& cur, Tape::Var q_src,
                    Tape::Var kv_src) {
    Tape::Var wq = cur.next(), bq = cur.next();
    Tape::Var wk = cur.next(), bk = cur.next();
    Tape::Var wv = cur.next(), bv = cur.next();
    Tape::Var wo = cur.next(), bo = cur.next();
    Tape::Var q = linear(tape, q_src, wq, bq);
    Tape::Var k = linear(tape, kv_src, wk, bk);
    Tape::Var v = linear(tape, kv_src, wv, bv);

    const int dh = arch.head_dim();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tape::Var> heads;
    heads.reserve(arch.heads);
    for (int h = 0; h < arch.heads; ++h) {
        Tape::Var qh = tape.rope(tape.slice_cols(q, h * dh, dh), arch.rope_base);
        Tape::Var kh = tape.rope(tape.slice_cols(k, h * dh, dh), arch.rope_base);
        Tape::Var vh = tape.slice_cols(v, h * dh, dh);
        Tape::Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)), inv_sqrt_dh);
        heads.push_back(tape.matmul(tape.softmax_rows(scores), vh));
    }
    return linear(tape, tape.concat_cols(heads), wo, bo);
}

Tape::Var ffn(Tape& tape, WeightCursor& cur, Tape::Var x) {
    Tape::Var w1 = cur.next(), b1 = cur.next();
    Tape::Var w2 = cur.next(), b2 = cur.next();
    return linear(tape, tape.gelu(linear(tape, x, w1, b1)), w2, b2);
}

}  // namespace

Tape::Var denoiser_forward(Tape& tape, const DenoiserArch& arch,
                           const std::vector<Tape::Var>& weights, const Mat& x_noised,
                           int noise_step, const Mat& cond) {
    if (x_noised.rows() != cond.rows()) {
        throw std::invalid_argument("denoiser_forward: state/conditioning lengths differ");
    }
    if (x_noised.rows() > arch.max_window) {
        throw std::invalid_argument("denoiser_forward: sequence exceeds the training window");
    }
    if (x_noised.cols() != arch.state_dim || cond.cols() != arch.cond_dim) {
        throw std::invalid_argument("denoiser_forward: feature width mismatch");
    }

    WeightCursor cur{weights};
    Tape::Var x_embed_w = cur.next(), x_embed_b = cur.next();
    Tape::Var c_embed_w = cur.next(), c_embed_b = cur.next();
    Tape::Var t_w1 = cur.next(), t_b1 = cur.next();
    Tape::Var t_w2 = cur.next(), t_b2 = cur.next();

    // Conditioning encoder.
    Tape::Var h = linear(tape, tape.leaf(cond), c_embed_w, c_embed_b);
    for (int b = 0; b < arch.encoder_blocks; ++b) {
        Tape::Var g1 = cur.next(), b1 = cur.next();
        Tape::Var normed = tape.layer_norm_rows(h, g1, b1);
        h = tape.add(h, attention(tape, arch, cur, normed, normed));
        Tape::Var g2 = cur.next(), b2 = cur.next();
        h = tape.add(h, ffn(tape, cur, tape.layer_norm_rows(h, g2, b2)));
    }
    Tape::Var enc_g = cur.next(), enc_b = cur.next();
    Tape::Var z_c = tape.layer_norm_rows(h, enc_g, enc_b);

    // Noise-step embedding, broadcast over timesteps.
    Tape::Var temb = tape.leaf(noise_step_embedding(noise_step, arch.width));
    temb = linear(tape, tape.gelu(linear(tape, temb, t_w1, t_b1)), t_w2, t_b2);

    Tape::Var xh = linear(tape, tape.leaf(x_noised), x_embed_w, x_embed_b);
    xh = tape.add_row_broadcast(xh, temb);
    for (int b = 0; b < arch.decoder_blocks; ++b) {
        Tape::Var g1 = cur.next(), b1 = cur.next();
        Tape::Var normed = tape.layer_norm_rows(xh, g1, b1);
        xh = tape.add(xh, attention(tape, arch, cur, normed, normed));
        Tape::Var g2 = cur.next(), b2 = cur.next();
        xh = tape.add(xh, attention(tape, arch, cur, tape.layer_norm_rows(xh, g2, b2), z_c));
        Tape::Var g3 = cur.next(), b3 = cur.next();
        xh = tape.add(xh, ffn(tape, cur, tape.layer_norm_rows(xh, g3, b3)));
    }
    Tape::Var dec_g = cur.next(), dec_b = cur.next();
    Tape::Var head_w = cur.next(), head_b = cur.next();
    return linear(tape, tape.layer_norm_rows(xh, dec_g, dec_b), head_w, head_b);
}

Mat denoise(const DenoiserParams& params, const Mat& x_noised, int noise_step,
            const Mat& cond) {
    Tape tape;
    std::vector<Tape::Var> weight_vars;
    weight_vars.reserve(params.weights.size());
    for (const Mat& w : params.weights) weight_vars.push_back(tape.leaf(w));
    const Tape::Var out =
        denoiser_forward(tape, params.arch, weight_vars, x_noised, noise_step, cond);
    return tape.value(out);
}

Mat conditioning_matrix(const std::vector<ConditionVector>& cond) {
    if (cond.empty()) throw std::invalid_argument("conditioning_matrix: empty sequence");
    Mat m(static_cast<int>(cond.size()), cond[0].size());
    for (std::size_t t = 0; t < cond.size(); ++t) m.row(static_cast<int>(t)) = cond[t];
    return m;
}

}  // namespace egokit
