#include "screenrep/clip_model.hpp"

#include "screenrep/errors.hpp"
#include "screenrep/hash.hpp"
#include "screenrep/safetensors.hpp"
#include "screenrep/simd/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace screenrep {

namespace fs = std::filesystem;

namespace {

void read_tower(const nlohmann::json& j, ClipTowerConfig& t) {
    t.hidden = j.value("hidden_size", t.hidden);
    t.intermediate = j.value("intermediate_size", t.intermediate);
    t.heads = j.value("num_attention_heads", t.heads);
    t.layers = j.value("num_hidden_layers", t.layers);
    t.layer_norm_eps = j.value("layer_norm_eps", t.layer_norm_eps);
    t.hidden_act = j.value("hidden_act", t.hidden_act);
}

}  // namespace

ClipConfig ClipConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path.string());
    ClipConfig c;
    try {
        const auto j = nlohmann::json::parse(in);
        c.projection_dim = j.value("projection_dim", c.projection_dim);
        if (j.contains("vision_config")) {
            const auto& v = j["vision_config"];
            read_tower(v, c.vision);
            c.image_size = v.value("image_size", c.image_size);
            c.patch_size = v.value("patch_size", c.patch_size);
            if (v.value("num_channels", 3) != 3) throw ModelError(path.string() + ": only 3-channel images are supported");
        }
        if (j.contains("text_config")) {
            const auto& t = j["text_config"];
            read_tower(t, c.text);
            c.max_positions = t.value("max_position_embeddings", c.max_positions);
            c.vocab_size = t.value("vocab_size", c.vocab_size);
            c.eos_token_id = t.value("eos_token_id", c.eos_token_id);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
    for (const ClipTowerConfig* t : {&c.vision, &c.text}) {
        if (t->hidden <= 0 || t->heads <= 0 || t->hidden % t->heads != 0 || t->layers <= 0 || t->intermediate <= 0) {
            throw ModelError(path.string() + ": inconsistent transformer sizes");
        }
        if (t->hidden_act != "quick_gelu" && t->hidden_act != "gelu") {
            throw ModelError(path.string() + ": unsupported activation " + t->hidden_act);
        }
    }
    if (c.patch_size <= 0 || c.image_size % c.patch_size != 0) throw ModelError(path.string() + ": image size must be a multiple of the patch size");
    return c;
}

namespace {

struct Linear {
    std::vector<float> w;  // out x in
    std::vector<float> b;  // empty when the layer has no bias
    int in = 0, out = 0;

    void apply(const float* x, std::size_t rows, float* y) const {
        simd::active().gemm_nt(x, w.data(), b.empty() ? nullptr : b.data(), y, rows, static_cast<std::size_t>(out),
                               static_cast<std::size_t>(in));
    }
};

struct LayerNorm {
    std::vector<float> g, b;

    void apply(const float* x, std::size_t rows, std::size_t h, double eps, float* y) const {
        for (std::size_t r = 0; r < rows; ++r) {
            const float* xr = x + r * h;
            double mean = 0.0;
            for (std::size_t i = 0; i < h; ++i) mean += xr[i];
            mean /= static_cast<double>(h);
            double var = 0.0;
            for (std::size_t i = 0; i < h; ++i) var += (xr[i] - mean) * (xr[i] - mean);
            var /= static_cast<double>(h);
            const double inv = 1.0 / std::sqrt(var + eps);
            float* yr = y + r * h;
            for (std::size_t i = 0; i < h; ++i) yr[i] = static_cast<float>((xr[i] - mean) * inv) * g[i] + b[i];
        }
    }
};

struct EncoderLayer {
    LayerNorm ln1, ln2;
    Linear q, k, v, o, fc1, fc2;
};

struct Tower {
    ClipTowerConfig cfg;
    std::vector<EncoderLayer> layers;
};

class Loader {
public:
    explicit Loader(const SafeTensors& st) : st_(st) {}

    std::vector<float> tensor(const std::string& name, std::vector<std::int64_t> shape) const {
        return st_.load_f32(name, shape);
    }

    Linear linear(const std::string& prefix, int in, int out, bool bias = true) const {
        Linear l;
        l.in = in;
        l.out = out;
        l.w = tensor(prefix + ".weight", {out, in});
        if (bias) l.b = tensor(prefix + ".bias", {out});
        return l;
    }

    LayerNorm norm(const std::string& prefix, int h) const {
        return {tensor(prefix + ".weight", {h}), tensor(prefix + ".bias", {h})};
    }

    Tower tower(const std::string& prefix, const ClipTowerConfig& cfg) const {
        Tower t{cfg, {}};
        for (int i = 0; i < cfg.layers; ++i) {
            const std::string p = prefix + ".encoder.layers." + std::to_string(i);
            EncoderLayer l;
            l.ln1 = norm(p + ".layer_norm1", cfg.hidden);
            l.ln2 = norm(p + ".layer_norm2", cfg.hidden);
            l.q = linear(p + ".self_attn.q_proj", cfg.hidden, cfg.hidden);
            l.k = linear(p + ".self_attn.k_proj", cfg.hidden, cfg.hidden);
            l.v = linear(p + ".self_attn.v_proj", cfg.hidden, cfg.hidden);
            l.o = linear(p + ".self_attn.out_proj", cfg.hidden, cfg.hidden);
            l.fc1 = linear(p + ".mlp.fc1", cfg.hidden, cfg.intermediate);
            l.fc2 = linear(p + ".mlp.fc2", cfg.intermediate, cfg.hidden);
            t.layers.push_back(std::move(l));
        }
        return t;
    }

private:
    const SafeTensors& st_;
};

void activate(std::vector<float>& x, const std::string& act) {
    if (act == "quick_gelu") {
        for (float& v : x) v = v / (1.0f + std::exp(-1.702f * v));
    } else {
        for (float& v : x) v = 0.5f * v * (1.0f + std::erf(v * 0.70710678118654752f));
    }
}

// Runs every encoder layer over the sequence in place (seq x hidden).
void run_tower(const Tower& t, std::vector<float>& x, std::size_t seq, bool causal) {
    const auto& kt = simd::active();
    const std::size_t h = static_cast<std::size_t>(t.cfg.hidden);
    const std::size_t heads = static_cast<std::size_t>(t.cfg.heads);
    const std::size_t d = h / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(d));

    std::vector<float> normed(seq * h), q(seq * h), k(seq * h), v(seq * h), ctx(seq * h), proj(seq * h);
    std::vector<float> qh(seq * d), kh(seq * d), vt(d * seq), scores(seq * seq), outh(seq * d);
    std::vector<float> mlp(seq * static_cast<std::size_t>(t.cfg.intermediate));

    for (const EncoderLayer& layer : t.layers) {
        layer.ln1.apply(x.data(), seq, h, t.cfg.layer_norm_eps, normed.data());
        layer.q.apply(normed.data(), seq, q.data());
        layer.k.apply(normed.data(), seq, k.data());
        layer.v.apply(normed.data(), seq, v.data());

        for (std::size_t hd = 0; hd < heads; ++hd) {
            for (std::size_t s = 0; s < seq; ++s) {
                for (std::size_t i = 0; i < d; ++i) {
                    qh[s * d + i] = q[s * h + hd * d + i] * scale;
                    kh[s * d + i] = k[s * h + hd * d + i];
                    vt[i * seq + s] = v[s * h + hd * d + i];
                }
            }
            kt.gemm_nt(qh.data(), kh.data(), nullptr, scores.data(), seq, seq, d);
            for (std::size_t s = 0; s < seq; ++s) {
                float* row = scores.data() + s * seq;
                const std::size_t visible = causal ? s + 1 : seq;
                float peak = -std::numeric_limits<float>::infinity();
                for (std::size_t j = 0; j < visible; ++j) peak = std::max(peak, row[j]);
                float total = 0.0f;
                for (std::size_t j = 0; j < visible; ++j) {
                    row[j] = std::exp(row[j] - peak);
                    total += row[j];
                }
                for (std::size_t j = 0; j < visible; ++j) row[j] /= total;
                for (std::size_t j = visible; j < seq; ++j) row[j] = 0.0f;
            }
            kt.gemm_nt(scores.data(), vt.data(), nullptr, outh.data(), seq, d, seq);
            for (std::size_t s = 0; s < seq; ++s) {
                std::copy_n(outh.data() + s * d, d, ctx.data() + s * h + hd * d);
            }
        }
        layer.o.apply(ctx.data(), seq, proj.data());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += proj[i];

        layer.ln2.apply(x.data(), seq, h, t.cfg.layer_norm_eps, normed.data());
        layer.fc1.apply(normed.data(), seq, mlp.data());
        activate(mlp, t.cfg.hidden_act);
        layer.fc2.apply(mlp.data(), seq, proj.data());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += proj[i];
    }
}

}  // namespace

struct ClipModel::Impl {
    fs::path dir;
    ClipConfig cfg;
    std::string checkpoint_id;
    double logit_scale = 0.0;

    std::vector<float> class_embedding;
    Linear patch;  // hidden x (3 * p * p), no bias
    std::vector<float> vision_pos;
    LayerNorm pre_norm, post_norm;
    Tower vision;
    Linear visual_projection;

    std::vector<float> token_embedding;
    std::vector<float> text_pos;
    Tower text;
    LayerNorm final_norm;
    Linear text_projection;
};

ClipModel::ClipModel(const fs::path& dir) : impl_(std::make_unique<Impl>()) {
    Impl& m = *impl_;
    m.dir = dir;
    const fs::path weights = dir / "model.safetensors";
    if (!fs::is_directory(dir)) throw ModelError("checkpoint directory not found: " + dir.string());
    if (!fs::exists(weights)) throw ModelError("missing " + weights.string());
    m.cfg = ClipConfig::load(dir / "config.json");
    const ClipConfig& c = m.cfg;

    const SafeTensors st(weights);
    const Loader ld(st);
    const int vh = c.vision.hidden, th = c.text.hidden, p = c.patch_size;
    const int grid = c.image_size / p;

    m.class_embedding = ld.tensor("vision_model.embeddings.class_embedding", {vh});
    m.patch.in = 3 * p * p;
    m.patch.out = vh;
    m.patch.w = ld.tensor("vision_model.embeddings.patch_embedding.weight", {vh, 3, p, p});
    m.vision_pos = ld.tensor("vision_model.embeddings.position_embedding.weight", {grid * grid + 1, vh});
    m.pre_norm = ld.norm("vision_model.pre_layrnorm", vh);
    m.vision = ld.tower("vision_model", c.vision);
    m.post_norm = ld.norm("vision_model.post_layernorm", vh);
    m.visual_projection = ld.linear("visual_projection", vh, c.projection_dim, false);

    m.token_embedding = ld.tensor("text_model.embeddings.token_embedding.weight", {c.vocab_size, th});
    m.text_pos = ld.tensor("text_model.embeddings.position_embedding.weight", {c.max_positions, th});
    m.text = ld.tower("text_model", c.text);
    m.final_norm = ld.norm("text_model.final_layer_norm", th);
    m.text_projection = ld.linear("text_projection", th, c.projection_dim, false);

    m.logit_scale = std::exp(static_cast<double>(ld.tensor("logit_scale", {1}).at(0)));
    const fs::path canonical = fs::weakly_canonical(dir);
    const std::string name = canonical.filename().empty() ? canonical.parent_path().filename().string()
                                                          : canonical.filename().string();
    m.checkpoint_id = name + "@" + sha256_file(weights).substr(0, 16);
}

ClipModel::~ClipModel() = default;
ClipModel::ClipModel(ClipModel&&) noexcept = default;
ClipModel& ClipModel::operator=(ClipModel&&) noexcept = default;

const ClipConfig& ClipModel::config() const { return impl_->cfg; }
const fs::path& ClipModel::directory() const { return impl_->dir; }
const std::string& ClipModel::checkpoint_id() const { return impl_->checkpoint_id; }
std::size_t ClipModel::embedding_dim() const { return static_cast<std::size_t>(impl_->cfg.projection_dim); }
double ClipModel::logit_scale() const { return impl_->logit_scale; }

std::vector<float> ClipModel::encode_image(std::span<const float> pixels) const {
    const Impl& m = *impl_;
    const std::size_t size = static_cast<std::size_t>(m.cfg.image_size);
    const std::size_t p = static_cast<std::size_t>(m.cfg.patch_size);
    const std::size_t grid = size / p;
    const std::size_t h = static_cast<std::size_t>(m.cfg.vision.hidden);
    if (pixels.size() != 3 * size * size) {
        throw InputError("encode_image: expected " + std::to_string(3 * size * size) + " values, got " +
                         std::to_string(pixels.size()));
    }

    // patches flattened in (channel, row, column) order to match the conv weight
    const std::size_t n_patches = grid * grid, patch_len = 3 * p * p;
    std::vector<float> patches(n_patches * patch_len);
    for (std::size_t gy = 0; gy < grid; ++gy) {
        for (std::size_t gx = 0; gx < grid; ++gx) {
            float* dst = patches.data() + (gy * grid + gx) * patch_len;
            for (std::size_t c = 0; c < 3; ++c) {
                for (std::size_t y = 0; y < p; ++y) {
                    const float* src = pixels.data() + c * size * size + (gy * p + y) * size + gx * p;
                    std::copy_n(src, p, dst + (c * p + y) * p);
                }
            }
        }
    }
    const std::size_t seq = n_patches + 1;
    std::vector<float> emb(seq * h);
    std::copy(m.class_embedding.begin(), m.class_embedding.end(), emb.begin());
    m.patch.apply(patches.data(), n_patches, emb.data() + h);
    for (std::size_t i = 0; i < emb.size(); ++i) emb[i] += m.vision_pos[i];

    std::vector<float> x(seq * h);
    m.pre_norm.apply(emb.data(), seq, h, m.cfg.vision.layer_norm_eps, x.data());
    run_tower(m.vision, x, seq, false);

    std::vector<float> pooled(h), out(static_cast<std::size_t>(m.cfg.projection_dim));
    m.post_norm.apply(x.data(), 1, h, m.cfg.vision.layer_norm_eps, pooled.data());
    m.visual_projection.apply(pooled.data(), 1, out.data());
    return out;
}

std::vector<float> ClipModel::encode_text(std::span<const std::int32_t> ids) const {
    const Impl& m = *impl_;
    const std::size_t h = static_cast<std::size_t>(m.cfg.text.hidden);
    const std::size_t seq = ids.size();
    if (seq == 0 || seq > static_cast<std::size_t>(m.cfg.max_positions)) {
        throw InputError("encode_text: sequence length " + std::to_string(seq) + " outside 1.." +
                         std::to_string(m.cfg.max_positions));
    }
    std::vector<float> x(seq * h);
    for (std::size_t s = 0; s < seq; ++s) {
        if (ids[s] < 0 || ids[s] >= m.cfg.vocab_size) throw InputError("encode_text: token id out of range");
        const float* tok = m.token_embedding.data() + static_cast<std::size_t>(ids[s]) * h;
        const float* pos = m.text_pos.data() + s * h;
        for (std::size_t i = 0; i < h; ++i) x[s * h + i] = tok[i] + pos[i];
    }
    run_tower(m.text, x, seq, true);

    // pooled at the end-of-text token; eos_token_id == 2 marks legacy configs
    // whose end token is the largest id
    std::size_t at = 0;
    if (m.cfg.eos_token_id == 2) {
        at = static_cast<std::size_t>(std::max_element(ids.begin(), ids.end()) - ids.begin());
    } else {
        const auto it = std::find(ids.begin(), ids.end(), m.cfg.eos_token_id);
        at = it == ids.end() ? 0 : static_cast<std::size_t>(it - ids.begin());
    }
    std::vector<float> pooled(h), out(static_cast<std::size_t>(m.cfg.projection_dim));
    m.final_norm.apply(x.data() + at * h, 1, h, m.cfg.text.layer_norm_eps, pooled.data());
    m.text_projection.apply(pooled.data(), 1, out.data());
    return out;
}

}  // namespace screenrep
