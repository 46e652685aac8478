#include "screenrep/preprocess.hpp"

#include "screenrep/errors.hpp"
#include "screenrep/simd/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace screenrep {

PreprocessConfig PreprocessConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open " + path.string());
    PreprocessConfig c;
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.value("resample", 3) != 3) throw ModelError(path.string() + ": only bicubic resampling (3) is supported");
        c.do_resize = j.value("do_resize", true);
        c.do_center_crop = j.value("do_center_crop", true);
        if (j.contains("size")) {
            const auto& s = j["size"];
            if (s.is_number()) {
                c.shortest_edge = s.get<int>();
            } else if (s.contains("shortest_edge")) {
                c.shortest_edge = s["shortest_edge"].get<int>();
            } else {
                throw ModelError(path.string() + ": only shortest_edge resizing is supported");
            }
        }
        if (j.contains("crop_size")) {
            const auto& s = j["crop_size"];
            if (s.is_number()) {
                c.crop_height = c.crop_width = s.get<int>();
            } else {
                c.crop_height = s.at("height").get<int>();
                c.crop_width = s.at("width").get<int>();
            }
        }
        if (j.value("do_rescale", true)) {
            c.rescale_factor = j.value("rescale_factor", 1.0 / 255.0);
        } else {
            c.rescale_factor = 1.0f;
        }
        if (j.value("do_normalize", true)) {
            const auto mean = j.at("image_mean").get<std::vector<float>>();
            const auto sd = j.at("image_std").get<std::vector<float>>();
            if (mean.size() != 3 || sd.size() != 3) throw ModelError(path.string() + ": image_mean/image_std need 3 values");
            std::copy(mean.begin(), mean.end(), c.mean.begin());
            std::copy(sd.begin(), sd.end(), c.std.begin());
        } else {
            c.mean = {0.0f, 0.0f, 0.0f};
            c.std = {1.0f, 1.0f, 1.0f};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
    if (c.shortest_edge <= 0 || c.crop_height <= 0 || c.crop_width <= 0) throw ModelError(path.string() + ": invalid sizes");
    return c;
}

namespace {

constexpr int kPrecisionBits = 32 - 8 - 2;

double bicubic(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
    return 0.0;
}

struct Coeffs {
    int ksize = 0;
    std::vector<int> bounds;  // per output: first input index, count
    std::vector<int> weights;  // fixed point, ksize per output
};

Coeffs precompute(int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    const double filterscale = std::max(scale, 1.0);
    const double support = 2.0 * filterscale;
    Coeffs c;
    c.ksize = static_cast<int>(std::ceil(support)) * 2 + 1;
    c.bounds.resize(static_cast<std::size_t>(out_size) * 2);
    c.weights.assign(static_cast<std::size_t>(out_size) * c.ksize, 0);
    std::vector<double> k(c.ksize);
    for (int xx = 0; xx < out_size; ++xx) {
        const double center = (xx + 0.5) * scale;
        const double ss = 1.0 / filterscale;
        int xmin = static_cast<int>(center - support + 0.5);
        if (xmin < 0) xmin = 0;
        int xmax = static_cast<int>(center + support + 0.5);
        if (xmax > in_size) xmax = in_size;
        xmax -= xmin;
        double ww = 0.0;
        std::fill(k.begin(), k.end(), 0.0);
        for (int x = 0; x < xmax; ++x) {
            k[x] = bicubic((x + xmin - center + 0.5) * ss);
            ww += k[x];
        }
        for (int x = 0; x < xmax; ++x) {
            if (ww != 0.0) k[x] /= ww;
        }
        for (int x = 0; x < c.ksize; ++x) {
            const double v = k[x] * (1 << kPrecisionBits);
            c.weights[static_cast<std::size_t>(xx) * c.ksize + x] = static_cast<int>(k[x] < 0 ? -0.5 + v : 0.5 + v);
        }
        c.bounds[xx * 2] = xmin;
        c.bounds[xx * 2 + 1] = xmax;
    }
    return c;
}

std::uint8_t clip8(int v) {
    if (v >= (1 << kPrecisionBits << 8)) return 255;
    if (v <= 0) return 0;
    return static_cast<std::uint8_t>(v >> kPrecisionBits);
}

}  // namespace

RgbImage resize_bicubic(const RgbImage& in, int width, int height) {
    if (in.empty()) throw InputError("resize: empty image");
    if (width <= 0 || height <= 0) throw InputError("resize: invalid output size");
    if (width == in.width && height == in.height) return in;

    const Coeffs horiz = precompute(in.width, width);
    Coeffs vert = precompute(in.height, height);
    const int ybox_first = vert.bounds[0];
    const int ybox_last = vert.bounds[(height - 1) * 2] + vert.bounds[(height - 1) * 2 + 1];

    const RgbImage* src = &in;
    RgbImage temp;
    if (width != in.width) {
        // horizontal pass over the source rows the vertical pass will read
        for (int i = 0; i < height; ++i) vert.bounds[i * 2] -= ybox_first;
        temp = RgbImage(width, ybox_last - ybox_first);
        for (int yy = 0; yy < temp.height; ++yy) {
            const std::uint8_t* row = in.row(yy + ybox_first);
            std::uint8_t* out = temp.row(yy);
            for (int xx = 0; xx < width; ++xx) {
                const int xmin = horiz.bounds[xx * 2], xmax = horiz.bounds[xx * 2 + 1];
                const int* k = horiz.weights.data() + static_cast<std::size_t>(xx) * horiz.ksize;
                int s0 = 1 << (kPrecisionBits - 1), s1 = s0, s2 = s0;
                for (int x = 0; x < xmax; ++x) {
                    const std::uint8_t* p = row + (x + xmin) * 3;
                    s0 += p[0] * k[x];
                    s1 += p[1] * k[x];
                    s2 += p[2] * k[x];
                }
                out[xx * 3] = clip8(s0);
                out[xx * 3 + 1] = clip8(s1);
                out[xx * 3 + 2] = clip8(s2);
            }
        }
        src = &temp;
    }
    if (height == src->height && ybox_first == 0) return *src;

    RgbImage out(width, height);
    for (int yy = 0; yy < height; ++yy) {
        const int ymin = vert.bounds[yy * 2], ymax = vert.bounds[yy * 2 + 1];
        const int* k = vert.weights.data() + static_cast<std::size_t>(yy) * vert.ksize;
        std::uint8_t* dst = out.row(yy);
        for (int xx = 0; xx < width * 3; ++xx) {
            int s = 1 << (kPrecisionBits - 1);
            for (int y = 0; y < ymax; ++y) s += src->row(y + ymin)[xx] * k[y];
            dst[xx] = clip8(s);
        }
    }
    return out;
}

std::array<int, 2> shortest_edge_size(int width, int height, int shortest_edge) {
    if (width <= 0 || height <= 0) throw InputError("resize: empty image");
    const int short_side = std::min(width, height), long_side = std::max(width, height);
    const int new_long = static_cast<int>(static_cast<double>(shortest_edge) * long_side / short_side);
    return width <= height ? std::array<int, 2>{shortest_edge, new_long} : std::array<int, 2>{new_long, shortest_edge};
}

namespace {

int floor_div2(int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

}  // namespace

RgbImage center_crop(const RgbImage& image, int width, int height) {
    if (width <= 0 || height <= 0) throw InputError("center_crop: invalid size");
    const int top = floor_div2(image.height - height);
    const int left = floor_div2(image.width - width);
    RgbImage out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = y + top;
        if (sy < 0 || sy >= image.height) continue;
        for (int x = 0; x < width; ++x) {
            const int sx = x + left;
            if (sx < 0 || sx >= image.width) continue;
            std::copy_n(image.row(sy) + sx * 3, 3, out.row(y) + x * 3);
        }
    }
    return out;
}

std::vector<float> preprocess(const RgbImage& image, const PreprocessConfig& config) {
    if (image.empty()) throw InputError("preprocess: empty image");
    RgbImage work = image;
    if (config.do_resize) {
        const auto [w, h] = shortest_edge_size(image.width, image.height, config.shortest_edge);
        work = resize_bicubic(image, w, h);
    }
    if (config.do_center_crop) work = center_crop(work, config.crop_width, config.crop_height);

    const std::size_t pixels = static_cast<std::size_t>(work.width) * work.height;
    std::vector<float> out(pixels * 3);
    const float inv_std[3] = {1.0f / config.std[0], 1.0f / config.std[1], 1.0f / config.std[2]};
    if (config.rescale_factor == 1.0f / 255.0f) {
        simd::active().standardize_rgb(work.pixels.data(), pixels, config.mean.data(), inv_std, out.data());
    } else {
        for (std::size_t c = 0; c < 3; ++c) {
            for (std::size_t p = 0; p < pixels; ++p) {
                out[c * pixels + p] = (work.pixels[p * 3 + c] * config.rescale_factor - config.mean[c]) * inv_std[c];
            }
        }
    }
    return out;
}

}  // namespace screenrep
