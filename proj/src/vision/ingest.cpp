#include "screenrep/ingest.hpp"

#include "screenrep/csv.hpp"
#include "screenrep/errors.hpp"
#include "screenrep/taxonomy.hpp"

#include <opencv2/videoio.hpp>

#include <cmath>

namespace screenrep {

namespace fs = std::filesystem;

struct FrameSampler::Impl {
    cv::VideoCapture cap;
    double rate = 1.0;
    double fps = 0.0;
    std::size_t decoded = 0;  // frames grabbed so far
    std::size_t next_sample = 0;
};

FrameSampler::FrameSampler(const fs::path& video, double rate) : impl_(std::make_unique<Impl>()) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw InputError("sampling rate must be positive");
    if (!fs::is_regular_file(video)) throw InputError("video not found: " + video.string());
    impl_->rate = rate;
    if (!impl_->cap.open(video.string(), cv::CAP_ANY) || !impl_->cap.isOpened()) {
        throw InputError("cannot decode video: " + video.string());
    }
    const double fps = impl_->cap.get(cv::CAP_PROP_FPS);
    impl_->fps = std::isfinite(fps) && fps > 0.0 ? fps : 0.0;
}

FrameSampler::~FrameSampler() = default;
FrameSampler::FrameSampler(FrameSampler&&) noexcept = default;
FrameSampler& FrameSampler::operator=(FrameSampler&&) noexcept = default;

double FrameSampler::rate() const { return impl_->rate; }
double FrameSampler::native_fps() const { return impl_->fps; }

std::optional<Frame> FrameSampler::next() {
    Impl& m = *impl_;
    constexpr double kEps = 1e-9;
    while (m.cap.grab()) {
        const std::size_t index = m.decoded++;
        const double ts = m.fps > 0.0 ? static_cast<double>(index) / m.fps : m.cap.get(cv::CAP_PROP_POS_MSEC) / 1000.0;
        const double due = static_cast<double>(m.next_sample) / m.rate;
        if (ts + kEps < due) continue;
        // skip sample times this frame already covers so no frame repeats
        while (static_cast<double>(m.next_sample) / m.rate <= ts + kEps) ++m.next_sample;
        cv::Mat bgr;
        if (!m.cap.retrieve(bgr) || bgr.empty()) throw InputError("cannot decode frame " + std::to_string(index));
        return Frame{index, ts, from_bgr(bgr)};
    }
    return std::nullopt;
}

std::vector<Frame> sample_frames(const fs::path& video, double rate) {
    FrameSampler sampler(video, rate);
    std::vector<Frame> frames;
    while (auto f = sampler.next()) frames.push_back(std::move(*f));
    return frames;
}

std::vector<LabeledImage> load_manifest(const fs::path& manifest, const std::optional<fs::path>& image_root) {
    const CsvTable table = CsvTable::read(manifest);
    const std::size_t c_file = table.require_column("file");
    const std::size_t c_age = table.require_column("age");
    const std::size_t c_gender = table.require_column("gender");
    const fs::path root = image_root ? *image_root : manifest.parent_path();

    std::vector<LabeledImage> out;
    out.reserve(table.size());
    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& row = table.rows()[r];
        const std::string where = manifest.string() + ":" + std::to_string(table.line_of(r));
        const auto gender = parse_gender(row[c_gender]);
        if (!gender) throw FormatError(where + ": unknown gender label '" + row[c_gender] + "'");
        const auto age = parse_age_group(row[c_age]);
        if (!age) throw FormatError(where + ": unknown age label '" + row[c_age] + "'");
        if (row[c_file].empty()) throw FormatError(where + ": empty file entry");
        LabeledImage img;
        img.file = row[c_file];
        const fs::path p(img.file);
        img.path = p.is_absolute() ? p : root / p;
        img.gender = *gender;
        img.age = *age;
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace screenrep
