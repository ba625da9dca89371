#include "phipca/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace phipca {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset,
                        const char* what) {
    if (offset + 4 > buf.size()) {
        std::ostringstream os;
        os << "truncated " << what << " at byte offset " << offset << " (file size " << buf.size()
           << ")";
        throw ParseError(os.str());
    }
    return (std::uint32_t(buf[offset]) << 24) | (std::uint32_t(buf[offset + 1]) << 16) |
           (std::uint32_t(buf[offset + 2]) << 8) | std::uint32_t(buf[offset + 3]);
}

void push_be32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v >> 24));
    buf.push_back(static_cast<std::uint8_t>(v >> 16));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
    buf.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

IdxImageSet parse_idx_bytes(const std::vector<std::uint8_t>& images,
                            const std::vector<std::uint8_t>& labels) {
    const std::uint32_t img_magic = read_be32(images, 0, "image magic");
    if (img_magic != kImageMagic) {
        std::ostringstream os;
        os << "bad image magic 0x" << std::hex << img_magic << " at byte offset 0";
        throw ParseError(os.str());
    }
    IdxImageSet set;
    set.count = static_cast<int>(read_be32(images, 4, "image count"));
    set.rows = static_cast<int>(read_be32(images, 8, "row count"));
    set.cols = static_cast<int>(read_be32(images, 12, "column count"));
    const std::size_t payload = static_cast<std::size_t>(set.count) * set.rows * set.cols;
    if (images.size() != 16 + payload) {
        std::ostringstream os;
        os << "image payload truncated: expected " << 16 + payload << " bytes, got "
           << images.size() << " (divergence at byte offset "
           << std::min(images.size(), 16 + payload) << ")";
        throw ParseError(os.str());
    }
    set.pixels.resize(payload);
    for (std::size_t i = 0; i < payload; ++i) set.pixels[i] = images[16 + i];

    const std::uint32_t lab_magic = read_be32(labels, 0, "label magic");
    if (lab_magic != kLabelMagic) {
        std::ostringstream os;
        os << "bad label magic 0x" << std::hex << lab_magic << " at byte offset 0";
        throw ParseError(os.str());
    }
    const int lab_count = static_cast<int>(read_be32(labels, 4, "label count"));
    if (lab_count != set.count) {
        std::ostringstream os;
        os << "count mismatch: " << set.count << " images vs " << lab_count << " labels";
        throw ParseError(os.str());
    }
    if (labels.size() != 8 + static_cast<std::size_t>(lab_count)) {
        std::ostringstream os;
        os << "label payload truncated: expected " << 8 + lab_count << " bytes, got "
           << labels.size() << " (divergence at byte offset "
           << std::min(labels.size(), std::size_t(8) + lab_count) << ")";
        throw ParseError(os.str());
    }
    set.labels.assign(labels.begin() + 8, labels.end());
    return set;
}

IdxImageSet parse_idx(const std::string& images_path, const std::string& labels_path) {
    return parse_idx_bytes(read_file(images_path), read_file(labels_path));
}

std::vector<std::uint8_t> serialize_idx_images(const IdxImageSet& set) {
    std::vector<std::uint8_t> buf;
    buf.reserve(16 + set.pixels.size());
    push_be32(buf, kImageMagic);
    push_be32(buf, static_cast<std::uint32_t>(set.count));
    push_be32(buf, static_cast<std::uint32_t>(set.rows));
    push_be32(buf, static_cast<std::uint32_t>(set.cols));
    for (double v : set.pixels) {
        const double c = std::clamp(v, 0.0, 255.0);
        buf.push_back(static_cast<std::uint8_t>(std::lround(c)));
    }
    return buf;
}

std::vector<std::uint8_t> serialize_idx_labels(const IdxImageSet& set) {
    std::vector<std::uint8_t> buf;
    buf.reserve(8 + set.labels.size());
    push_be32(buf, kLabelMagic);
    push_be32(buf, static_cast<std::uint32_t>(set.count));
    buf.insert(buf.end(), set.labels.begin(), set.labels.end());
    return buf;
}

Eigen::MatrixXd IdxImageSet::matrix_for_digit(int digit) const {
    std::vector<int> rows_idx;
    for (int i = 0; i < count; ++i)
        if (digit < 0 || labels[i] == digit) rows_idx.push_back(i);
    Eigen::MatrixXd x(rows_idx.size(), pixel_dim());
    for (std::size_t i = 0; i < rows_idx.size(); ++i)
        for (int j = 0; j < pixel_dim(); ++j)
            x(static_cast<int>(i), j) = pixels[static_cast<std::size_t>(rows_idx[i]) * pixel_dim() + j];
    return x;
}

void write_pgm(const std::string& path, const Eigen::VectorXd& image, int rows, int cols) {
    if (image.size() != rows * cols) throw ConfigError("write_pgm: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_pgm: cannot open " + path);
    out << "P5\n" << cols << " " << rows << "\n255\n";
    for (int i = 0; i < image.size(); ++i) {
        const double c = std::clamp(image[i], 0.0, 255.0);
        out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(c))));
    }
}

Eigen::VectorXd read_pgm(const std::string& path, int& rows, int& cols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("read_pgm: cannot open " + path);
    std::string magic;
    int maxval = 0;
    in >> magic >> cols >> rows >> maxval;
    if (magic != "P5" || maxval != 255) throw ParseError("read_pgm: not a P5/255 file: " + path);
    in.get();  // single whitespace after header
    Eigen::VectorXd image(rows * cols);
    for (int i = 0; i < rows * cols; ++i) {
        int c = in.get();
        if (c == EOF) throw ParseError("read_pgm: truncated payload in " + path);
        image[i] = static_cast<double>(c);
    }
    return image;
}

}  // namespace phipca
