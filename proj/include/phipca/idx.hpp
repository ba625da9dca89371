#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phipca/common.hpp"

namespace phipca {

// IDX image/label pair (the big-endian format used by the handwritten-digit
// corpus). Pixels are promoted to reals in [0, 255].
struct IdxImageSet {
    int count = 0;
    int rows = 0;
    int cols = 0;
    std::vector<double> pixels;        // count * rows * cols
    std::vector<std::uint8_t> labels;  // count entries in 0..9

    int pixel_dim() const { return rows * cols; }
    // count x (rows*cols) matrix restricted to one digit (or all, digit = -1).
    Eigen::MatrixXd matrix_for_digit(int digit) const;
};

IdxImageSet parse_idx(const std::string& images_path, const std::string& labels_path);
IdxImageSet parse_idx_bytes(const std::vector<std::uint8_t>& images,
                            const std::vector<std::uint8_t>& labels);

// Bit-exact inverses of parse_idx for round-trip checks. Pixel reals are
// rounded to the nearest byte after clamping to [0, 255].
std::vector<std::uint8_t> serialize_idx_images(const IdxImageSet& set);
std::vector<std::uint8_t> serialize_idx_labels(const IdxImageSet& set);

// Binary PGM (P5, maxval 255). Values are clamped to [0, 255] at emission.
void write_pgm(const std::string& path, const Eigen::VectorXd& image, int rows, int cols);
Eigen::VectorXd read_pgm(const std::string& path, int& rows, int& cols);

}  // namespace phipca
