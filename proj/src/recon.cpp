#include "phipca/recon.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "phipca/rng.hpp"

namespace phipca {

namespace {
constexpr std::uint64_t kMaskPurpose = 0x6d61736b;   // "mask"
constexpr std::uint64_t kNoisePurpose = 0x6e6f6973;  // "nois"
constexpr std::uint64_t kDigitPurpose = 0x64696769;  // "digi"
}  // namespace

ContaminationResult contaminate_images(const Eigen::MatrixXd& x, double pi, double sigma_out,
                                       std::uint64_t seed) {
    const int n = static_cast<int>(x.rows());
    const int p = static_cast<int>(x.cols());
    const int n_corrupt = static_cast<int>(std::lround(pi * n));
    ContaminationResult result{x, {}};
    if (n_corrupt == 0 || sigma_out == 0.0) {
        if (n_corrupt > 0 && sigma_out == 0.0) {
            // zero-scale noise: rows are selected but unchanged
        } else {
            return result;
        }
    }

    std::mt19937_64 eng = substream(seed, 0, kMaskPurpose);
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), eng);
    result.mask.assign(idx.begin(), idx.begin() + n_corrupt);
    std::sort(result.mask.begin(), result.mask.end());

    std::mt19937_64 noise_eng = substream(seed, 0, kNoisePurpose);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::chi_squared_distribution<double> chi2(3.0);
    for (int row : result.mask) {
        const double w = chi2(noise_eng);
        const double scale = sigma_out * std::sqrt(3.0 / w);
        for (int j = 0; j < p; ++j) result.data(row, j) += scale * gauss(noise_eng);
    }
    return result;
}

Eigen::VectorXd reconstruct(const AggregatedModel& model, const Eigen::VectorXd& train_mean,
                            const Eigen::VectorXd& x0, int r) {
    if (r > model.decomp.dim()) throw ConfigError("reconstruct: r exceeds available components");
    Eigen::MatrixXd basis = model.subspace(r);
    Eigen::VectorXd centered = x0 - train_mean;
    return train_mean + basis * (basis.transpose() * centered);
}

namespace {

struct Stroke {
    double x0, y0, x1, y1;
};

// Crude polyline skeletons of the ten digits on the unit square
// (x rightward, y downward).
std::vector<Stroke> digit_strokes(int digit) {
    switch (digit) {
        case 0: return {{0.35, 0.2, 0.65, 0.2}, {0.65, 0.2, 0.7, 0.5}, {0.7, 0.5, 0.65, 0.8},
                        {0.65, 0.8, 0.35, 0.8}, {0.35, 0.8, 0.3, 0.5}, {0.3, 0.5, 0.35, 0.2}};
        case 1: return {{0.38, 0.3, 0.52, 0.15}, {0.52, 0.15, 0.52, 0.85}};
        case 2: return {{0.3, 0.3, 0.45, 0.17}, {0.45, 0.17, 0.65, 0.22}, {0.65, 0.22, 0.68, 0.4},
                        {0.68, 0.4, 0.45, 0.6}, {0.45, 0.6, 0.3, 0.8}, {0.3, 0.8, 0.72, 0.8}};
        case 3: return {{0.32, 0.2, 0.65, 0.2}, {0.65, 0.2, 0.5, 0.45}, {0.5, 0.45, 0.68, 0.65},
                        {0.68, 0.65, 0.55, 0.82}, {0.55, 0.82, 0.3, 0.8}};
        case 4: return {{0.6, 0.85, 0.6, 0.15}, {0.6, 0.15, 0.3, 0.6}, {0.3, 0.6, 0.75, 0.6}};
        case 5: return {{0.68, 0.18, 0.35, 0.18}, {0.35, 0.18, 0.33, 0.48}, {0.33, 0.48, 0.6, 0.45},
                        {0.6, 0.45, 0.68, 0.65}, {0.68, 0.65, 0.55, 0.82}, {0.55, 0.82, 0.3, 0.78}};
        case 6: return {{0.62, 0.18, 0.4, 0.35}, {0.4, 0.35, 0.32, 0.6}, {0.32, 0.6, 0.4, 0.8},
                        {0.4, 0.8, 0.62, 0.78}, {0.62, 0.78, 0.66, 0.58}, {0.66, 0.58, 0.35, 0.55}};
        case 7: return {{0.3, 0.18, 0.7, 0.18}, {0.7, 0.18, 0.45, 0.85}};
        case 8: return {{0.5, 0.18, 0.34, 0.32}, {0.34, 0.32, 0.5, 0.48}, {0.5, 0.48, 0.66, 0.32},
                        {0.66, 0.32, 0.5, 0.18}, {0.5, 0.48, 0.32, 0.66}, {0.32, 0.66, 0.5, 0.84},
                        {0.5, 0.84, 0.68, 0.66}, {0.68, 0.66, 0.5, 0.48}};
        default: return {{0.62, 0.2, 0.4, 0.22}, {0.4, 0.22, 0.36, 0.42}, {0.36, 0.42, 0.62, 0.45},
                         {0.62, 0.45, 0.64, 0.2}, {0.64, 0.2, 0.6, 0.85}};
    }
}

Eigen::VectorXd render_digit(int digit, std::mt19937_64& eng, int rows, int cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const double theta = 0.10 * gauss(eng);
    const double sx = 1.0 + 0.08 * gauss(eng);
    const double sy = 1.0 + 0.08 * gauss(eng);
    const double tx = 0.03 * gauss(eng);
    const double ty = 0.03 * gauss(eng);
    const double intensity = 210.0 * (0.85 + 0.3 * unif(eng));
    const double width = 0.85 + 0.25 * unif(eng);  // stroke width in pixels

    Eigen::VectorXd img = Eigen::VectorXd::Zero(rows * cols);
    const double ct = std::cos(theta), st = std::sin(theta);
    for (const Stroke& s : digit_strokes(digit)) {
        const double len = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
        const int steps = std::max(2, static_cast<int>(len * 3 * rows));
        for (int t = 0; t <= steps; ++t) {
            const double u = static_cast<double>(t) / steps;
            double x = s.x0 + u * (s.x1 - s.x0) - 0.5;
            double y = s.y0 + u * (s.y1 - s.y0) - 0.5;
            const double xr = sx * (ct * x - st * y) + 0.5 + tx;
            const double yr = sy * (st * x + ct * y) + 0.5 + ty;
            const double cx = xr * cols, cy = yr * rows;
            const int i0 = std::max(0, static_cast<int>(cy) - 2);
            const int i1 = std::min(rows - 1, static_cast<int>(cy) + 2);
            const int j0 = std::max(0, static_cast<int>(cx) - 2);
            const int j1 = std::min(cols - 1, static_cast<int>(cx) + 2);
            for (int i = i0; i <= i1; ++i) {
                for (int j = j0; j <= j1; ++j) {
                    const double d2 = (i + 0.5 - cy) * (i + 0.5 - cy) +
                                      (j + 0.5 - cx) * (j + 0.5 - cx);
                    const double v = intensity * std::exp(-d2 / (2.0 * width * width)) / steps *
                                     (len * 3 * rows / 2.5);
                    img[i * cols + j] += v;
                }
            }
        }
    }
    for (int i = 0; i < img.size(); ++i) {
        img[i] = std::min(255.0, img[i]) + 2.0 * gauss(eng);
        img[i] = std::clamp(img[i], 0.0, 255.0);
    }
    return img;
}

}  // namespace

SyntheticCorpus synthetic_digits(int digit, int n_train, int n_test, std::uint64_t seed) {
    // Factor corpus: jittered stroke renders give K prototype images; each
    // sample is the prototype mean plus a random linear combination of the
    // deviations plus isotropic pixel noise. The population covariance is
    // exactly rank-K plus a noise floor, so every sane fit sees the same
    // low-dimensional structure on clean data.
    constexpr int kFactors = 30;
    constexpr double kFactorDecay = 0.93;
    constexpr double kPixelNoise = 3.0;

    SyntheticCorpus corpus;
    const int p = corpus.rows * corpus.cols;
    std::mt19937_64 eng = substream(seed, static_cast<std::uint64_t>(digit), kDigitPurpose);

    Eigen::MatrixXd protos(kFactors, p);
    for (int k = 0; k < kFactors; ++k)
        protos.row(k) = render_digit(digit, eng, corpus.rows, corpus.cols).transpose();
    Eigen::RowVectorXd mean = protos.colwise().mean();
    Eigen::MatrixXd basis = protos.rowwise() - mean;

    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&](Eigen::MatrixXd& out, int n) {
        out.resize(n, p);
        for (int i = 0; i < n; ++i) {
            Eigen::RowVectorXd row = mean;
            double scale = 1.0;
            for (int k = 0; k < kFactors; ++k, scale *= kFactorDecay)
                row += gauss(eng) * scale * basis.row(k);
            for (int j = 0; j < p; ++j) row[j] += kPixelNoise * gauss(eng);
            out.row(i) = row;
        }
    };
    draw(corpus.train, n_train);
    draw(corpus.test, n_test);
    return corpus;
}

double ReconResult::mean_mse() const {
    if (mse.empty()) return 0.0;
    return std::accumulate(mse.begin(), mse.end(), 0.0) / mse.size();
}

namespace {

struct DigitData {
    Eigen::MatrixXd train;
    Eigen::MatrixXd test;
    int rows = 28, cols = 28;
};

DigitData load_digit(const ReconConfig& config, int digit) {
    namespace fs = std::filesystem;
    const fs::path dir = config.data_dir;
    const fs::path train_img = dir / "train-images-idx3-ubyte";
    const fs::path train_lab = dir / "train-labels-idx1-ubyte";
    const fs::path test_img = dir / "t10k-images-idx3-ubyte";
    const fs::path test_lab = dir / "t10k-labels-idx1-ubyte";
    const bool have_real = !config.data_dir.empty() && fs::exists(train_img) &&
                           fs::exists(train_lab) && fs::exists(test_img) && fs::exists(test_lab);
    DigitData data;
    if (have_real) {
        IdxImageSet train = parse_idx(train_img.string(), train_lab.string());
        IdxImageSet test = parse_idx(test_img.string(), test_lab.string());
        data.rows = train.rows;
        data.cols = train.cols;
        data.train = train.matrix_for_digit(digit);
        data.test = test.matrix_for_digit(digit);
        if (config.n_train_cap > 0 && data.train.rows() > config.n_train_cap)
            data.train = data.train.topRows(config.n_train_cap).eval();
        if (config.n_test > 0 && data.test.rows() > config.n_test)
            data.test = data.test.topRows(config.n_test).eval();
    } else if (config.fallback_synthetic) {
        SyntheticCorpus corpus =
            synthetic_digits(digit, config.n_train_cap, config.n_test, config.seed);
        data.train = std::move(corpus.train);
        data.test = std::move(corpus.test);
    } else {
        throw ConfigError("run_recon_study: dataset not found in '" + config.data_dir +
                          "' and the synthetic fallback is disabled");
    }
    if (config.scale_pixels) {
        data.train /= 255.0;
        data.test /= 255.0;
    }
    return data;
}

struct GridPoint {
    double pi;
    double sigma_out;
};

std::vector<GridPoint> setting_grid(char setting) {
    std::vector<GridPoint> grid;
    if (setting == 'i' || setting == '1') {
        for (double pi : {0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30}) grid.push_back({pi, 300.0});
    } else if (setting == 'I' || setting == '2') {  // setting "ii"
        for (double s : {100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0})
            grid.push_back({0.1, s});
    } else {
        throw ConfigError("run_recon_study: setting must be 'i' or 'ii'");
    }
    return grid;
}

AggregatedModel fit_recon_method(const std::string& method, const Eigen::MatrixXd& x, int m,
                                 std::uint64_t seed) {
    if (method == "HM") return fit_phi_pca(x, m, PhiSpec::power(-1.0), seed);
    if (method == "GM") return fit_phi_pca(x, m, PhiSpec::log_limit(), seed);
    if (method == "AM") return fit_phi_pca(x, m, PhiSpec::power(1.0), seed);
    if (method == "PCA") return fit_phi_pca(x, 1, PhiSpec::power(1.0), seed);
    throw ConfigError("run_recon_study: unknown method " + method);
}

}  // namespace

std::vector<ReconResult> run_recon_study(const ReconConfig& config) {
    namespace fs = std::filesystem;
    std::vector<ReconResult> results;
    const std::vector<GridPoint> grid = setting_grid(config.setting);
    if (!config.out_dir.empty()) fs::create_directories(config.out_dir);

    for (int digit : config.digits) {
        DigitData data = load_digit(config, digit);
        const int n_c = static_cast<int>(data.train.rows());
        const int p = static_cast<int>(data.train.cols());
        const int m = default_m(n_c);
        if (config.r > p) throw ConfigError("run_recon_study: r exceeds pixel dimension");

        for (std::size_t g = 0; g < grid.size(); ++g) {
            ContaminationResult cont = contaminate_images(
                data.train, grid[g].pi, grid[g].sigma_out,
                mix_seed(config.seed, static_cast<std::uint64_t>(digit), g));
            Eigen::VectorXd train_mean = cont.data.colwise().mean().transpose();

            for (const std::string& method : config.methods) {
                AggregatedModel fit = fit_recon_method(
                    method, cont.data, m,
                    mix_seed(config.seed, static_cast<std::uint64_t>(digit) * 131 + g,
                             std::hash<std::string>{}(method)));
                ReconResult res;
                res.digit = digit;
                res.method = method;
                res.r = config.r;
                res.pi = grid[g].pi;
                res.sigma_out = grid[g].sigma_out;
                for (int i = 0; i < data.test.rows(); ++i) {
                    Eigen::VectorXd x0 = data.test.row(i).transpose();
                    Eigen::VectorXd rec = reconstruct(fit, train_mean, x0, config.r);
                    res.mse.push_back((rec - x0).squaredNorm() / p);
                    if (!config.out_dir.empty() && i < config.pgm_emit_count) {
                        std::ostringstream name;
                        name << "recon_d" << digit << "_" << method << "_pi"
                             << grid[g].pi << "_s" << grid[g].sigma_out << "_t" << i << ".pgm";
                        Eigen::VectorXd img = config.scale_pixels ? (rec * 255.0).eval() : rec;
                        write_pgm((fs::path(config.out_dir) / name.str()).string(), img, data.rows,
                                  data.cols);
                    }
                }
                results.push_back(std::move(res));
            }
        }
    }
    return results;
}

}  // namespace phipca
