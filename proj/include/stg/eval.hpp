#pragma once

#include "stg/parallel.hpp"
#include "stg/pipeline.hpp"
#include "stg/point_cloud.hpp"

#include <json.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace stg {

/// Symmetric nearest-neighbor MSE: the mean squared distance from each point
/// to the nearest point of the other cloud, averaged over both directions.
double mse(const PointCloud& denoised, const PointCloud& truth, Exec exec = Exec::parallel);

/// 10 log10(sum |t_nn(i)|^2 / sum |d_i - t_nn(i)|^2) over denoised points with
/// nearest truth point t_nn(i). +infinity when the error is zero.
double snr(const PointCloud& denoised, const PointCloud& truth, Exec exec = Exec::parallel);

struct BenchmarkRow {
    std::string sequence;
    std::size_t frame = 0;
    double sigma = 0.0;
    Mode mode = Mode::full;
    double mse_noisy = 0.0;
    double mse_denoised = 0.0;
    double snr_noisy = 0.0;
    double snr_denoised = 0.0;
    double seconds = 0.0;
};

inline const std::vector<double> kDefaultSigmas = {0.03, 0.05, 0.07, 0.1};

/// For every sigma: corrupt each clean frame with seeded noise (identical
/// across modes), denoise the sequence in every mode and score each frame
/// against its clean version.
std::vector<BenchmarkRow> run_benchmark(const std::string& name, const Sequence& clean,
                                        const std::vector<double>& sigmas, const DenoiseConfig& cfg,
                                        const std::vector<Mode>& modes, std::uint64_t noise_seed);

/// Noise seed used for frame `frame` at noise level index `sigma_index`.
std::uint64_t frame_noise_seed(std::uint64_t base, std::size_t sigma_index, std::size_t frame);

/// Header: sequence,frame,sigma,mode,mse_noisy,mse_denoised,snr_noisy,snr_denoised,seconds.
/// Infinite SNR is written as "inf".
void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);
nlohmann::json benchmark_json(const std::vector<BenchmarkRow>& rows);

/// Real number as JSON, with +/-infinity as the strings "inf" / "-inf".
nlohmann::json json_real(double v);

}  // namespace stg
