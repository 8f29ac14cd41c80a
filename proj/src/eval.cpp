#include "stg/eval.hpp"

#include "stg/knn_index.hpp"
#include "stg/sampling.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace stg {
namespace {

struct NearestPairs {
    std::vector<double> d2;        // squared distance to nearest target point
    std::vector<std::size_t> nn;   // nearest target index
};

NearestPairs nearest(const PointCloud& from, const PointCloud& to, Exec exec) {
    const KnnIndex index(to.coords);
    NearestPairs out;
    out.d2.resize(from.size());
    out.nn.resize(from.size());
    STG_OMP_FOR_STATIC_IF(is_parallel(exec))
    for (std::size_t i = 0; i < from.size(); ++i) {
        const std::size_t j = index.knn(from.coords[i], 1).front();
        out.nn[i] = j;
        out.d2[i] = (from.coords[i] - to.coords[j]).squaredNorm();
    }
    return out;
}

double ordered_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

void require_nonempty(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("metrics need two nonempty clouds");
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string csv_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

}  // namespace

double mse(const PointCloud& denoised, const PointCloud& truth, Exec exec) {
    require_nonempty(denoised, truth);
    const double forward = ordered_sum(nearest(denoised, truth, exec).d2) / static_cast<double>(denoised.size());
    const double backward = ordered_sum(nearest(truth, denoised, exec).d2) / static_cast<double>(truth.size());
    return 0.5 * (forward + backward);
}

double snr(const PointCloud& denoised, const PointCloud& truth, Exec exec) {
    require_nonempty(denoised, truth);
    const NearestPairs np = nearest(denoised, truth, exec);
    double signal = 0.0;
    for (std::size_t j : np.nn) signal += truth.coords[j].squaredNorm();
    const double error = ordered_sum(np.d2);
    if (error == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / error);
}

std::uint64_t frame_noise_seed(std::uint64_t base, std::size_t sigma_index, std::size_t frame) {
    return splitmix64(splitmix64(base ^ (0x1000193ULL * (sigma_index + 1))) + frame);
}

std::vector<BenchmarkRow> run_benchmark(const std::string& name, const Sequence& clean,
                                        const std::vector<double>& sigmas, const DenoiseConfig& cfg,
                                        const std::vector<Mode>& modes, std::uint64_t noise_seed) {
    if (clean.frames.empty()) throw std::invalid_argument("benchmark needs at least one frame");
    for (const auto& f : clean.frames) f.validate();
    std::vector<BenchmarkRow> rows;
    for (std::size_t s = 0; s < sigmas.size(); ++s) {
        Sequence noisy;
        for (std::size_t t = 0; t < clean.size(); ++t) {
            noisy.frames.push_back(add_gaussian_noise(clean.frames[t], sigmas[s], frame_noise_seed(noise_seed, s, t)));
        }
        std::vector<double> mse_noisy(clean.size()), snr_noisy(clean.size());
        for (std::size_t t = 0; t < clean.size(); ++t) {
            mse_noisy[t] = mse(noisy.frames[t], clean.frames[t], cfg.exec);
            snr_noisy[t] = snr(noisy.frames[t], clean.frames[t], cfg.exec);
        }
        for (Mode mode : modes) {
            DenoiseConfig mc = cfg;
            mc.mode = mode;
            std::vector<PointCloud> done;
            done.reserve(clean.size());
            for (std::size_t t = 0; t < clean.size(); ++t) {
                const auto start = std::chrono::steady_clock::now();
                FrameResult fr = denoise_frame(noisy.frames[t], t == 0 ? nullptr : &done.back(), mc);
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                BenchmarkRow row;
                row.sequence = name;
                row.frame = t;
                row.sigma = sigmas[s];
                row.mode = mode;
                row.mse_noisy = mse_noisy[t];
                row.snr_noisy = snr_noisy[t];
                row.mse_denoised = mse(fr.cloud, clean.frames[t], cfg.exec);
                row.snr_denoised = snr(fr.cloud, clean.frames[t], cfg.exec);
                row.seconds = secs;
                rows.push_back(std::move(row));
                done.push_back(std::move(fr.cloud));
            }
        }
    }
    return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
    out << "sequence,frame,sigma,mode,mse_noisy,mse_denoised,snr_noisy,snr_denoised,seconds\n";
    for (const auto& r : rows) {
        out << r.sequence << ',' << r.frame << ',' << csv_real(r.sigma) << ',' << to_string(r.mode) << ','
            << csv_real(r.mse_noisy) << ',' << csv_real(r.mse_denoised) << ',' << csv_real(r.snr_noisy) << ','
            << csv_real(r.snr_denoised) << ',' << csv_real(r.seconds) << '\n';
    }
}

nlohmann::json json_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

nlohmann::json benchmark_json(const std::vector<BenchmarkRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"sequence", r.sequence},
                       {"frame", r.frame},
                       {"sigma", r.sigma},
                       {"mode", to_string(r.mode)},
                       {"mse_noisy", json_real(r.mse_noisy)},
                       {"mse_denoised", json_real(r.mse_denoised)},
                       {"snr_noisy", json_real(r.snr_noisy)},
                       {"snr_denoised", json_real(r.snr_denoised)},
                       {"seconds", r.seconds}});
    }
    return arr;
}

}  // namespace stg
