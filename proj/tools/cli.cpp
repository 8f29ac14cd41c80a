#include "stg_cli.hpp"

#include "stg/eval.hpp"
#include "stg/ply_io.hpp"
#include "stg/pipeline.hpp"
#include "stg/sampling.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace stg::cli {
namespace {

std::string real_str(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool has_ply_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".ply";
}

// A single file, or every .ply in a directory sorted by file name.
std::vector<fs::path> list_frames(const fs::path& in) {
    if (!fs::exists(in)) throw std::runtime_error("input not found: " + in.string());
    if (!fs::is_directory(in)) return {in};
    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file() && has_ply_extension(entry.path())) frames.push_back(entry.path());
    }
    std::sort(frames.begin(), frames.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    if (frames.empty()) throw std::runtime_error("no .ply frames in " + in.string());
    return frames;
}

Sequence load_frames(const std::vector<fs::path>& files) {
    Sequence seq;
    for (const auto& f : files) seq.frames.push_back(load_ply(f));
    return seq;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::uint64_t downsample_seed(std::uint64_t seed, std::size_t frame) { return frame_noise_seed(~seed, 0, frame); }

// Options shared by every subcommand that preprocesses input frames.
struct Preprocess {
    bool normalize_bbox = false;
    double downsample = 1.0;

    void add_to(CLI::App& app) {
        app.add_flag("--normalize-bbox", normalize_bbox,
                     "Rescale the sequence so its joint bounding-box diagonal is 1");
        app.add_option("--downsample", downsample, "Keep this fraction of each frame's points, at random")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
    }

    std::optional<Normalization> apply_to(Sequence& seq, std::uint64_t seed) const {
        std::optional<Normalization> norm;
        if (normalize_bbox) {
            norm = unit_diagonal_normalization(seq.frames);
            for (auto& f : seq.frames) f = apply(*norm, f);
        }
        if (downsample < 1.0) {
            if (!(downsample > 0.0)) throw std::invalid_argument("--downsample must lie in (0, 1]");
            for (std::size_t t = 0; t < seq.size(); ++t) seq.frames[t] = stg::downsample(seq.frames[t], downsample, downsample_seed(seed, t));
        }
        return norm;
    }
};

void add_config_options(CLI::App& app, DenoiseConfig& cfg) {
    app.add_option("--lambda1", cfg.lambda1, "Temporal consistency weight")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--lambda2", cfg.lambda2, "Spatial smoothness weight")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("-C,--bound", cfg.bound, "Trace bound on the metric factor R")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--pg-step", cfg.pg_step, "Proximal gradient step size")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--pg-iters", cfg.pg_max_iters, "Proximal gradient iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--pg-tol", cfg.pg_rel_tol, "Proximal gradient relative tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("-k,--k", cfg.k, "Neighbors per patch (patches hold k+1 points)")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--patch-fraction", cfg.patch_fraction, "Patch count as a fraction of the point count")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("-r,--r", cfg.r, "Similar patches per target patch")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--window", cfg.h, "Search window h, in nearest patch centers")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--kn", cfg.k_n, "Neighbors for normal estimation")->capture_default_str()->check(CLI::Range(3, 1 << 20));
    app.add_option("--feature-scale", cfg.feature_scale,
                   "Position features in units of this many mean point spacings (0: raw coordinates)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    app.add_option("--outer-iters", cfg.outer_max_iters, "Alternating minimization iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--outer-tol", cfg.outer_rel_tol, "Relative objective change that stops the outer loop")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--cg-tol", cfg.cg_tol, "Conjugate gradient relative residual")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--cg-iters", cfg.cg_max_iters, "Conjugate gradient iteration cap (0: 10 n)")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--seed", cfg.seed, "Seed for patch center selection")->capture_default_str();
}

void add_config_file(CLI::App& app) {
    app.add_option("--config", "File of key=value lines using the long option names; the command line wins");
    for (CLI::Option* opt : app.get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// key=value lines as "--key=value" tokens. Blank lines and lines starting
// with '#' or ';' are ignored; every key must name an option of `sub`.
std::vector<std::string> read_config(const fs::path& path, const CLI::App& sub) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read config file " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    for (int lineno = 1; std::getline(f, line); ++lineno) {
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
            value = value.substr(1, value.size() - 2);
        }
        if (key == "config" || key == "help" || sub.get_option_no_throw("--" + key) == nullptr) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

// Replaces a subcommand's "--config FILE" with the file's settings, placed
// before the other arguments so that explicit flags take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app) {
    std::size_t sub_pos = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (app.get_subcommand_no_throw(args[i]) != nullptr) {
            sub_pos = i;
            break;
        }
    }
    if (sub_pos == args.size()) return args;
    const CLI::App& sub = *app.get_subcommand_no_throw(args[sub_pos]);

    std::vector<std::string> rest, files;
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 == args.size()) throw UsageError("--config needs a file name");
            files.push_back(args[++i]);
        } else if (args[i].rfind("--config=", 0) == 0) {
            files.push_back(args[i].substr(9));
        } else {
            rest.push_back(args[i]);
        }
    }
    std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub_pos + 1));
    for (const auto& f : files) {
        const auto tokens = read_config(f, sub);
        out.insert(out.end(), tokens.begin(), tokens.end());
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

nlohmann::json config_json(const DenoiseConfig& c) {
    return {{"lambda1", c.lambda1},
            {"lambda2", c.lambda2},
            {"bound", c.bound},
            {"pg_step", c.pg_step},
            {"pg_max_iters", c.pg_max_iters},
            {"pg_rel_tol", c.pg_rel_tol},
            {"k", c.k},
            {"patch_fraction", c.patch_fraction},
            {"r", c.r},
            {"h", c.h},
            {"k_n", c.k_n},
            {"feature_scale", c.feature_scale},
            {"outer_max_iters", c.outer_max_iters},
            {"outer_rel_tol", c.outer_rel_tol},
            {"cg_tol", c.cg_tol},
            {"cg_max_iters", c.cg_max_iters},
            {"seed", c.seed},
            {"mode", to_string(c.mode)}};
}

nlohmann::json normalization_json(const std::optional<Normalization>& n) {
    if (!n) return nullptr;
    return {{"center", {n->center.x(), n->center.y(), n->center.z()}}, {"scale", n->scale}};
}

Normalization inverse(const Normalization& n) { return {-n.center * n.scale, 1.0 / n.scale}; }

struct DenoiseArgs {
    std::string in, out;
    DenoiseConfig cfg;
    Preprocess pre;
    bool baseline1 = false, baseline2 = false, binary = false, dump_edges = false, dump_pg = false, serial = false;
};

int cmd_denoise(DenoiseArgs a, std::ostream& out) {
    if (a.baseline1) a.cfg.mode = Mode::baseline1;
    if (a.baseline2) a.cfg.mode = Mode::baseline2;
    a.cfg.exec = a.serial ? Exec::serial : Exec::parallel;
    a.cfg.keep_graph = a.dump_edges;
    a.cfg.keep_pg_trace = a.dump_pg;
    a.cfg.validate();

    const auto files = list_frames(a.in);
    Sequence seq = load_frames(files);
    const auto norm = a.pre.apply_to(seq, a.cfg.seed);
    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);

    nlohmann::json frames = nlohmann::json::array();
    std::optional<PointCloud> previous;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        FrameResult r = denoise_frame(seq.frames[t], previous ? &*previous : nullptr, a.cfg);
        previous = r.cloud;

        const std::string stem = files[t].stem().string();
        const fs::path target = out_dir / (stem + "_denoised.ply");
        save_ply(norm ? apply(inverse(*norm), r.cloud) : r.cloud, target, a.binary);

        nlohmann::json fj = to_json(r.report);
        fj["input"] = files[t].filename().string();
        fj["output"] = target.filename().string();
        if (a.dump_edges && r.graph) {
            std::string csv = "i,j,weight\n";
            for (std::size_t e = 0; e < r.graph->i.size(); ++e) {
                csv += std::to_string(r.graph->i[e]) + "," + std::to_string(r.graph->j[e]) + "," + real_str(r.graph->weight[e]) + "\n";
            }
            const fs::path edges = out_dir / (stem + "_edges.csv");
            write_text(edges, csv);
            fj["edges"] = edges.filename().string();
        }
        frames.push_back(std::move(fj));
        out << files[t].filename().string() << ": " << r.report.iterations.size() << " outer iterations"
            << (r.report.converged ? "" : " (not converged)") << " -> " << target.string() << "\n";
    }

    nlohmann::json report{{"config", config_json(a.cfg)}, {"normalization", normalization_json(norm)}, {"frames", frames}};
    write_text(out_dir / "report.json", report.dump(2) + "\n");
    return kExitOk;
}

struct AddNoiseArgs {
    std::string in, out;
    double sigma = 0.0;
    std::uint64_t seed = 1;
    Preprocess pre;
    bool binary = false;
};

int cmd_addnoise(const AddNoiseArgs& a, std::ostream& out) {
    const auto files = list_frames(a.in);
    const fs::path out_dir(a.out);
    if (fs::exists(out_dir) && fs::is_directory(a.in) && fs::equivalent(out_dir, a.in)) {
        throw std::invalid_argument("output directory must differ from the input directory");
    }
    Sequence seq = load_frames(files);
    a.pre.apply_to(seq, a.seed);
    fs::create_directories(out_dir);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const PointCloud noisy = add_gaussian_noise(seq.frames[t], a.sigma, frame_noise_seed(a.seed, 0, t));
        const fs::path target = out_dir / files[t].filename();
        save_ply(noisy, target, a.binary);
        out << files[t].filename().string() << " -> " << target.string() << "\n";
    }
    return kExitOk;
}

struct BenchArgs {
    std::string in, out, name;
    std::vector<double> sigmas = kDefaultSigmas;
    std::vector<std::string> modes = {"full"};
    std::uint64_t noise_seed = 1;
    DenoiseConfig cfg;
    Preprocess pre;
    bool serial = false;
};

int cmd_bench(BenchArgs a, std::ostream& out) {
    a.cfg.exec = a.serial ? Exec::serial : Exec::parallel;
    a.cfg.validate();
    std::vector<Mode> modes;
    for (const auto& m : a.modes) modes.push_back(parse_mode(m));
    for (double s : a.sigmas) {
        if (!(s >= 0.0)) throw std::invalid_argument("sigmas must be >= 0");
    }

    const auto files = list_frames(a.in);
    Sequence clean = load_frames(files);
    a.pre.apply_to(clean, a.noise_seed);
    const std::string name = a.name.empty() ? fs::path(a.in).filename().string() : a.name;

    const auto rows = run_benchmark(name, clean, a.sigmas, a.cfg, modes, a.noise_seed);
    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);
    std::ostringstream csv;
    write_benchmark_csv(csv, rows);
    write_text(out_dir / "bench.csv", csv.str());
    write_text(out_dir / "bench.json", benchmark_json(rows).dump(2) + "\n");

    for (const auto& r : rows) {
        out << name << " frame " << r.frame << " sigma " << real_str(r.sigma) << " " << to_string(r.mode)
            << ": mse " << real_str(r.mse_noisy) << " -> " << real_str(r.mse_denoised) << "\n";
    }
    return kExitOk;
}

struct EvalArgs {
    std::string denoised, truth;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    for (const auto& p : {a.denoised, a.truth}) {
        if (!fs::is_regular_file(p)) throw std::runtime_error("input not found: " + p);
    }
    const PointCloud d = load_ply(a.denoised);
    const PointCloud t = load_ply(a.truth);
    nlohmann::json j{{"mse", json_real(mse(d, t))}, {"snr", json_real(snr(d, t))}};
    out << j.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spatio-temporal graph denoiser for dynamic point cloud sequences", "stgdenoise"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP thread count (0: runtime default)")->check(CLI::NonNegativeNumber);

    DenoiseArgs da;
    auto* denoise = app.add_subcommand("denoise", "Denoise a PLY frame or a directory of frames");
    denoise->add_option("--in", da.in, "Input PLY file or directory (frames ordered by file name)")->required();
    denoise->add_option("--out", da.out, "Output directory")->required();
    add_config_options(*denoise, da.cfg);
    auto* b1 = denoise->add_flag("--baseline1", da.baseline1, "Disable the temporal term");
    auto* b2 = denoise->add_flag("--baseline2", da.baseline2, "Disable metric learning (R = I)");
    b1->excludes(b2);
    denoise->add_flag("--binary", da.binary, "Write binary little-endian PLY");
    denoise->add_flag("--dump-edges", da.dump_edges, "Write the final spatial graph of each frame as CSV (i,j,weight)");
    denoise->add_flag("--dump-pg", da.dump_pg, "Record per-iteration metric learning objectives in report.json");
    denoise->add_flag("--serial", da.serial, "Use the serial reference kernels");
    da.pre.add_to(*denoise);
    add_config_file(*denoise);

    AddNoiseArgs na;
    auto* addnoise = app.add_subcommand("addnoise", "Write copies of PLY frames corrupted by Gaussian noise");
    addnoise->add_option("--in", na.in, "Input PLY file or directory")->required();
    addnoise->add_option("--out", na.out, "Output directory")->required();
    addnoise->add_option("--sigma", na.sigma, "Noise standard deviation, in coordinate units")->required()->check(CLI::NonNegativeNumber);
    addnoise->add_option("--seed", na.seed, "Noise seed")->capture_default_str();
    addnoise->add_flag("--binary", na.binary, "Write binary little-endian PLY");
    na.pre.add_to(*addnoise);
    add_config_file(*addnoise);

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "Noise sweep: corrupt clean frames, denoise, and score");
    bench->add_option("--in", ba.in, "Clean PLY file or directory")->required();
    bench->add_option("--out", ba.out, "Output directory for bench.csv and bench.json")->required();
    bench->add_option("--name", ba.name, "Sequence name in the table (default: input name)");
    bench->add_option("--sigmas", ba.sigmas, "Noise levels")->delimiter(',')->capture_default_str();
    bench->add_option("--modes", ba.modes, "Modes: full, baseline1, baseline2")->delimiter(',')->capture_default_str();
    bench->add_option("--noise-seed", ba.noise_seed, "Noise seed")->capture_default_str();
    add_config_options(*bench, ba.cfg);
    bench->add_flag("--serial", ba.serial, "Use the serial reference kernels");
    ba.pre.add_to(*bench);
    add_config_file(*bench);

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "MSE and SNR of a denoised PLY against the clean one");
    eval->add_option("--denoised", ea.denoised, "Denoised PLY")->required();
    eval->add_option("--truth", ea.truth, "Clean PLY")->required();

    try {
        const auto expanded = expand_config(args, app);
        std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
        app.parse(reversed);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        set_num_threads(threads);
        if (denoise->parsed()) return cmd_denoise(da, out);
        if (addnoise->parsed()) return cmd_addnoise(na, out);
        if (bench->parsed()) return cmd_bench(ba, out);
        return cmd_eval(ea, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace stg::cli
