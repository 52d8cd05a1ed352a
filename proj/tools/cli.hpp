#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ssgp::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitEvaluation = 4 };

/// Resolved settings for one invocation. Flags override the --config JSON file, which overrides
/// these defaults.
struct RunConfig {
    std::string command;
    std::vector<std::string> inputs;  // eval accepts several score files, every other command one
    std::string output;
    std::string model;
    std::vector<std::string> kernels;  // empty: four Matérn-3/2 latents, or the univariate default
    int latents = 4;
    bool latents_explicit = false;
    std::string mode = "orthogonal";
    double log_rho = -27.631021115928547;  // log(1e-12)
    bool robust = true;
    std::string rule = "joint";
    int max_iters = 20;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    std::optional<double> threshold;  // best-F1 sweep when empty
    std::string dataset_layout = "csv";
    std::string scenario;
    long length = 0;  // synth univariate length, 0 keeps the scenario default
    std::string noise_scale = "variance";
    int threads = 1;
    bool robust_training = false;  // refit once with the points the robust scorer rejects masked out
    bool refine_kernels = false;   // orthogonal mode: re-fit each latent's kernel on its projected series
    std::string curve;             // eval: optional per-threshold CSV
};

/// Default kernel for univariate series: Brownian motion plus a Matérn-modulated cosine.
inline constexpr const char* kUnivariateKernel =
    "brownian(diffusion=0.01) + matern32(lengthscale=50, variance=1) * cosine(period=24, variance=1)";

/// Parses arguments (program name excluded). Throws ssgp::ConfigError on any usage problem.
RunConfig parse_args(const std::vector<std::string>& args);

/// Runs one command. Machine-readable output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssgp::cli
