#pragma once

#include <string>
#include <vector>

#include "texflow/transfer.hpp"

namespace texflow {

// Raw command-line surface; composite strings ("R:I", "builtin:SEED",
// "PATH:MASK") stay unparsed until make_transfer_config / load_run_inputs.
struct RunOptions {
    std::string mesh_path;
    std::string texture_path;
    std::string guidance_path;
    std::string regions_path;
    std::vector<std::string> styles; // PATH or PATH:MASK
    std::string out_dir = "out";
    std::string extractor = "builtin:0";
    std::string etf_style = "10:10";
    std::string etf_contour = "5:5";
    std::string cache_dir;
    double tau = 5.0;
    double lambda_tv = 2e-5;
    double lr = 0.01;
    int iterations = 1000;
    int scales = 2;
    double beta = 0.25;
    int viewpoints = 250;
    int render_size = 512;
    int texture_size = 2048;
    int feature_downsample = 4;
    uint64_t seed = 0;
    bool random_init = false;
    bool light_lines = false;
    bool debug = false;
    int threads = 0;
    int snapshot_every = 0;
};

// Parses argv into opt without side effects. Returns true on success; on
// failure (or --help/--version) fills `exit_code` and `message` with what
// the process should do. Accepts the same --config files run_cli writes as
// manifests.
bool parse_cli(int argc, const char* const* argv, RunOptions& opt, int& exit_code,
               std::string& message, std::string* manifest_config = nullptr);

// Materializes the numeric/behavioral knobs; throws TransferError on
// malformed composite values (naming the offending token).
TransferConfig make_transfer_config(const RunOptions& opt);

// Loads mesh and images from the option paths.
RunInputs load_run_inputs(const RunOptions& opt, std::vector<std::string>& warnings);

// Full process body: parse, run, write texture.png / loss.csv /
// manifest.txt (+ debug artifacts). Returns the process exit code; 0 iff
// the final texture was written.
int run_cli(int argc, const char* const* argv);

} // namespace texflow
