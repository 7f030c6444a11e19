#pragma once

#include "crt/analysis.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace crt {

enum ExitCode : int { exit_ok = 0, exit_invalid_config = 1, exit_stage_failure = 2, exit_verification_fail = 3 };

/// 64-bit FNV-1a over raw bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);
std::string fnv1a_file(const std::string& path);

/// Flat JSON object whose keys are RunConfig field names. Unknown keys and
/// wrong types throw InvalidArgument; absent keys keep `base` values.
RunConfig parse_config(const std::string& json_text, const RunConfig& base = {});
RunConfig load_config(const std::string& path, const RunConfig& base = {});
std::string config_to_json(const RunConfig& cfg);

/// Verification names accepted by run_command("verify", ...).
const std::vector<std::string>& verify_names();

/// Output directory bookkeeping: files written, seeds, thresholds and
/// timings, flushed to manifest.json.
class RunRecorder {
public:
    RunRecorder(RunConfig cfg, std::string command);
    /// Absolute path for a file under output_dir; records it for the manifest.
    std::string file(const std::string& name);
    void seed(const std::string& name, std::uint64_t value);
    void timing(const std::string& stage, double seconds);
    void threshold(const StatReport& r);
    void fail_stage(const std::string& stage, const std::string& message);
    bool all_passed() const;
    void write_manifest();

private:
    RunConfig cfg_;
    std::string command_;
    std::vector<std::string> files_;
    std::map<std::string, std::uint64_t> seeds_;
    std::vector<std::pair<std::string, double>> timings_;
    std::vector<StatReport> thresholds_;
    std::string failed_stage_, failure_;
};

/// Runs one CLI command ("simulate", "nets", "weights", "deform",
/// "dimension", "verify", "all") and returns an ExitCode. `lemma` selects
/// the verification for "verify" ("all" runs every one). Progress goes to log.
int run_command(const std::string& command, const std::string& lemma, const RunConfig& cfg, std::ostream& log);

}  // namespace crt
