#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace jitdp {

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs `argv[0]` (looked up on PATH) without a shell, feeding `input` to its
/// stdin and capturing stdout/stderr. `cwd` is used when non-empty.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& input = {},
                          const std::filesystem::path& cwd = {});

}  // namespace jitdp
