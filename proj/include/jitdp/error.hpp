#pragma once

#include <stdexcept>
#include <string>

namespace jitdp {

/// Base of every error raised by the toolkit. `code()` is a stable
/// machine-readable identifier (e.g. "DimMismatch") surfaced by the CLI.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define JITDP_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(const std::string& what) : Error(#Name, what) {}    \
    }

// mining
JITDP_DEFINE_ERROR(RepoNotFound);
JITDP_DEFINE_ERROR(CorruptHistory);
JITDP_DEFINE_ERROR(MissingHistory);
JITDP_DEFINE_ERROR(GitCommandFailed);

// szz
JITDP_DEFINE_ERROR(BlameFailure);
JITDP_DEFINE_ERROR(UnknownHash);

// dataset
JITDP_DEFINE_ERROR(JoinMismatch);
JITDP_DEFINE_ERROR(DimMismatch);
JITDP_DEFINE_ERROR(DuplicateHash);
JITDP_DEFINE_ERROR(MalformedLine);
JITDP_DEFINE_ERROR(TooFewInstances);

// fusion
JITDP_DEFINE_ERROR(NonFiniteLoss);
JITDP_DEFINE_ERROR(VersionMismatch);
JITDP_DEFINE_ERROR(CorruptFile);

// eval
JITDP_DEFINE_ERROR(LengthMismatch);
JITDP_DEFINE_ERROR(EmptyMatrix);
JITDP_DEFINE_ERROR(NoPositives);
JITDP_DEFINE_ERROR(IoError);

// cli
JITDP_DEFINE_ERROR(ConfigError);
JITDP_DEFINE_ERROR(MissingInput);

#undef JITDP_DEFINE_ERROR

}  // namespace jitdp
