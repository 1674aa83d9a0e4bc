#include "jitdp/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace jitdp {

namespace {

struct Pipe {
    int fd[2] = {-1, -1};
    Pipe() {
        if (::pipe2(fd, O_CLOEXEC) != 0) throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;
    void close_read() {
        if (fd[0] >= 0) ::close(fd[0]);
        fd[0] = -1;
    }
    void close_write() {
        if (fd[1] >= 0) ::close(fd[1]);
        fd[1] = -1;
    }
};

class SpawnActions {
public:
    SpawnActions() { posix_spawn_file_actions_init(&actions_); }
    ~SpawnActions() { posix_spawn_file_actions_destroy(&actions_); }
    SpawnActions(const SpawnActions&) = delete;
    SpawnActions& operator=(const SpawnActions&) = delete;
    posix_spawn_file_actions_t* get() { return &actions_; }

private:
    posix_spawn_file_actions_t actions_;
};

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          const std::filesystem::path& cwd) {
    if (argv.empty()) throw std::invalid_argument("run_process: empty argv");
    // a child that exits before reading its stdin must not kill us
    static const bool sigpipe_ignored = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)sigpipe_ignored;

    Pipe in, out, err;
    SpawnActions actions;
    posix_spawn_file_actions_adddup2(actions.get(), in.fd[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), out.fd[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), err.fd[1], STDERR_FILENO);
    if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(actions.get(), cwd.c_str());

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    pid_t pid = 0;
    int rc = posix_spawnp(&pid, args[0], actions.get(), nullptr, args.data(), environ);
    if (rc != 0) throw std::runtime_error("spawn " + argv[0] + ": " + std::strerror(rc));

    in.close_read();
    out.close_write();
    err.close_write();
    if (input.empty()) in.close_write();
    else ::fcntl(in.fd[1], F_SETFL, O_NONBLOCK);

    ProcessResult result;
    std::size_t written = 0;
    char buf[65536];
    while (out.fd[0] >= 0 || err.fd[0] >= 0 || in.fd[1] >= 0) {
        pollfd fds[3];
        nfds_t n = 0;
        int out_slot = -1, err_slot = -1, in_slot = -1;
        if (out.fd[0] >= 0) { out_slot = static_cast<int>(n); fds[n++] = {out.fd[0], POLLIN, 0}; }
        if (err.fd[0] >= 0) { err_slot = static_cast<int>(n); fds[n++] = {err.fd[0], POLLIN, 0}; }
        if (in.fd[1] >= 0) { in_slot = static_cast<int>(n); fds[n++] = {in.fd[1], POLLOUT, 0}; }
        if (::poll(fds, n, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        auto drain = [&](int slot, Pipe& p, std::string& sink) {
            if (slot < 0 || fds[slot].revents == 0) return;
            ssize_t got = ::read(p.fd[0], buf, sizeof buf);
            if (got > 0) sink.append(buf, static_cast<std::size_t>(got));
            else if (got == 0 || errno != EINTR) p.close_read();
        };
        drain(out_slot, out, result.out);
        drain(err_slot, err, result.err);
        if (in_slot >= 0 && fds[in_slot].revents != 0) {
            if (fds[in_slot].revents & (POLLERR | POLLHUP)) {
                in.close_write();
            } else {
                ssize_t put = ::write(in.fd[1], input.data() + written, input.size() - written);
                if (put > 0) written += static_cast<std::size_t>(put);
                else if (errno != EAGAIN && errno != EINTR) in.close_write();
                if (written == input.size()) in.close_write();
            }
        }
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return result;
}

}  // namespace jitdp
