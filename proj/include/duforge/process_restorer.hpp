#pragma once

#include <cerrno>
#include <csignal>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "duforge/png_io.hpp"
#include "duforge/restore.hpp"
#include "duforge/spec_io.hpp"

namespace duforge {

// Child-process restorer protocol. The engine writes one JSON line
//   {"degraded_path": "...", "spec": {...}}
// to the child's stdin and expects one JSON line
//   {"restored_path": "..."}
// back on its stdout within the timeout. Anything else is a restoration
// error, never a reward penalty.
inline Image run_process_restorer(const std::string& command, const Image& deg,
                                  const DegradationSpec& spec, double timeout_seconds = 60.0) {
    char tmpl[] = "/tmp/duforge_ext_XXXXXX";
    char* dir = mkdtemp(tmpl);
    if (!dir) throw RestorationError("process restorer: mkdtemp failed");
    std::string deg_path = std::string(dir) + "/degraded.png";
    save_png(deg, deg_path);

    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
        throw RestorationError("process restorer: pipe failed");

    pid_t pid = fork();
    if (pid < 0) throw RestorationError("process restorer: fork failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);

    Json req{{"degraded_path", deg_path}, {"spec", spec_to_json(spec)}};
    std::string line = req.dump() + "\n";
    ssize_t off = 0;
    while (off < static_cast<ssize_t>(line.size())) {
        ssize_t n = write(to_child[1], line.data() + off, line.size() - off);
        if (n <= 0) break;
        off += n;
    }
    close(to_child[1]);

    std::string reply;
    bool timed_out = false;
    auto deadline_ms = static_cast<int>(timeout_seconds * 1000.0);
    auto start = std::chrono::steady_clock::now();
    char buf[4096];
    for (;;) {
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        int remain = deadline_ms - static_cast<int>(elapsed);
        if (remain <= 0) {
            timed_out = true;
            break;
        }
        struct pollfd pfd{from_child[0], POLLIN, 0};
        int pr = poll(&pfd, 1, remain);
        if (pr <= 0) {
            timed_out = (pr == 0);
            break;
        }
        ssize_t n = read(from_child[0], buf, sizeof(buf));
        if (n <= 0) break;
        reply.append(buf, static_cast<size_t>(n));
        if (reply.find('\n') != std::string::npos) break;
    }
    close(from_child[0]);

    if (timed_out) {
        kill(pid, SIGKILL);
        waitpid(pid, nullptr, 0);
        throw RestorationError("process restorer: timed out after " +
                               std::to_string(timeout_seconds) + "s");
    }
    int status = 0;
    waitpid(pid, &status, 0);

    auto nl = reply.find('\n');
    if (nl != std::string::npos) reply.resize(nl);
    Json resp = Json::parse(reply, nullptr, false);
    if (resp.is_discarded() || !resp.is_object() || !resp.contains("restored_path") ||
        !resp["restored_path"].is_string())
        throw RestorationError("process restorer: malformed response line");

    try {
        return load_png(resp["restored_path"].get<std::string>());
    } catch (const PngError& e) {
        throw RestorationError(std::string("process restorer: ") + e.what());
    }
}

// Registers "cmd:<shell command>" style handles lazily; plain names must be
// registered up front.
inline RestorerFn make_process_restorer(const std::string& command,
                                        double timeout_seconds = 60.0) {
    return [command, timeout_seconds](const Image& deg, const DegradationSpec& spec) {
        return run_process_restorer(command, deg, spec, timeout_seconds);
    };
}

} // namespace duforge
