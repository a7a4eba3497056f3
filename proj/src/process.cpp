#include "vidloc/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <csignal>

#include "vidloc/error.hpp"

namespace vidloc {

namespace {

using Clock = std::chrono::steady_clock;

struct Pipe {
  int read = -1;
  int write = -1;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorCode::IoError, "pipe() failed");
  return {fds[0], fds[1]};
}

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

// Parent ignores SIGPIPE once so a child that exits early cannot kill us.
void ignore_sigpipe() {
  static const bool done = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

pid_t spawn_shell(const std::string& command, int stdin_fd, int stdout_fd, int stderr_fd) {
  ignore_sigpipe();
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::IoError, "fork() failed");
  if (pid == 0) {
    ::dup2(stdin_fd, STDIN_FILENO);
    ::dup2(stdout_fd, STDOUT_FILENO);
    ::dup2(stderr_fd, STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  return pid;
}

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

}  // namespace

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out += "'";
  return out;
}

CommandResult run_command(const std::string& command, std::chrono::milliseconds timeout) {
  Pipe in = make_pipe();
  Pipe out = make_pipe();
  Pipe err = make_pipe();
  const pid_t pid = spawn_shell(command, in.read, out.write, err.write);
  close_fd(in.read);
  close_fd(in.write);
  close_fd(out.write);
  close_fd(err.write);

  CommandResult result;
  const auto deadline = Clock::now() + timeout;
  std::array<char, 4096> buf{};
  while (out.read >= 0 || err.read >= 0) {
    std::array<pollfd, 2> fds{{{out.read, POLLIN, 0}, {err.read, POLLIN, 0}}};
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      result.timed_out = true;
      ::kill(pid, SIGKILL);
      break;
    }
    const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(remaining));
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) break;
    for (std::size_t k = 0; k < fds.size(); ++k) {
      if (fds[k].fd < 0 || !(fds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = ::read(fds[k].fd, buf.data(), buf.size());
      int& fd = k == 0 ? out.read : err.read;
      std::string& sink = k == 0 ? result.out : result.err;
      if (n > 0) {
        sink.append(buf.data(), static_cast<std::size_t>(n));
      } else {
        close_fd(fd);
      }
    }
  }
  close_fd(out.read);
  close_fd(err.read);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = result.timed_out ? -1 : decode_status(status);
  return result;
}

LineChannel::LineChannel(const std::string& command) {
  Pipe in = make_pipe();
  Pipe out = make_pipe();
  const int devnull = ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  pid_ = spawn_shell(command, in.read, out.write, devnull >= 0 ? devnull : STDERR_FILENO);
  if (devnull >= 0) ::close(devnull);
  close_fd(in.read);
  close_fd(out.write);
  to_child_ = in.write;
  from_child_ = out.read;
}

LineChannel::~LineChannel() { shutdown(); }

void LineChannel::shutdown() {
  close_fd(to_child_);
  close_fd(from_child_);
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin asks a well-behaved child to exit; give it a moment.
    for (int i = 0; i < 20; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(5000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::optional<std::string> LineChannel::request(const std::string& line,
                                                std::chrono::milliseconds timeout) {
  if (pid_ <= 0) return std::nullopt;
  std::string payload = line;
  payload.push_back('\n');
  std::size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n = ::write(to_child_, payload.data() + written, payload.size() - written);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      shutdown();
      return std::nullopt;
    }
    written += static_cast<std::size_t>(n);
  }

  const auto deadline = Clock::now() + timeout;
  std::array<char, 4096> buf{};
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return reply;
    }
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      shutdown();
      return std::nullopt;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(remaining));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) continue;
    const ssize_t n = ::read(from_child_, buf.data(), buf.size());
    if (n <= 0) {
      shutdown();
      return std::nullopt;
    }
    buffer_.append(buf.data(), static_cast<std::size_t>(n));
  }
}

}  // namespace vidloc
