#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <sys/types.h>

namespace vidloc {

struct CommandResult {
  int exit_code = -1;  // -1 when killed by a signal or timed out
  bool timed_out = false;
  std::string out;
  std::string err;
};

// Runs `command` through /bin/sh -c and collects both output streams.
CommandResult run_command(const std::string& command,
                          std::chrono::milliseconds timeout = std::chrono::minutes(30));

// Quotes a string for safe inclusion in a /bin/sh command line.
std::string shell_quote(const std::string& s);

// A long-lived child speaking a line protocol on stdin/stdout.
class LineChannel {
 public:
  explicit LineChannel(const std::string& command);
  ~LineChannel();

  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  // Sends one line and waits for one line back. nullopt on EOF, timeout, or
  // a dead child.
  std::optional<std::string> request(const std::string& line, std::chrono::milliseconds timeout);

  bool alive() const noexcept { return pid_ > 0; }

 private:
  void shutdown();

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace vidloc
