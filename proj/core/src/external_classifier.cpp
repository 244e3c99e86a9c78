#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>

#include <nlohmann/json.hpp>

#include "spectralx/classifier.hpp"
#include "spectralx/error.hpp"

namespace spectralx {

using json = nlohmann::json;

// Child process with a bidirectional socket on stdin/stdout and a pipe on
// stderr. A socket (rather than a pipe) lets writes use MSG_NOSIGNAL, so a
// dead child surfaces as an error instead of SIGPIPE.
class ExternalClassifier::Process {
 public:
  Process(const std::string& command, std::chrono::milliseconds timeout) : timeout_(timeout) {
    int sv[2];
    int err[2];
    if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) raise("socketpair failed");
    if (pipe2(err, O_CLOEXEC) != 0) {
      close(sv[0]);
      close(sv[1]);
      raise("pipe failed");
    }
    pid_ = fork();
    if (pid_ < 0) raise("fork failed");
    if (pid_ == 0) {
      dup2(sv[1], STDIN_FILENO);
      dup2(sv[1], STDOUT_FILENO);
      dup2(err[1], STDERR_FILENO);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(sv[1]);
    close(err[1]);
    sock_ = sv[0];
    err_ = err[0];
    fcntl(err_, F_SETFL, fcntl(err_, F_GETFL) | O_NONBLOCK);
  }

  ~Process() {
    if (sock_ >= 0) {
      shutdown(sock_, SHUT_RDWR);
      close(sock_);
    }
    if (err_ >= 0) close(err_);
    if (pid_ > 0) {
      int status = 0;
      for (int i = 0; i < 50; ++i) {
        if (waitpid(pid_, &status, WNOHANG) == pid_) return;
        usleep(2000);
      }
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
  }

  // One request line out, one reply line back.
  json exchange(const json& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string line = request.dump() + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
      const ssize_t n = send(sock_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        raise("failed to write to classifier process: " + std::string(std::strerror(errno)));
      }
      sent += static_cast<std::size_t>(n);
    }
    const std::string reply = read_line();
    try {
      return json::parse(reply);
    } catch (const json::exception&) {
      raise("malformed reply from classifier process: " + reply.substr(0, 200));
    }
  }

  [[noreturn]] void raise(const std::string& message) {
    std::string text = "external classifier: " + message;
    const std::string captured = drain_stderr();
    if (!captured.empty()) text += "\nstderr:\n" + captured;
    fail(ErrorKind::kExternalClassifier, text);
  }

 private:
  std::string read_line() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
      const auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        std::string line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) raise("timed out after " + std::to_string(timeout_.count()) + " ms waiting for a reply");
      pollfd pfd{sock_, POLLIN, 0};
      const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready <= 0) continue;
      char chunk[65536];
      const ssize_t n = recv(sock_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) raise("classifier process closed its output" + exit_description());
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string exit_description() {
    int status = 0;
    for (int i = 0; i < 100; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        if (WIFEXITED(status)) return " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
        if (WIFSIGNALED(status)) return " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
        return {};
      }
      usleep(1000);
    }
    return {};
  }

  std::string drain_stderr() {
    std::string out;
    if (err_ < 0) return out;
    char chunk[4096];
    while (true) {
      const ssize_t n = read(err_, chunk, sizeof chunk);
      if (n <= 0) break;
      out.append(chunk, static_cast<std::size_t>(n));
      if (out.size() > 16384) break;
    }
    return out;
  }

  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int sock_ = -1;
  int err_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

ExternalClassifier::ExternalClassifier(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  require(!command_.empty(), ErrorKind::kInvalidArgument, "external classifier command is empty");
  process_ = std::make_unique<Process>(command_, timeout_);
  const json reply = process_->exchange({{"type", "hello"}});
  if (!reply.is_object() || reply.value("type", "") != "hello" || !reply.contains("class_count") ||
      !reply.contains("input_length") || !reply["class_count"].is_number_unsigned() ||
      !reply["input_length"].is_number_unsigned()) {
    process_->raise("invalid handshake reply: " + reply.dump());
  }
  class_count_ = reply["class_count"].get<std::size_t>();
  input_length_ = reply["input_length"].get<std::size_t>();
  if (class_count_ < 2 || input_length_ < 1) process_->raise("handshake reports an unusable shape");
}

ExternalClassifier::~ExternalClassifier() = default;

Matrix ExternalClassifier::predict_rows(const Matrix& batch) const {
  static std::atomic<std::uint64_t> next_id{1};
  const std::uint64_t id = next_id++;
  json signals = json::array();
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    signals.push_back(std::vector<double>(batch.row(r).begin(), batch.row(r).end()));
  }
  const json reply = process_->exchange({{"type", "predict"}, {"id", id}, {"signals", std::move(signals)}});
  if (!reply.is_object() || reply.value("type", "") != "probs") process_->raise("unexpected reply: " + reply.dump().substr(0, 200));
  if (!reply.contains("id") || !reply["id"].is_number_unsigned() || reply["id"].get<std::uint64_t>() != id) {
    process_->raise("reply id mismatch: expected " + std::to_string(id) + ", got " +
                    (reply.contains("id") ? reply["id"].dump() : std::string("none")));
  }
  const json& rows = reply["rows"];
  if (!rows.is_array() || rows.size() != static_cast<std::size_t>(batch.rows())) {
    process_->raise("reply has the wrong number of rows");
  }
  Matrix out(batch.rows(), static_cast<Eigen::Index>(class_count_));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != class_count_) process_->raise("reply row has the wrong width");
    for (std::size_t c = 0; c < class_count_; ++c) {
      if (!rows[r][c].is_number()) process_->raise("reply row contains a non-number");
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    }
  }
  return out;
}

ClassifierHandle external_classifier(const std::string& command, std::chrono::milliseconds timeout) {
  return std::make_shared<ExternalClassifier>(command, timeout);
}

}  // namespace spectralx
