#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "solar/protocol.hpp"

namespace solar {

/// One connected agent. Sessions are strictly sequential.
class AgentSession {
 public:
  virtual ~AgentSession() = default;
  virtual void send(const std::string& line) = 0;
  virtual std::string receive() = 0;
};

/// In-process policy behind the same line protocol as external agents.
class InProcessSession : public AgentSession {
 public:
  explicit InProcessSession(std::unique_ptr<Policy> policy) : policy_(std::move(policy)), endpoint_(*policy_) {}

  void send(const std::string& line) override {
    if (auto reply = endpoint_.handle(line)) outbox_.push_back(std::move(*reply));
  }

  std::string receive() override {
    if (outbox_.empty()) throw AgentError(AgentError::Kind::Protocol, "agent produced no message");
    std::string line = std::move(outbox_.front());
    outbox_.pop_front();
    return line;
  }

 private:
  std::unique_ptr<Policy> policy_;
  PolicyEndpoint endpoint_;
  std::deque<std::string> outbox_;
};

namespace detail {

/// Line reader/writer over a pair of file descriptors with a receive timeout.
class FdLines {
 public:
  FdLines(int read_fd, int write_fd, std::chrono::milliseconds timeout, bool is_socket)
      : read_fd_(read_fd), write_fd_(write_fd), timeout_(timeout), is_socket_(is_socket) {}

  void send(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = is_socket_ ? ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                   : ::write(write_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw AgentError(AgentError::Kind::Io, std::string("write to agent failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string receive() {
    auto line = try_receive();
    if (!line) throw AgentError(AgentError::Kind::Protocol, "agent closed the stream");
    return std::move(*line);
  }

  /// nullopt on end of stream.
  std::optional<std::string> try_receive() {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) throw AgentError(AgentError::Kind::Timeout, "agent did not answer in time");
      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw AgentError(AgentError::Kind::Io, std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) throw AgentError(AgentError::Kind::Timeout, "agent did not answer in time");
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw AgentError(AgentError::Kind::Io, std::string("read from agent failed: ") + std::strerror(errno));
      }
      if (n == 0) return std::nullopt;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int read_fd_;
  int write_fd_;
  std::chrono::milliseconds timeout_;
  bool is_socket_;
  std::string buffer_;
};

/// Whitespace split honoring single and double quotes. No other shell syntax.
inline std::vector<std::string> split_command(const std::string& cmd) {
  std::vector<std::string> out;
  std::string cur;
  bool have = false;
  char quote = 0;
  for (char ch : cmd) {
    if (quote) {
      if (ch == quote) {
        quote = 0;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '\'' || ch == '"') {
      quote = ch;
      have = true;
    } else if (ch == ' ' || ch == '\t') {
      if (have) out.push_back(std::move(cur));
      cur.clear();
      have = false;
    } else {
      cur.push_back(ch);
      have = true;
    }
  }
  if (quote) throw AgentError(AgentError::Kind::Spawn, "unterminated quote in agent command");
  if (have) out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

/// Agent spawned as a child process speaking over its stdin/stdout.
class SubprocessSession : public AgentSession {
 public:
  explicit SubprocessSession(const std::string& command,
                             std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
    // A dead child must surface as an I/O error, not kill the harness.
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { std::signal(SIGPIPE, SIG_IGN); });

    const std::vector<std::string> args = detail::split_command(command);
    if (args.empty()) throw AgentError(AgentError::Kind::Spawn, "empty agent command");
    int to_child[2], from_child[2], exec_err[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0 || ::pipe2(exec_err, O_CLOEXEC) != 0) {
      throw AgentError(AgentError::Kind::Spawn, std::string("pipe failed: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw AgentError(AgentError::Kind::Spawn, std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::close(exec_err[0]);
      std::vector<char*> argv;
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      ::execvp(argv[0], argv.data());
      const int err = errno;
      [[maybe_unused]] auto w = ::write(exec_err[1], &err, sizeof err);
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::close(exec_err[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    int err = 0;
    ssize_t n;
    do {
      n = ::read(exec_err[0], &err, sizeof err);
    } while (n < 0 && errno == EINTR);
    ::close(exec_err[0]);
    if (n > 0) {
      reap();
      throw AgentError(AgentError::Kind::Spawn, "cannot start agent '" + args[0] + "': " + std::strerror(err));
    }
    lines_.emplace(read_fd_, write_fd_, timeout, false);
  }

  SubprocessSession(const SubprocessSession&) = delete;
  SubprocessSession& operator=(const SubprocessSession&) = delete;

  ~SubprocessSession() override { reap(); }

  void send(const std::string& line) override { lines_->send(line); }
  std::string receive() override { return lines_->receive(); }

 private:
  void reap() {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ <= 0) return;
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::optional<detail::FdLines> lines_;
};

/// Agent reachable over TCP; the harness connects as client.
class TcpSession : public AgentSession {
 public:
  TcpSession(const std::string& host, int port, std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
    if (rc != 0) throw AgentError(AgentError::Kind::Spawn, "cannot resolve " + host + ": " + ::gai_strerror(rc));
    for (addrinfo* p = res; p; p = p->ai_next) {
      fd_ = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, p->ai_addr, p->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) {
      throw AgentError(AgentError::Kind::Spawn, "cannot connect to " + host + ":" + std::to_string(port));
    }
    lines_.emplace(fd_, fd_, timeout, true);
  }

  TcpSession(const TcpSession&) = delete;
  TcpSession& operator=(const TcpSession&) = delete;

  ~TcpSession() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(const std::string& line) override { lines_->send(line); }
  std::string receive() override { return lines_->receive(); }

 private:
  int fd_ = -1;
  std::optional<detail::FdLines> lines_;
};

/// Listening TCP socket serving the line protocol to a policy, one connection at a time.
class TcpPolicyServer {
 public:
  /// Port 0 picks a free port; see port().
  explicit TcpPolicyServer(int port = 0) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw AgentError(AgentError::Kind::Io, "socket failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 4) != 0) {
      ::close(fd_);
      throw AgentError(AgentError::Kind::Io, std::string("bind/listen failed: ") + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  TcpPolicyServer(const TcpPolicyServer&) = delete;
  TcpPolicyServer& operator=(const TcpPolicyServer&) = delete;

  ~TcpPolicyServer() {
    if (fd_ >= 0) ::close(fd_);
  }

  int port() const { return port_; }

  /// Accepts one connection and serves it until the peer closes.
  void serve_one(Policy& policy) {
    const int conn = ::accept(fd_, nullptr, nullptr);
    if (conn < 0) throw AgentError(AgentError::Kind::Io, "accept failed");
    PolicyEndpoint endpoint(policy);
    detail::FdLines lines(conn, conn, std::chrono::hours(24), true);
    try {
      while (auto line = lines.try_receive()) {
        if (line->empty()) continue;
        if (auto reply = endpoint.handle(*line)) lines.send(*reply);
      }
    } catch (...) {
      ::close(conn);
      throw;
    }
    ::close(conn);
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace solar
