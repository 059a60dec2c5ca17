// Copyright 2026 The chainplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHAINPLAN__REMOTE_HPP_
#define CHAINPLAN__REMOTE_HPP_

#include "chainplan/language.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <memory>
#include <mutex>
#include <string>
#include <variant>

// Client side of the planner wire protocol. One JSON request per plan,
// {"prompt", "max_tokens", "temperature", "top_p"}, answered by
// {"completion"}. Endpoints are HTTP URLs (POST) or child processes that
// exchange one JSON document per line over stdin/stdout.

namespace chainplan
{

struct RemoteRequest
{
  std::string prompt;
  int max_tokens{1024};
  double temperature{0.0};
  double top_p{0.75};

  nlohmann::json to_json() const
  {
    return {{"prompt", prompt}, {"max_tokens", max_tokens}, {"temperature", temperature}, {"top_p", top_p}};
  }
};

using Completion = std::variant<std::string, PlannerFailure>;

/// Pulls "completion" out of a response body.
inline Completion parse_completion_response(std::string_view body)
{
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return PlannerFailure{PlannerErrorKind::bad_response, "response is not a JSON object"};
  }
  const auto it = doc.find("completion");
  if (it == doc.end() || !it->is_string()) {
    return PlannerFailure{PlannerErrorKind::bad_response, "response lacks a string \"completion\""};
  }
  return it->get<std::string>();
}

/// Child process speaking line-delimited JSON on its standard streams.
class ChildProcess
{
public:
  explicit ChildProcess(std::string command) : command_(std::move(command)) {}
  ChildProcess(const ChildProcess &) = delete;
  ChildProcess & operator=(const ChildProcess &) = delete;
  ~ChildProcess() { stop(); }

  bool running() const { return pid_ > 0; }

  bool start()
  {
    static const bool sigpipe_ignored = [] {
      std::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) return false;
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      return false;
    }
    const pid_t pid = fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      return false;
    }
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char *>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    buffer_.clear();
    return true;
  }

  void stop()
  {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

  /// Writes one line and waits for one line back.
  Completion round_trip(const std::string & line, double timeout_s)
  {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration<double>(timeout_s);
    if (!running() && !start()) {
      return PlannerFailure{PlannerErrorKind::connection, "cannot start planner command"};
    }
    const std::string payload = line + "\n";
    std::size_t sent = 0;
    while (sent < payload.size()) {
      const ssize_t n = write(write_fd_, payload.data() + sent, payload.size() - sent);
      if (n < 0) {
        if (errno == EINTR) continue;
        stop();
        return PlannerFailure{PlannerErrorKind::connection, "planner process closed its input"};
      }
      sent += static_cast<std::size_t>(n);
    }
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string out = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return out;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (left <= 0) {
        // a late answer would desynchronize the stream; restart on next use
        stop();
        return PlannerFailure{PlannerErrorKind::timeout, "no response within timeout"};
      }
      pollfd pfd{read_fd_, POLLIN, 0};
      const int r = poll(&pfd, 1, static_cast<int>(left));
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) continue;
      char chunk[4096];
      const ssize_t n = read(read_fd_, chunk, sizeof(chunk));
      if (n <= 0) {
        stop();
        return PlannerFailure{PlannerErrorKind::connection, "planner process exited"};
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

private:
  std::string command_;
  pid_t pid_{-1};
  int write_fd_{-1};
  int read_fd_{-1};
  std::string buffer_;
};

/// A planner endpoint: `http://host:port/path` or `cmd:<shell command>`.
class RemoteClient
{
public:
  explicit RemoteClient(std::string endpoint) : endpoint_(std::move(endpoint))
  {
    if (endpoint_.rfind("http://", 0) == 0) {
      const std::string rest = endpoint_.substr(7);
      const auto slash = rest.find('/');
      host_ = rest.substr(0, slash);
      path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    } else {
      const std::string cmd = endpoint_.rfind("cmd:", 0) == 0 ? endpoint_.substr(4) : endpoint_;
      child_ = std::make_unique<ChildProcess>(cmd);
    }
  }

  const std::string & endpoint() const { return endpoint_; }

  Completion complete(const RemoteRequest & req, double timeout_s)
  {
    const std::string body = req.to_json().dump();
    if (child_) {
      const Completion line = child_->round_trip(body, timeout_s);
      if (const auto * f = std::get_if<PlannerFailure>(&line)) return *f;
      return parse_completion_response(std::get<std::string>(line));
    }
    httplib::Client cli("http://" + host_);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(path_, body, "application/json");
    if (!res) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout ||
          ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= 0.5 * timeout_s)) {
        return PlannerFailure{PlannerErrorKind::timeout, httplib::to_string(err)};
      }
      return PlannerFailure{PlannerErrorKind::connection, httplib::to_string(err)};
    }
    if (res->status != 200) {
      return PlannerFailure{PlannerErrorKind::bad_response, "HTTP status " + std::to_string(res->status)};
    }
    return parse_completion_response(res->body);
  }

private:
  std::string endpoint_;
  std::string host_;
  std::string path_;
  std::unique_ptr<ChildProcess> child_;
};

/// Prompt sent over the wire: the serialized context plus the answer format.
inline std::string planner_prompt(const PlanningContext & ctx)
{
  std::string p = serialize_context(ctx).text;
  p += "\nAnswer with four lines `STAGE <n> <name>: <content>` for Preliminary, Collision, Traffic and Final, "
       "then `TRAJECTORY:` followed by " +
       std::to_string(ctx.plan_steps() + 1) + " ego-frame poses `(x, y, yaw)`, one per line, spaced " +
       detail::num3(ctx.resolution) + " s apart starting now.\n";
  return p;
}

/// Sends the context to an external planner and parses its completion.
/// Every transport or format problem comes back as a PlannerFailure.
inline ParsedPlan remote_plan(
  const PlanningContext & ctx, RemoteClient & client, double timeout_s, const DecodingParams & decoding = {},
  int max_tokens = 1024)
{
  RemoteRequest req{planner_prompt(ctx), max_tokens, decoding.temperature, decoding.top_p};
  Completion c = [&]() -> Completion {
    try {
      return client.complete(req, timeout_s);
    } catch (const std::exception & e) {
      return PlannerFailure{PlannerErrorKind::connection, e.what()};
    }
  }();
  if (const auto * f = std::get_if<PlannerFailure>(&c)) {
    return *f;
  }
  ParsedPlan parsed = parse_planner_output(std::get<std::string>(c), ctx.plan_horizon, ctx.resolution);
  if (auto * out = std::get_if<PlannerOutput>(&parsed)) {
    out->trajectory.start_time = ctx.timestamp;
  }
  return parsed;
}

}  // namespace chainplan

#endif  // CHAINPLAN__REMOTE_HPP_
