#include "daugs/wire.hpp"

#include <bit>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <mutex>
#include <poll.h>
#include <spawn.h>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace daugs {

BackendError::BackendError(Kind kind, int model_id, const std::string& what)
    : Error("backend for model " + std::to_string(model_id) + ": " + to_string(kind) + ": " + what),
      kind_(kind),
      model_id_(model_id) {}

const char* to_string(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::Spawn: return "spawn failed";
    case BackendError::Kind::Handshake: return "handshake failed";
    case BackendError::Kind::Version: return "protocol version mismatch";
    case BackendError::Kind::Shape: return "response shape mismatch";
    case BackendError::Kind::Timeout: return "timeout";
    case BackendError::Kind::Terminated: return "backend terminated";
    case BackendError::Kind::Exit: return "non-zero exit";
    case BackendError::Kind::Protocol: return "protocol violation";
  }
  return "unknown";
}

namespace wire {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

Bytes encode_handshake(std::uint32_t patch, std::uint32_t n_frames, std::uint32_t n_classes) {
  Bytes out{'D', 'W', 'P', '1'};
  put_u32(out, patch);
  put_u32(out, n_frames);
  put_u32(out, n_classes);
  return out;
}

Bytes encode_handshake_reply(std::uint32_t version) {
  Bytes out{'D', 'W', 'P', '1'};
  put_u32(out, version);
  return out;
}

Bytes encode_request(std::uint32_t id, const PatchView& patch) {
  const std::size_t n = static_cast<std::size_t>(patch.size) * patch.size * patch.n_frames;
  Bytes out;
  out.reserve(8 + 4 * n);
  put_u32(out, id);
  put_u32(out, static_cast<std::uint32_t>(4 * n));
  for (int t = 0; t < patch.n_frames; ++t)
    for (int y = 0; y < patch.size; ++y)
      for (int x = 0; x < patch.size; ++x) put_u32(out, std::bit_cast<std::uint32_t>(patch.at(x, y, t)));
  return out;
}

Bytes encode_response(std::uint32_t id, std::span<const float> probs) {
  Bytes out;
  out.reserve(8 + 4 * probs.size());
  put_u32(out, id);
  put_u32(out, static_cast<std::uint32_t>(4 * probs.size()));
  for (float p : probs) put_u32(out, std::bit_cast<std::uint32_t>(p));
  return out;
}

Bytes encode_shutdown() {
  Bytes out;
  put_u32(out, kShutdownId);
  put_u32(out, 0);
  return out;
}

bool read_exact(int fd, std::uint8_t* buf, std::size_t n, int timeout_ms) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::milliseconds(timeout_ms < 0 ? 0 : timeout_ms);
  std::size_t got = 0;
  while (got < n) {
    if (timeout_ms >= 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (left <= 0) throw std::runtime_error("timeout");
      pollfd pfd{fd, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
      }
      if (r == 0) throw std::runtime_error("timeout");
    }
    const ssize_t k = ::read(fd, buf + got, n - got);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("read: ") + std::strerror(errno));
    }
    if (k == 0) {
      if (got == 0) return false;
      throw std::runtime_error("unexpected end of stream");
    }
    got += static_cast<std::size_t>(k);
  }
  return true;
}

void write_all(int fd, const std::uint8_t* buf, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t k = ::write(fd, buf + done, n - done);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("write: ") + std::strerror(errno));
    }
    done += static_cast<std::size_t>(k);
  }
}

}  // namespace wire

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

BackendProcess::BackendProcess(const std::string& command, int model_id, double timeout_s)
    : model_id_(model_id), timeout_ms_(static_cast<int>(std::lround(timeout_s * 1000.0))) {
  ignore_sigpipe();
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) fail(BackendError::Kind::Spawn, "pipe");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail(BackendError::Kind::Spawn, "pipe");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], 0);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 1);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  const std::string script = "exec " + command;
  const char* argv[] = {"/bin/sh", "-c", script.c_str(), nullptr};
  const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (rc != 0) {
    pid_ = -1;
    fail(BackendError::Kind::Spawn, std::strerror(rc));
  }
}

BackendProcess::~BackendProcess() { kill_child(); }

void BackendProcess::kill_child() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void BackendProcess::fail(BackendError::Kind kind, const std::string& what) {
  kill_child();
  throw BackendError(kind, model_id_, what);
}

void BackendProcess::read_or_fail(std::uint8_t* buf, std::size_t n) {
  bool ok = false;
  try {
    ok = wire::read_exact(from_child_, buf, n, timeout_ms_);
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()) == "timeout") fail(BackendError::Kind::Timeout, "no reply within limit");
    fail(BackendError::Kind::Terminated, e.what());
  }
  if (!ok) fail(BackendError::Kind::Terminated, "stream closed");
}

void BackendProcess::handshake(int patch, int n_frames) {
  patch_ = patch;
  const auto hello = wire::encode_handshake(static_cast<std::uint32_t>(patch),
                                            static_cast<std::uint32_t>(n_frames), kNumClasses);
  try {
    wire::write_all(to_child_, hello.data(), hello.size());
  } catch (const std::runtime_error& e) {
    fail(BackendError::Kind::Terminated, e.what());
  }
  std::uint8_t reply[8];
  read_or_fail(reply, sizeof reply);
  if (std::memcmp(reply, "DWP1", 4) != 0) fail(BackendError::Kind::Handshake, "bad handshake magic");
  const std::uint32_t version = wire::get_u32(reply + 4);
  if (version != kWireVersion)
    fail(BackendError::Kind::Version, "backend speaks version " + std::to_string(version));
}

std::vector<float> BackendProcess::request(const PatchView& patch) {
  if (patch.size != patch_) fail(BackendError::Kind::Protocol, "patch size differs from handshake");
  const std::uint32_t id = next_id_++;
  const auto msg = wire::encode_request(id, patch);
  try {
    wire::write_all(to_child_, msg.data(), msg.size());
  } catch (const std::runtime_error& e) {
    fail(BackendError::Kind::Terminated, e.what());
  }
  std::uint8_t head[8];
  read_or_fail(head, sizeof head);
  if (wire::get_u32(head) != id) fail(BackendError::Kind::Protocol, "response id mismatch");
  const std::size_t n = static_cast<std::size_t>(patch_) * patch_ * kNumClasses;
  if (wire::get_u32(head + 4) != 4 * n) fail(BackendError::Kind::Shape, "unexpected payload size");
  std::vector<std::uint8_t> payload(4 * n);
  read_or_fail(payload.data(), payload.size());

  std::vector<float> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = wire::get_f32(payload.data() + 4 * i);
  for (std::size_t i = 0; i < n; i += kNumClasses) {
    const double s = double{probs[i]} + probs[i + 1] + probs[i + 2];
    for (int c = 0; c < kNumClasses; ++c)
      if (!(probs[i + c] >= 0.0f && probs[i + c] <= 1.0f))
        fail(BackendError::Kind::Shape, "probability outside [0, 1]");
    if (std::abs(s - 1.0) > 1e-4) fail(BackendError::Kind::Shape, "class probabilities do not sum to 1");
  }
  return probs;
}

void BackendProcess::shutdown() {
  if (pid_ <= 0) return;
  const auto bye = wire::encode_shutdown();
  try {
    wire::write_all(to_child_, bye.data(), bye.size());
  } catch (const std::runtime_error&) {
    // Child already gone; its exit status decides below.
  }
  ::close(to_child_);
  to_child_ = -1;

  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::milliseconds(std::max(timeout_ms_, 1000));
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) break;
    if (r < 0 && errno != EINTR) break;
    if (clock::now() > deadline) fail(BackendError::Kind::Timeout, "no exit after shutdown");
    ::usleep(2000);
  }
  pid_ = -1;
  ::close(from_child_);
  from_child_ = -1;
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw BackendError(BackendError::Kind::Exit, model_id_,
                       WIFEXITED(status) ? "exit status " + std::to_string(WEXITSTATUS(status))
                                         : "killed by signal");
}

}  // namespace daugs
