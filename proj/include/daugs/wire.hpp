#pragma once

// DAUGS-WIRE: request/response framing between the engine and an external
// segmenter process over the process's stdin/stdout. All integers are u32
// little-endian, all samples f32 little-endian.
//
//   handshake   engine -> "DWP1" | patch | T | n_classes
//               backend -> "DWP1" | version (must be 1)
//   request     id | payload bytes | patch volume (x fastest, then y, then t)
//   response    id | payload bytes | probabilities (class fastest, then x, then y)
//   shutdown    id 0xFFFFFFFF | payload bytes 0

#include <cstdint>
#include <span>
#include <string>
#include <sys/types.h>
#include <vector>

#include "daugs/core.hpp"
#include "daugs/patching.hpp"

namespace daugs {

inline constexpr std::uint32_t kWireVersion = 1;
inline constexpr std::uint32_t kShutdownId = 0xFFFFFFFFu;

class BackendError : public Error {
 public:
  enum class Kind { Spawn, Handshake, Version, Shape, Timeout, Terminated, Exit, Protocol };

  BackendError(Kind kind, int model_id, const std::string& what);
  Kind kind() const { return kind_; }
  int model_id() const { return model_id_; }

 private:
  Kind kind_;
  int model_id_;
};

const char* to_string(BackendError::Kind kind);

namespace wire {

using Bytes = std::vector<std::uint8_t>;

Bytes encode_handshake(std::uint32_t patch, std::uint32_t n_frames, std::uint32_t n_classes);
Bytes encode_handshake_reply(std::uint32_t version);
Bytes encode_request(std::uint32_t id, const PatchView& patch);
Bytes encode_response(std::uint32_t id, std::span<const float> probs);
Bytes encode_shutdown();

void put_u32(Bytes& out, std::uint32_t v);
std::uint32_t get_u32(const std::uint8_t* p);
float get_f32(const std::uint8_t* p);

// Blocking helpers on raw file descriptors. read_exact returns false on a
// clean EOF before any byte; timeout_ms < 0 waits forever. Throw
// std::runtime_error on I/O failure or timeout (message "timeout").
bool read_exact(int fd, std::uint8_t* buf, std::size_t n, int timeout_ms);
void write_all(int fd, const std::uint8_t* buf, std::size_t n);

}  // namespace wire

// One external segmenter process. The child runs `/bin/sh -c "exec <command>"`
// with its stdin/stdout connected to the engine; stderr is inherited.
class BackendProcess {
 public:
  BackendProcess(const std::string& command, int model_id, double timeout_s);
  ~BackendProcess();
  BackendProcess(const BackendProcess&) = delete;
  BackendProcess& operator=(const BackendProcess&) = delete;

  void handshake(int patch, int n_frames);
  std::vector<float> request(const PatchView& patch);
  // Sends the shutdown sentinel and waits for exit; a non-zero exit status
  // raises BackendError(Exit).
  void shutdown();

 private:
  [[noreturn]] void fail(BackendError::Kind kind, const std::string& what);
  void read_or_fail(std::uint8_t* buf, std::size_t n);
  void kill_child();

  int model_id_;
  int timeout_ms_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int patch_ = 0;
  std::uint32_t next_id_ = 0;
};

}  // namespace daugs
