#pragma once

// Line protocol for coupling an external plant simulator to the engine.
//
//   engine -> peer   HELLO <schema_version> <n_ders>
//   peer -> engine   HELLO <schema_version> <n_ders>
//   engine -> peer   STEP <tti_index> <u_1> ... <u_N>     applied set points
//   peer -> engine   STATE <tti_index> <x_1> ... <x_N>    outputs after the TTI
//   either side      BYE <reason>
//
// STEP and STATE alternate strictly and tti_index counts up from 0. Reals
// carry 9 significant digits. The engine drives timing; the peer only answers.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "grid5g/engine.hpp"
#include "grid5g/errors.hpp"
#include "grid5g/scenario.hpp"
#include "grid5g/scenario_file.hpp"
#include "grid5g/trace.hpp"

namespace grid5g::bridge {

struct Hello {
  int version = kSchemaVersion;
  std::size_t n_ders = 0;
  bool operator==(const Hello&) const = default;
};
struct Step {
  std::int64_t tti_index = 0;
  std::vector<double> setpoints;
  bool operator==(const Step&) const = default;
};
struct State {
  std::int64_t tti_index = 0;
  std::vector<double> outputs;
  bool operator==(const State&) const = default;
};
struct Bye {
  std::string reason;
  bool operator==(const Bye&) const = default;
};

using Message = std::variant<Hello, Step, State, Bye>;

inline std::string format_message(const Message& m) {
  std::string out;
  auto values = [&out](std::int64_t tti, const std::vector<double>& v) {
    out += ' ';
    out += std::to_string(tti);
    for (double x : v) {
      out += ' ';
      out += format_real(x);
    }
  };
  if (auto* h = std::get_if<Hello>(&m)) {
    out = "HELLO " + std::to_string(h->version) + ' ' + std::to_string(h->n_ders);
  } else if (auto* s = std::get_if<Step>(&m)) {
    out = "STEP";
    values(s->tti_index, s->setpoints);
  } else if (auto* st = std::get_if<State>(&m)) {
    out = "STATE";
    values(st->tti_index, st->outputs);
  } else {
    const auto& b = std::get<Bye>(m);
    out = "BYE " + (b.reason.empty() ? std::string("unspecified") : b.reason);
  }
  return out;
}

/// Parses one frame (without its newline). Throws ProtocolError on anything
/// that is not a well-formed frame.
inline Message parse_message(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto toks = detail::split_ws(line);
  if (toks.empty()) throw ProtocolError("empty frame");
  const auto kind = toks[0];
  auto bad = [&](const char* why) { return ProtocolError(std::string(why) + ": `" + std::string(line) + "`"); };

  if (kind == "BYE") {
    const auto pos = line.find("BYE") + 3;
    return Bye{std::string(detail::trim(line.substr(pos)))};
  }
  if (kind == "HELLO") {
    if (toks.size() != 3) throw bad("HELLO needs a version and a DER count");
    auto v = detail::parse_int(toks[1]);
    auto n = detail::parse_int(toks[2]);
    if (!v || !n || *n < 0) throw bad("malformed HELLO");
    return Hello{static_cast<int>(*v), static_cast<std::size_t>(*n)};
  }
  if (kind == "STEP" || kind == "STATE") {
    if (toks.size() < 2) throw bad("missing tti_index");
    auto tti = detail::parse_int(toks[1]);
    if (!tti || *tti < 0) throw bad("malformed tti_index");
    std::vector<double> vals;
    for (std::size_t k = 2; k < toks.size(); ++k) {
      auto v = detail::parse_double(toks[k]);
      if (!v) throw bad("malformed number");
      vals.push_back(*v);
    }
    if (kind == "STEP") return Step{*tti, std::move(vals)};
    return State{*tti, std::move(vals)};
  }
  throw bad("unknown frame kind");
}

// ---------------------------------------------------------------------------
// Transport

class LineStream {
 public:
  virtual ~LineStream() = default;
  // nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
  virtual void write_line(std::string_view line) = 0;
};

// Newline-framed stream over a pair of file descriptors (a socket or pipes).
class FdLineStream final : public LineStream {
 public:
  FdLineStream(int in_fd, int out_fd, bool owns) : in_(in_fd), out_(out_fd), owns_(owns) {}
  explicit FdLineStream(int socket_fd) : FdLineStream(socket_fd, socket_fd, true) {}
  FdLineStream(const FdLineStream&) = delete;
  FdLineStream& operator=(const FdLineStream&) = delete;
  ~FdLineStream() override {
    if (!owns_) return;
    ::close(in_);
    if (out_ != in_) ::close(out_);
  }

  std::optional<std::string> read_line() override {
    for (;;) {
      if (auto nl = buf_.find('\n'); nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t got = ::read(in_, chunk, sizeof chunk);
      if (got < 0 && errno == EINTR) continue;
      if (got <= 0) {
        if (buf_.empty()) return std::nullopt;
        std::string tail = std::move(buf_);  // unterminated final frame
        buf_.clear();
        return tail;
      }
      buf_.append(chunk, static_cast<std::size_t>(got));
    }
  }

  void write_line(std::string_view line) override {
    std::string frame(line);
    frame += '\n';
    std::size_t off = 0;
    while (off < frame.size()) {
      const ssize_t put = send_or_write(out_, frame.data() + off, frame.size() - off);
      if (put < 0 && errno == EINTR) continue;
      if (put <= 0) throw std::runtime_error(std::string("bridge write failed: ") + std::strerror(errno));
      off += static_cast<std::size_t>(put);
    }
  }

  // Half-close so the peer sees end of stream.
  void shutdown_write() { ::shutdown(out_, SHUT_WR); }

 private:
  static ssize_t send_or_write(int fd, const char* data, std::size_t len) {
    const ssize_t r = ::send(fd, data, len, MSG_NOSIGNAL);
    if (r < 0 && errno == ENOTSOCK) return ::write(fd, data, len);
    return r;
  }

  int in_;
  int out_;
  bool owns_;
  std::string buf_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "HOST:PORT", "tcp:HOST:PORT" or ":PORT".
inline Endpoint parse_endpoint(std::string_view spec) {
  if (spec.rfind("tcp:", 0) == 0) spec.remove_prefix(4);
  const auto colon = spec.rfind(':');
  if (colon == std::string_view::npos) throw InputError("endpoint must be HOST:PORT, got `" + std::string(spec) + "`");
  Endpoint ep;
  if (colon > 0) ep.host = std::string(spec.substr(0, colon));
  auto port = detail::parse_int(spec.substr(colon + 1));
  if (!port || *port < 0 || *port > 65535) throw InputError("bad port in endpoint `" + std::string(spec) + "`");
  ep.port = static_cast<std::uint16_t>(*port);
  return ep;
}

class TcpListener {
 public:
  explicit TcpListener(const Endpoint& ep) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host == "localhost" ? "127.0.0.1" : ep.host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw std::runtime_error("cannot bind: `" + ep.host + "` is not an IPv4 address");
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 1) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw std::runtime_error("cannot bind " + ep.host + ":" + std::to_string(ep.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_ = Endpoint{ep.host, ntohs(addr.sin_port)};
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() { ::close(fd_); }

  const Endpoint& endpoint() const noexcept { return bound_; }

  std::unique_ptr<FdLineStream> accept() {
    int c = -1;
    do {
      c = ::accept(fd_, nullptr, nullptr);
    } while (c < 0 && errno == EINTR);
    if (c < 0) throw std::runtime_error(std::string("accept: ") + std::strerror(errno));
    return std::make_unique<FdLineStream>(c);
  }

 private:
  int fd_ = -1;
  Endpoint bound_;
};

inline std::unique_ptr<FdLineStream> connect_tcp(const Endpoint& ep) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  ::inet_pton(AF_INET, ep.host == "localhost" ? "127.0.0.1" : ep.host.c_str(), &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string why = std::strerror(errno);
    ::close(fd);
    throw std::runtime_error("connect " + ep.host + ":" + std::to_string(ep.port) + ": " + why);
  }
  return std::make_unique<FdLineStream>(fd);
}

// ---------------------------------------------------------------------------
// Engine side of a session

enum class Outcome { Completed, PeerClosed, ProtocolViolation };

struct SessionResult {
  Trace trace;
  Outcome outcome = Outcome::Completed;
  std::string reason;
};

namespace detail {
struct PeerGone {
  std::string reason;
};
}  // namespace detail

/// Runs the scenario with plant outputs supplied by the peer on `link`.
/// The trace gathered so far is returned whatever the outcome.
inline SessionResult run_session(const Scenario& scenario, LineStream& link) {
  SessionResult res;
  Engine engine(scenario);
  const std::size_t n = scenario.ders.size();
  res.trace.n_ders = n;
  res.trace.carriers = scenario.ran.aggregated_carriers;

  auto read_frame = [&link]() -> Message {
    auto line = link.read_line();
    if (!line) throw detail::PeerGone{"peer closed the stream"};
    return parse_message(*line);
  };

  // Attach first so an unsupported scenario fails before any frame is sent.
  engine.attach_plant_driver([&](std::int64_t tti, std::span<const double> applied) {
    link.write_line(format_message(Step{tti, std::vector<double>(applied.begin(), applied.end())}));
    const Message m = read_frame();
    if (auto* b = std::get_if<Bye>(&m)) throw detail::PeerGone{"peer said BYE " + b->reason};
    const auto* st = std::get_if<State>(&m);
    if (!st) throw ProtocolError("expected STATE, got `" + format_message(m) + "`");
    if (st->tti_index != tti)
      throw ProtocolError("STATE for tti " + std::to_string(st->tti_index) + ", expected " + std::to_string(tti));
    if (st->outputs.size() != n)
      throw ProtocolError("STATE carries " + std::to_string(st->outputs.size()) + " outputs, expected " +
                          std::to_string(n));
    return st->outputs;
  });

  try {
    link.write_line(format_message(Hello{kSchemaVersion, n}));
    const Message reply = read_frame();
    if (auto* b = std::get_if<Bye>(&reply)) throw detail::PeerGone{"peer said BYE " + b->reason};
    const auto* hello = std::get_if<Hello>(&reply);
    if (!hello) throw ProtocolError("expected HELLO, got `" + format_message(reply) + "`");
    if (hello->version != kSchemaVersion)
      throw ProtocolError("peer speaks schema_version " + std::to_string(hello->version) + ", expected " +
                          std::to_string(kSchemaVersion));
    if (hello->n_ders != n)
      throw ProtocolError("peer declared " + std::to_string(hello->n_ders) + " DERs, scenario has " + std::to_string(n));

    while (!engine.finished())
      for (auto& r : engine.step_tti()) res.trace.records.push_back(std::move(r));
    link.write_line(format_message(Bye{"done"}));
  } catch (const ProtocolError& e) {
    res.outcome = Outcome::ProtocolViolation;
    res.reason = e.what();
    try {
      link.write_line(format_message(Bye{"protocol_error"}));
    } catch (const std::exception&) {
    }
  } catch (const detail::PeerGone& g) {
    res.outcome = Outcome::PeerClosed;
    res.reason = g.reason;
  } catch (const std::runtime_error& e) {  // transport failure, e.g. a write after the peer hung up
    res.outcome = Outcome::PeerClosed;
    res.reason = e.what();
  }
  return res;
}

}  // namespace grid5g::bridge
