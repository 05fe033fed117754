#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "solar/codec.hpp"
#include "solar/env.hpp"
#include "solar/grid_maker.hpp"

// Agent protocol: newline-delimited JSON objects, UTF-8, one message per line.
//
//   env -> agent  {"type":"init","episode_id":str,"demonstrations":[{"input":grid,"output":grid}...],
//                  "test_input":grid,"max_steps":int}
//   env -> agent  {"type":"state","t":int,"current":grid,"clipboard":grid|null}
//   agent -> env  {"type":"action","op":int,"sel":[x,y,h,w]}
//   env -> agent  {"type":"result","reward":number,"terminated":bool,"invalid":str|null}
//   env -> agent  {"type":"end"}
//
// Per episode: init, then (state, action, result)*, then end. The answer grid is
// never sent.

namespace solar {

class AgentError : public std::runtime_error {
 public:
  enum class Kind { Protocol, Timeout, Spawn, Io };

  AgentError(Kind kind, const std::string& detail) : std::runtime_error(detail), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace msg {

struct Init {
  std::string episode_id;
  std::vector<DemoPair> demonstrations;
  Grid test_input;
  int max_steps = 20;

  friend bool operator==(const Init&, const Init&) = default;
};

struct State {
  int t = 0;
  Grid current;
  std::optional<Grid> clipboard;

  friend bool operator==(const State&, const State&) = default;
};

struct ActionMsg {
  Action action;

  friend bool operator==(const ActionMsg&, const ActionMsg&) = default;
};

struct Result {
  double reward = 0.0;
  bool terminated = false;
  std::optional<std::string> invalid;

  friend bool operator==(const Result&, const Result&) = default;
};

struct End {
  friend bool operator==(const End&, const End&) = default;
};

using Message = std::variant<Init, State, ActionMsg, Result, End>;

inline std::string encode(const Message& m) {
  using codec::Json;
  Json j = Json::object();
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Init>) {
          j["type"] = "init";
          j["episode_id"] = v.episode_id;
          Json demos = Json::array();
          for (const auto& d : v.demonstrations) {
            Json jd = Json::object();
            jd["input"] = codec::grid_to_json(d.input);
            jd["output"] = codec::grid_to_json(d.output);
            demos.push_back(std::move(jd));
          }
          j["demonstrations"] = std::move(demos);
          j["test_input"] = codec::grid_to_json(v.test_input);
          j["max_steps"] = v.max_steps;
        } else if constexpr (std::is_same_v<T, State>) {
          j["type"] = "state";
          j["t"] = v.t;
          j["current"] = codec::grid_to_json(v.current);
          j["clipboard"] = codec::optional_grid_to_json(v.clipboard);
        } else if constexpr (std::is_same_v<T, ActionMsg>) {
          j["type"] = "action";
          j["op"] = op_code(v.action.op);
          j["sel"] = codec::selection_to_json(v.action.sel);
        } else if constexpr (std::is_same_v<T, Result>) {
          j["type"] = "result";
          j["reward"] = v.reward;
          j["terminated"] = v.terminated;
          j["invalid"] = v.invalid ? Json(*v.invalid) : Json(nullptr);
        } else {
          j["type"] = "end";
        }
      },
      m);
  return j.dump();
}

/// Strict decode; any malformed line is a protocol error.
inline Message decode(std::string_view line) {
  using codec::get_as;
  using codec::member;
  try {
    const codec::Json j = codec::Json::parse(line);
    const std::string type = get_as<std::string>(j, "type");
    if (type == "init") {
      Init m;
      m.episode_id = get_as<std::string>(j, "episode_id");
      const auto& demos = member(j, "demonstrations");
      if (!demos.is_array()) throw codec::CodecError("demonstrations must be an array");
      for (const auto& d : demos) {
        m.demonstrations.push_back(
            {codec::grid_from_json(member(d, "input")), codec::grid_from_json(member(d, "output"))});
      }
      m.test_input = codec::grid_from_json(member(j, "test_input"));
      m.max_steps = get_as<int>(j, "max_steps");
      return m;
    }
    if (type == "state") {
      return State{get_as<int>(j, "t"), codec::grid_from_json(member(j, "current")),
                   codec::optional_grid_from_json(member(j, "clipboard"))};
    }
    if (type == "action") {
      return ActionMsg{{codec::op_from_json(member(j, "op")), codec::selection_from_json(member(j, "sel"))}};
    }
    if (type == "result") {
      const auto& inv = member(j, "invalid");
      if (!inv.is_null() && !inv.is_string()) throw codec::CodecError("invalid must be string or null");
      return Result{get_as<double>(j, "reward"), get_as<bool>(j, "terminated"),
                    inv.is_null() ? std::nullopt : std::optional<std::string>(inv.get<std::string>())};
    }
    if (type == "end") return End{};
    throw codec::CodecError("unknown message type '" + type + "'");
  } catch (const AgentError&) {
    throw;
  } catch (const std::exception& e) {
    std::string shown(line.substr(0, 120));
    throw AgentError(AgentError::Kind::Protocol, std::string("malformed message: ") + e.what() + " in '" + shown + "'");
  }
}

}  // namespace msg

/// Decision-making side of the protocol.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin(const msg::Init& init) = 0;
  virtual Action act(const msg::State& state) = 0;
  virtual void observe(const msg::Result&) {}
  virtual void finish() {}
};

/// Feeds decoded env messages to a Policy; returns the reply line for state messages.
/// Enforces init, (state, result)*, end ordering on the agent side.
class PolicyEndpoint {
 public:
  explicit PolicyEndpoint(Policy& policy) : policy_(policy) {}

  std::optional<std::string> handle(std::string_view line) {
    msg::Message m = msg::decode(line);
    auto fail = [](const std::string& what) { throw AgentError(AgentError::Kind::Protocol, what); };
    if (auto* init = std::get_if<msg::Init>(&m)) {
      if (phase_ != Phase::Idle) fail("init inside an episode");
      policy_.begin(*init);
      phase_ = Phase::AwaitState;
    } else if (auto* st = std::get_if<msg::State>(&m)) {
      if (phase_ != Phase::AwaitState) fail("unexpected state message");
      phase_ = Phase::AwaitResult;
      return msg::encode(msg::ActionMsg{policy_.act(*st)});
    } else if (auto* res = std::get_if<msg::Result>(&m)) {
      if (phase_ != Phase::AwaitResult) fail("unexpected result message");
      policy_.observe(*res);
      phase_ = Phase::AwaitState;
    } else if (std::holds_alternative<msg::End>(m)) {
      if (phase_ != Phase::AwaitState) fail("unexpected end message");
      policy_.finish();
      phase_ = Phase::Idle;
    } else {
      fail("agent received an action message");
    }
    return std::nullopt;
  }

 private:
  enum class Phase { Idle, AwaitState, AwaitResult };
  Policy& policy_;
  Phase phase_ = Phase::Idle;
};

/// Runs a policy over line streams until EOF. Used by `solar agent`.
inline void serve_policy(Policy& policy, std::istream& in, std::ostream& out) {
  PolicyEndpoint endpoint(policy);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (auto reply = endpoint.handle(line)) {
      out << *reply << '\n';
      out.flush();
    }
  }
}

}  // namespace solar
