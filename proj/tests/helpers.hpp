#pragma once

// Shared test scaffolding: a wire tap that reassembles frames per
// direction, scripted ACF fixtures, and a tiny PRNG wrapper for
// generators.

#include <map>
#include <string>
#include <vector>

#include "pvgate/acf/acf.hpp"
#include "pvgate/net/sim_reactor.hpp"
#include "pvgate/proto/frame.hpp"
#include "pvgate/proto/messages.hpp"
#include "pvgate/util/hash.hpp"

namespace testutil {

using namespace pvgate;

// Decodes everything delivered at a simulated server endpoint. count()
// and identities are cheap to reset between phases of a test, which is
// how "zero upstream frames" assertions are made.
class FrameTap {
 public:
  void attach(net::SimReactor& sim, const net::Endpoint& server) {
    sim.set_tap(server, [this](std::uint64_t conn, const net::Endpoint&, bool to_server,
                               std::span<const std::uint8_t> bytes) {
      auto& reader = readers_[{conn, to_server}];
      reader.feed(bytes);
      proto::Frame f;
      while (reader.next(f) == proto::FrameDecodeStatus::Ok) {
        if (to_server) {
          ++counts_[f.command];
          if (f.cmd() == proto::Command::CreateChan) {
            if (auto req = proto::parse_create_chan(f)) {
              create_chan_identities.push_back(req->who);
            }
          }
        } else {
          ++reply_counts_[f.command];
        }
        frames.emplace_back(to_server, std::move(f));
      }
    });
  }

  int count(proto::Command c) const {  // client->server frames
    auto it = counts_.find(static_cast<std::uint8_t>(c));
    return it == counts_.end() ? 0 : it->second;
  }
  int reply_count(proto::Command c) const {
    auto it = reply_counts_.find(static_cast<std::uint8_t>(c));
    return it == reply_counts_.end() ? 0 : it->second;
  }
  int total_to_server() const {
    int n = 0;
    for (const auto& [cmd, c] : counts_) n += c;
    return n;
  }

  void reset() {
    counts_.clear();
    reply_counts_.clear();
    frames.clear();
    create_chan_identities.clear();
  }

  std::vector<std::pair<bool, proto::Frame>> frames;
  std::vector<proto::Identity> create_chan_identities;

 private:
  std::map<std::pair<std::uint64_t, bool>, proto::FrameReader> readers_;
  std::map<std::uint8_t, int> counts_;
  std::map<std::uint8_t, int> reply_counts_;
};

// The drift-chamber staple: alice may write ASG dch, everyone may read.
inline acf::Config dchexpert_config() {
  return acf::parse_acf(
      "UAG(dchexpert){alice}\n"
      "ASG(dch){ RULE(1,READ) RULE(1,WRITE){UAG(dchexpert)} }\n"
      "ASG(DEFAULT){ RULE(1,READ) }\n");
}

inline acf::Config permissive_config() {
  return acf::parse_acf("ASG(DEFAULT){ RULE(1,READ) RULE(1,WRITE) }\n");
}

// A hand-driven protocol peer for poking servers at the frame level.
class ScriptClient : public net::ConnectionHandler {
 public:
  void connect(net::SimReactor& sim, const net::Endpoint& ep) {
    sim.connect(ep, [this](net::ConnectionPtr c) {
      conn = std::move(c);
      if (conn) conn->set_handler(this);
      settled = true;
    });
  }

  void send(const proto::Frame& f) {
    if (conn && conn->is_open()) conn->send(proto::encode_frame(f));
  }

  void on_data(net::Connection&, std::span<const std::uint8_t> data) override {
    reader.feed(data);
    proto::Frame f;
    while (reader.next(f) == proto::FrameDecodeStatus::Ok) received.push_back(f);
  }
  void on_closed(net::Connection&) override { closed = true; }

  int count(proto::Command c) const {
    int n = 0;
    for (const auto& f : received) {
      if (f.cmd() == c) ++n;
    }
    return n;
  }
  const proto::Frame* last(proto::Command c) const {
    for (auto it = received.rbegin(); it != received.rend(); ++it) {
      if (it->cmd() == c) return &*it;
    }
    return nullptr;
  }

  net::ConnectionPtr conn;
  proto::FrameReader reader;
  std::vector<proto::Frame> received;
  bool closed = false;
  bool settled = false;
};

// Small deterministic generator for property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t u64() { return util::splitmix64(state_); }
  std::uint32_t below(std::uint32_t n) {
    return n == 0 ? 0 : static_cast<std::uint32_t>(u64() % n);
  }
  bool chance(double p) { return util::uniform_unit(state_) < p; }
  double unit() { return util::uniform_unit(state_); }

 private:
  std::uint64_t state_;
};

// --- Independent ACF oracle -------------------------------------------------
// A deliberately naive rule interpreter plus a random-config generator.
// The production evaluate() is checked against this; keep it dumb.

inline const std::vector<std::string> kOracleUsers = {"alice", "bob", "carol", "gwrun"};
inline const std::vector<std::string> kOracleHosts = {"console1", "offsite"};

inline std::string oracle_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool naive_allow(const acf::Config& c, const std::string& asg,
                        const proto::Identity& who, acf::Level level) {
  const std::vector<acf::Rule>* rules = nullptr;
  if (auto it = c.asgs.find(asg); it != c.asgs.end()) {
    rules = &it->second;
  } else if (auto dit = c.asgs.find("DEFAULT"); dit != c.asgs.end()) {
    rules = &dit->second;
  }
  if (!rules) return false;
  for (const auto& rule : *rules) {
    const bool level_ok = level == acf::Level::Read || rule.level == acf::Level::Write;
    if (!level_ok) continue;
    bool user_ok = rule.uags.empty();
    for (const auto& g : rule.uags) {
      auto git = c.uags.find(g);
      if (git != c.uags.end()) {
        for (const auto& u : git->second) {
          if (u == who.user) user_ok = true;
        }
      }
    }
    bool host_ok = rule.hags.empty();
    for (const auto& g : rule.hags) {
      auto git = c.hags.find(g);
      if (git != c.hags.end()) {
        for (const auto& h : git->second) {
          if (h == oracle_lower(who.host)) host_ok = true;
        }
      }
    }
    if (user_ok && host_ok) return true;
  }
  return false;
}

inline acf::Config random_acf_config(Rng& rng) {
  static const std::vector<std::string> kGroups = {"g0", "g1", "g2"};
  static const std::vector<std::string> kAsgs = {"DEFAULT", "dch", "svt"};
  acf::Config c;
  for (const auto& g : kGroups) {
    if (rng.chance(0.7)) {
      auto& members = c.uags[g];
      for (const auto& u : kOracleUsers) {
        if (rng.chance(0.4)) members.insert(u);
      }
    }
    if (rng.chance(0.5)) {
      auto& members = c.hags[g];
      for (const auto& h : kOracleHosts) {
        if (rng.chance(0.5)) members.insert(h);
      }
    }
  }
  for (const auto& asg : kAsgs) {
    if (asg != "DEFAULT" && !rng.chance(0.8)) continue;
    auto& rules = c.asgs[asg];
    const int n = static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) {
      acf::Rule r;
      r.level = rng.chance(0.5) ? acf::Level::Write : acf::Level::Read;
      for (const auto& g : kGroups) {
        if (c.uags.contains(g) && rng.chance(0.3)) r.uags.push_back(g);
        if (c.hags.contains(g) && rng.chance(0.2)) r.hags.push_back(g);
      }
      rules.push_back(std::move(r));
    }
  }
  c.asgs.try_emplace("DEFAULT");
  return c;
}

inline std::vector<std::string> oracle_asgs(const acf::Config& a, const acf::Config& b) {
  std::vector<std::string> out;
  for (const auto& [name, rules] : a.asgs) out.push_back(name);
  for (const auto& [name, rules] : b.asgs) {
    if (!a.asgs.contains(name)) out.push_back(name);
  }
  out.push_back("nonexistent-asg");
  return out;
}

}  // namespace testutil
