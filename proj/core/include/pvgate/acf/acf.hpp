#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pvgate/proto/value.hpp"

namespace pvgate::acf {

enum class Level : std::uint8_t { Read = 0, Write = 1 };

const char* to_string(Level l);

// One access rule inside an ASG. WRITE implies READ. A rule with no
// UAG/HAG clauses applies to every identity.
struct Rule {
  int asl = 1;  // numeric field of RULE(n,LEVEL); parsed, not interpreted
  Level level = Level::Read;
  std::vector<std::string> uags;
  std::vector<std::string> hags;
  bool operator==(const Rule&) const = default;
};

// Parsed access security file. Host names are stored lowercase (host
// matching is exact, case-insensitive). An ASG named DEFAULT always
// exists, possibly with no rules.
struct Config {
  std::map<std::string, std::set<std::string>> uags;
  std::map<std::string, std::set<std::string>> hags;
  std::map<std::string, std::vector<Rule>> asgs;
  bool operator==(const Config&) const = default;
};

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(const std::string& msg, int line_, int col_);
};

struct UndefinedGroupError : ParseError {
  std::string group;
  UndefinedGroupError(const std::string& group_, int line_, int col_);
};

struct MergeConflictError : std::runtime_error {
  std::string name;
  explicit MergeConflictError(const std::string& name_);
};

// Grammar:
//   UAG(name){u1,u2}  HAG(name){h1}
//   ASG(name){ RULE(1,READ) RULE(1,WRITE){UAG(n),HAG(m)} }
// Whitespace/newline insensitive, `#` starts a line comment.
Config parse_acf(std::string_view text);

// Deterministic text form; parse(render(c)) == c.
std::string render_acf(const Config& c);

enum class MergeMode { Union, Strict };

// Namespaces are unioned. Union mode merges same-named groups memberwise
// and concatenates distinct rules; strict mode raises MergeConflictError
// when a same-named group or ASG differs between inputs.
Config merge_acf(const std::vector<Config>& configs, MergeMode mode = MergeMode::Union);

// Membership for the identity the gateway presents upstream: its user is
// added to every UAG referenced by a WRITE rule (and its host to every
// HAG so referenced, so the gateway can perform any write some user
// could). Unrestricted rules stay unrestricted. Input is not mutated.
Config augment_for_gateway(const Config& c, const proto::Identity& gateway);

struct Decision {
  bool allow = false;
  std::string asg;     // ASG whose rule matched, after DEFAULT fallback
  int rule_index = -1;
  explicit operator bool() const { return allow; }
};

// Default deny. Falls back to DEFAULT when the named ASG is absent.
// Never throws.
Decision evaluate(const Config& c, std::string_view asg, const proto::Identity& who,
                  Level level);

}  // namespace pvgate::acf
